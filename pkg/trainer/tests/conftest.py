import json
from pathlib import Path

import pytest


def overfit_examples(n=32):
    """Small synthetic rewrite corpus in the exported-example format."""
    rows = []
    for i in range(n):
        inp = (
            f"<Que> What is item {i}? <Ans> Item {i} is a widget of class {i % 5}. "
            f"<Que> What color is it?"
        )
        tgt = f"What color is the widget item {i} of class {i % 5}?"
        rows.append(
            {
                "input": inp,
                "target": tgt,
                "meta": {"conversation_id": f"c{i}", "turn_no": 2, "label_source": "rw_fsl"},
            }
        )
    return rows


def write_jsonl(rows, path: Path):
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path


@pytest.fixture(scope="session")
def overfit_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("overfit")
    rows = overfit_examples()
    train_path = write_jsonl(rows, root / "train.jsonl")
    # dev == train: the overfit sanity check selects on the memorized set
    dev_path = write_jsonl(rows, root / "dev.jsonl")
    return train_path, dev_path


@pytest.fixture(scope="session")
def overfit_run(tmp_path_factory, overfit_files):
    """One shared overfit training run (the expensive fixture)."""
    from rewrite_trainer.data import read_training_examples
    from rewrite_trainer.model import init_base_checkpoint
    from rewrite_trainer.training import TrainConfig, train

    train_path, dev_path = overfit_files
    root = tmp_path_factory.mktemp("run")
    base_dir = root / "base"
    corpus = []
    for example in read_training_examples(train_path):
        corpus.extend([example.input, example.target])
    init_base_checkpoint(corpus, base_dir, d_model=128, num_layers=2, num_heads=4,
                         dropout=0.0, seed=42)
    out_dir = root / "model"
    config = TrainConfig(
        epochs=100, batch_size=16, grad_accum=1, peak_lr=3e-3,
        warmup_ratio=0.1, seed=42, max_steps=200,
    )
    log = train(config, train_path, dev_path, base_dir, out_dir)
    return {"base": base_dir, "model": out_dir, "log": log,
            "train_file": train_path, "dev_file": dev_path}
