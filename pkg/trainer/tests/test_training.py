import json

import pytest
import torch

from rewrite_trainer.training import TrainConfig, _check_finite, train
from rewrite_trainer.model import init_base_checkpoint
from rewrite_trainer.generation import generate

from conftest import overfit_examples, write_jsonl


def test_defaults_match_reference_recipe():
    config = TrainConfig()
    assert config.epochs == 10
    assert config.batch_size == 16
    assert config.grad_accum == 1
    assert config.peak_lr == 1e-5
    assert config.warmup_ratio == 0.1
    assert config.max_input_len == 384
    assert config.max_output_len == 64
    assert config.seed == 42


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(peak_lr=0.0)
    with pytest.raises(ValueError):
        TrainConfig(warmup_ratio=1.5)


def test_check_finite_guard():
    _check_finite(torch.tensor(1.0), 0)
    with pytest.raises(RuntimeError, match="non-finite"):
        _check_finite(torch.tensor(float("nan")), 3)
    with pytest.raises(RuntimeError, match="non-finite"):
        _check_finite(torch.tensor(float("inf")), 3)


def test_overfit_reaches_bleu_threshold(overfit_run):
    log = overfit_run["log"]
    assert log["best_dev_bleu"] >= 0.95
    assert log["epochs"][-1]["steps"] <= 200
    assert log["config"]["seed"] == 42  # defaults echoed in the log header


def test_overfit_loss_decreases_smoothed(overfit_run):
    losses = overfit_run["log"]["step_losses"][:20]
    assert len(losses) == 20
    window = 5
    smoothed = [
        sum(losses[i : i + window]) / window for i in range(len(losses) - window + 1)
    ]
    assert all(b < a for a, b in zip(smoothed, smoothed[1:]))


def test_training_log_written(overfit_run):
    log_path = overfit_run["model"] / "training_log.json"
    assert log_path.exists()
    on_disk = json.loads(log_path.read_text())
    assert on_disk["best_dev_bleu"] == overfit_run["log"]["best_dev_bleu"]
    assert on_disk["config"]["peak_lr"] == 3e-3


def test_zero_epochs_keeps_base_outputs(tmp_path, overfit_files):
    train_path, dev_path = overfit_files
    base_dir = tmp_path / "base"
    rows = overfit_examples(8)
    corpus = [r["input"] for r in rows] + [r["target"] for r in rows]
    init_base_checkpoint(corpus, base_dir, d_model=64, num_layers=1, num_heads=2, seed=7)
    out_dir = tmp_path / "model"
    config = TrainConfig(epochs=0, batch_size=8)
    log = train(config, train_path, dev_path, base_dir, out_dir)
    assert log["epochs"] == []
    assert log["best_dev_bleu"] is None
    inputs = write_jsonl(rows, tmp_path / "inputs.jsonl")
    base_out = generate(base_dir, inputs, tmp_path / "base_gen.jsonl")
    tuned_out = generate(out_dir, inputs, tmp_path / "tuned_gen.jsonl")
    assert [r["rewrite"] for r in base_out] == [r["rewrite"] for r in tuned_out]


def test_empty_training_file_rejected(tmp_path, overfit_files):
    _, dev_path = overfit_files
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    base = tmp_path / "base"
    rows = overfit_examples(4)
    init_base_checkpoint([r["input"] for r in rows], base, d_model=64, num_layers=1, num_heads=2)
    with pytest.raises(ValueError, match="no examples"):
        train(TrainConfig(epochs=1), empty, dev_path, base, tmp_path / "out")
