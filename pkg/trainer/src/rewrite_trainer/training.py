"""Fine-tuning loop: cross-entropy, AdamW, linear warmup, best-BLEU selection.

Defaults follow the reference recipe: 10 epochs, batch size 16, gradient
accumulation 1, peak learning rate 1e-5, warmup ratio 0.1, input/output caps
384/64, seed 42. Dev BLEU is computed by greedy generation after every epoch,
and the best-scoring weights are the ones saved.
"""

from __future__ import annotations

import json
import math
import random
import time
from copy import deepcopy
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from transformers import get_linear_schedule_with_warmup

from .bleu import corpus_bleu
from .data import Example, read_training_examples
from .generation import greedy_decode
from .model import load_checkpoint


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 16
    grad_accum: int = 1
    peak_lr: float = 1e-5
    warmup_ratio: float = 0.1
    max_input_len: int = 384
    max_output_len: int = 64
    seed: int = 42
    max_steps: int | None = None  # optional cap on optimizer steps

    def __post_init__(self):
        for name in ("epochs", "batch_size", "grad_accum", "max_input_len", "max_output_len"):
            if getattr(self, name) < (0 if name == "epochs" else 1):
                raise ValueError(f"{name} must be positive")
        if self.peak_lr <= 0 or not (0 <= self.warmup_ratio <= 1):
            raise ValueError("bad learning-rate or warmup settings")


def _encode_batch(tokenizer, batch: list[Example], config: TrainConfig):
    encoded = tokenizer(
        [e.input for e in batch],
        padding=True,
        truncation=True,
        max_length=config.max_input_len,
        return_tensors="pt",
    )
    rows = []
    for example in batch:
        ids = tokenizer(example.target, add_special_tokens=False).input_ids
        rows.append(ids[: config.max_output_len - 1] + [tokenizer.eos_token_id])
    width = max(len(r) for r in rows)
    labels = torch.full((len(rows), width), -100, dtype=torch.long)
    for i, row in enumerate(rows):
        labels[i, : len(row)] = torch.tensor(row, dtype=torch.long)
    return encoded.input_ids, encoded.attention_mask, labels


def _check_finite(loss: torch.Tensor, step: int) -> None:
    if not torch.isfinite(loss):
        raise RuntimeError(
            f"non-finite training loss {loss.item()!r} at optimizer step {step}; "
            "lower the learning rate or inspect the data"
        )


def evaluate_dev_bleu(model, tokenizer, dev: list[Example], config: TrainConfig,
                      batch_size: int = 32) -> float:
    outputs = greedy_decode(
        model, tokenizer, [e.input for e in dev],
        max_output_len=config.max_output_len, batch_size=batch_size,
    )
    return corpus_bleu(outputs, [e.target for e in dev])


def train(
    config: TrainConfig,
    train_file: str | Path,
    dev_file: str | Path,
    base_checkpoint: str | Path,
    out_dir: str | Path,
) -> dict:
    """Fine-tune the base checkpoint; returns the training log (also saved).

    Saves the best-dev-BLEU weights under out_dir along with training_log.json.
    """
    train_examples = read_training_examples(train_file)
    dev_examples = read_training_examples(dev_file)
    model, tokenizer = load_checkpoint(base_checkpoint)

    torch.manual_seed(config.seed)
    rng = random.Random(config.seed)

    steps_per_epoch = math.ceil(
        math.ceil(len(train_examples) / config.batch_size) / config.grad_accum
    )
    total_steps = steps_per_epoch * config.epochs
    if config.max_steps is not None:
        total_steps = min(total_steps, config.max_steps)

    log: dict = {
        "config": asdict(config),
        "base_checkpoint": str(base_checkpoint),
        "train_examples": len(train_examples),
        "dev_examples": len(dev_examples),
        "planned_steps": total_steps,
        "step_losses": [],
        "epochs": [],
    }

    optimizer = torch.optim.AdamW(model.parameters(), lr=config.peak_lr)
    scheduler = get_linear_schedule_with_warmup(
        optimizer, int(total_steps * config.warmup_ratio), max(total_steps, 1)
    )

    best_bleu = -1.0
    best_state = deepcopy(model.state_dict())
    best_epoch = 0
    step = 0
    started = time.monotonic()

    for epoch in range(1, config.epochs + 1):
        if config.max_steps is not None and step >= config.max_steps:
            break
        model.train()
        order = list(range(len(train_examples)))
        rng.shuffle(order)
        micro_batches = [
            [train_examples[i] for i in order[s : s + config.batch_size]]
            for s in range(0, len(order), config.batch_size)
        ]
        accumulated = 0
        for micro in micro_batches:
            input_ids, attention_mask, labels = _encode_batch(tokenizer, micro, config)
            loss = model(
                input_ids=input_ids, attention_mask=attention_mask, labels=labels
            ).loss
            _check_finite(loss, step)
            (loss / config.grad_accum).backward()
            accumulated += 1
            if accumulated == config.grad_accum or micro is micro_batches[-1]:
                optimizer.step()
                scheduler.step()
                optimizer.zero_grad()
                log["step_losses"].append(round(float(loss.detach()), 6))
                accumulated = 0
                step += 1
                if config.max_steps is not None and step >= config.max_steps:
                    break
        model.eval()
        with torch.no_grad():
            dev_bleu = evaluate_dev_bleu(model, tokenizer, dev_examples, config)
        log["epochs"].append({"epoch": epoch, "steps": step, "dev_bleu": round(dev_bleu, 6)})
        if dev_bleu > best_bleu:
            best_bleu = dev_bleu
            best_state = deepcopy(model.state_dict())
            best_epoch = epoch

    log["best_epoch"] = best_epoch
    log["best_dev_bleu"] = round(best_bleu, 6) if best_bleu >= 0 else None
    log["wall_seconds"] = round(time.monotonic() - started, 2)

    model.load_state_dict(best_state)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    (out_dir / "training_log.json").write_text(
        json.dumps(log, indent=2) + "\n", encoding="utf-8"
    )
    return log
