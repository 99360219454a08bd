"""Command-line interface: init-base, train, generate."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .data import read_training_examples
from .generation import generate as run_generate
from .model import init_base_checkpoint
from .training import TrainConfig, train as run_train


@click.group()
def cli():
    """Student query-rewriter: fine-tune on distilled labels and generate."""


@cli.command("init-base")
@click.option("--train-file", required=True, type=click.Path(exists=True),
              help="Exported training JSONL; its text builds the tokenizer vocab.")
@click.option("--extra-corpus", multiple=True, type=click.Path(exists=True),
              help="Additional example files to include in the vocabulary.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--d-model", default=128, type=int)
@click.option("--layers", default=2, type=int)
@click.option("--heads", default=4, type=int)
@click.option("--dropout", default=0.1, type=float)
@click.option("--seed", default=42, type=int)
def init_base(train_file, extra_corpus, out_dir, d_model, layers, heads, dropout, seed):
    """Create a randomly initialized base checkpoint with a corpus tokenizer."""
    corpus = []
    for path in (train_file, *extra_corpus):
        for example in read_training_examples(path):
            corpus.append(example.input)
            corpus.append(example.target)
    path = init_base_checkpoint(
        corpus, out_dir, d_model=d_model, num_layers=layers,
        num_heads=heads, dropout=dropout, seed=seed,
    )
    click.echo(f"initialized base checkpoint at {path}")


@cli.command()
@click.option("--base", "base_checkpoint", required=True, type=click.Path(exists=True))
@click.option("--train-file", required=True, type=click.Path(exists=True))
@click.option("--dev-file", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--epochs", default=10, type=int)
@click.option("--batch-size", default=16, type=int)
@click.option("--grad-accum", default=1, type=int)
@click.option("--peak-lr", default=1e-5, type=float)
@click.option("--warmup-ratio", default=0.1, type=float)
@click.option("--max-input-len", default=384, type=int)
@click.option("--max-output-len", default=64, type=int)
@click.option("--max-steps", default=None, type=int)
@click.option("--seed", default=42, type=int)
def train(base_checkpoint, train_file, dev_file, out_dir, **kwargs):
    """Fine-tune and keep the epoch with the best dev BLEU."""
    config = TrainConfig(**kwargs)
    log = run_train(config, train_file, dev_file, base_checkpoint, out_dir)
    click.echo(
        f"trained {log['epochs'][-1]['steps'] if log['epochs'] else 0} steps; "
        f"best dev BLEU {log['best_dev_bleu']} at epoch {log['best_epoch']}; "
        f"saved to {out_dir}"
    )


@cli.command()
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--tasks", "tasks_file", required=True, type=click.Path(exists=True),
              help="Pipeline tasks JSONL or an exported examples JSONL.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--max-output-len", default=64, type=int)
@click.option("--batch-size", default=32, type=int)
def generate(checkpoint, tasks_file, out_path, max_output_len, batch_size):
    """Greedy-decode rewrites (method tag "student") for every input row."""
    rows = run_generate(
        checkpoint, tasks_file, out_path,
        max_output_len=max_output_len, batch_size=batch_size,
    )
    failed = sum(1 for r in rows if r["failed"])
    click.echo(f"wrote {len(rows)} rewrites ({failed} fallbacks) to {out_path}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.Abort:
        return 1
    except (FileNotFoundError, ValueError) as exc:
        click.echo(f"input error: {exc}", err=True)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        click.echo(f"runtime failure: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
