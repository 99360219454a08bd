"""Greedy generation of student rewrites in the pipeline's rewrite-file format."""

from __future__ import annotations

import time
from pathlib import Path

import torch

from .data import Example, read_generation_inputs, write_student_rewrites
from .model import load_checkpoint

METHOD_TAG = "student"


def greedy_decode(model, tokenizer, inputs: list[str], max_output_len: int = 64,
                  batch_size: int = 32) -> list[str]:
    outputs = []
    for start in range(0, len(inputs), batch_size):
        chunk = inputs[start : start + batch_size]
        encoded = tokenizer(
            chunk, padding=True, truncation=True, max_length=384, return_tensors="pt"
        )
        generated = model.generate(
            input_ids=encoded.input_ids,
            attention_mask=encoded.attention_mask,
            max_new_tokens=max_output_len,
            do_sample=False,
            num_beams=1,
        )
        outputs.extend(
            tokenizer.decode(row, skip_special_tokens=True).strip() for row in generated
        )
    return outputs


def generate(
    checkpoint: str | Path,
    tasks_file: str | Path,
    out_path: str | Path,
    max_output_len: int = 64,
    batch_size: int = 32,
) -> list[dict]:
    """Decode one rewrite per input row and write the rewrite JSONL.

    Accepts either the pipeline's tasks file or an exported examples file. An
    empty decode falls back to the row's question and is flagged failed, so
    the output always parses downstream.
    """
    examples = read_generation_inputs(tasks_file)
    model, tokenizer = load_checkpoint(checkpoint)
    model.eval()
    rows = []
    with torch.no_grad():
        started = time.monotonic()
        texts = greedy_decode(
            model, tokenizer, [e.input for e in examples],
            max_output_len=max_output_len, batch_size=batch_size,
        )
        elapsed_ms = (time.monotonic() - started) * 1000.0
    per_query_ms = elapsed_ms / len(examples)
    for example, text in zip(examples, texts):
        failed = not text
        rows.append(
            {
                "conversation_id": example.conversation_id,
                "turn_no": example.turn_no,
                "method": METHOD_TAG,
                "rewrite": text if text else example.question,
                "initial_rewrite": None,
                "latency_ms": round(per_query_ms, 3),
                "prompt_hash": None,
                "failed": failed,
                "fallback": failed,
            }
        )
    write_student_rewrites(rows, out_path)
    return rows
