"""Rewrite-method orchestration and LLM output sanitization.

Methods: original (identity), human (annotated rewrite), rw_zsl / rw_fsl
(instructed LLM rewriter without / with demonstrations), ed_self (edit the
same model's rw_fsl output), ed_file (edit initial rewrites loaded from a
rewrite file, e.g. a student model's). LLM-backed methods render prompts,
call the client, and sanitize the completion into a single standalone query.

A call that still fails after retries degrades to the original question and
is flagged, so retrieval evaluation never loses queries.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
import re

from .corpus import RewriteTask
from .llm import LlmClient, LlmError, prompt_sha256
from .prompting import (
    DEFAULT_CONTEXT_CHAR_BUDGET,
    Demonstration,
    Instruction,
    default_demonstrations,
    default_editor_instruction,
    default_rewriter_instruction,
    render_editor_prompt,
    render_rewriter_prompt,
)

METHODS = ("original", "human", "rw_zsl", "rw_fsl", "ed_self", "ed_file")
LLM_METHODS = ("rw_zsl", "rw_fsl", "ed_self", "ed_file")

# Versioned preamble rules (v1): lines the sanitizer skips before taking the
# first content line.
PREAMBLE_PATTERNS = [
    re.compile(r"(?i)^(sure|certainly|of course|okay|ok)\b[\s!.,]*$"),
    re.compile(r"(?i)^.*\bhere\s+(?:is|'s)\b[^:]*:\s*$"),
    re.compile(r"(?i)^(?:the\s+)?(?:rewritten|revised|edited|new)\s+(?:question|query|rewrite|version)(?:\s+is)?\s*:?\s*$"),
]
_INLINE_PREAMBLE = re.compile(r"(?i)^(?:\S+[!.,]\s+)?here\s+(?:is|'s)\b[^:]*:\s*(.+)$")
_LABEL = re.compile(r"(?i)^(?:rewrite|edit|rewritten question|revised question)\s*:\s*")
_QUOTE_PAIRS = {('"', '"'), ("'", "'"), ("“", "”"), ("‘", "’")}


class SanitizeError(ValueError):
    """The completion contains no usable rewrite text."""


@dataclass
class RewriteRecord:
    conversation_id: str
    turn_no: int
    method: str
    rewrite: str
    initial_rewrite: str | None = None
    latency_ms: float = 0.0
    prompt_hash: str | None = None
    failed: bool = False
    fallback: bool = False

    @property
    def query_id(self) -> str:
        return f"{self.conversation_id}_{self.turn_no}"


def sanitize_output(raw: str) -> str:
    """Collapse an LLM completion to a single clean rewrite line.

    Skips known preamble lines, strips Rewrite:/Edit: labels and surrounding
    quote pairs, and returns the first non-empty result. Idempotent.
    """
    for line in raw.splitlines():
        candidate = line.strip()
        if not candidate:
            continue
        if any(p.match(candidate) for p in PREAMBLE_PATTERNS):
            continue
        inline = _INLINE_PREAMBLE.match(candidate)
        if inline:
            candidate = inline.group(1).strip()
        while True:
            stripped = _LABEL.sub("", candidate, count=1)
            if stripped == candidate:
                break
            candidate = stripped.strip()
        while len(candidate) >= 2 and (candidate[0], candidate[-1]) in _QUOTE_PAIRS:
            candidate = candidate[1:-1].strip()
        if candidate:
            return candidate
    raise SanitizeError("unusable completion")


def generate_rewrites(
    method: str,
    tasks: list[RewriteTask],
    client: LlmClient | None = None,
    initials: dict[tuple[str, int], str] | None = None,
    instruction: Instruction | None = None,
    demos: list[Demonstration] | None = None,
    context_char_budget: int | None = DEFAULT_CONTEXT_CHAR_BUDGET,
) -> list[RewriteRecord]:
    """Produce one RewriteRecord per task, in task order.

    ed_file requires an initials map covering every task. ed_self uses the
    given initials if provided, otherwise runs the rw_fsl pass with the same
    client first.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method: {method!r}")
    if method == "original":
        return [
            RewriteRecord(t.conversation_id, t.turn_no, method, t.question)
            for t in tasks
        ]
    if method == "human":
        records = []
        for t in tasks:
            if t.human_rewrite:
                records.append(RewriteRecord(t.conversation_id, t.turn_no, method, t.human_rewrite))
            else:
                records.append(
                    RewriteRecord(t.conversation_id, t.turn_no, method, t.question, fallback=True)
                )
        return records

    if client is None:
        raise ValueError(f"method {method!r} requires an LLM client")

    if method in ("rw_zsl", "rw_fsl"):
        instruction = instruction or default_rewriter_instruction()
        if demos is None:
            demos = [] if method == "rw_zsl" else default_demonstrations()
        return _run_llm(
            method, tasks, client,
            lambda task: render_rewriter_prompt(instruction, demos, task, context_char_budget),
            initials=None,
        )

    # editor methods
    if method == "ed_self" and initials is None:
        fsl_records = generate_rewrites(
            "rw_fsl", tasks, client, context_char_budget=context_char_budget
        )
        initials = {(r.conversation_id, r.turn_no): r.rewrite for r in fsl_records}
    if initials is None:
        raise ValueError("ed_file requires an initials map")
    missing = [t.query_id for t in tasks if (t.conversation_id, t.turn_no) not in initials]
    if missing:
        raise ValueError(f"missing initial rewrites for tasks: {', '.join(missing[:10])}")
    instruction = instruction or default_editor_instruction()
    if demos is None:
        demos = default_demonstrations()
    return _run_llm(
        method, tasks, client,
        lambda task: render_editor_prompt(
            instruction, demos, task,
            initials[(task.conversation_id, task.turn_no)], context_char_budget,
        ),
        initials=initials,
    )


def _run_llm(method, tasks, client, render, initials):
    def one(task: RewriteTask) -> RewriteRecord:
        prompt = render(task)
        initial = initials.get((task.conversation_id, task.turn_no)) if initials else None
        try:
            response = client.complete_prompt(prompt)
            rewrite = sanitize_output(response.text)
            return RewriteRecord(
                conversation_id=task.conversation_id,
                turn_no=task.turn_no,
                method=method,
                rewrite=rewrite,
                initial_rewrite=initial,
                latency_ms=0.0 if response.cached else response.latency_ms,
                prompt_hash=prompt_sha256(prompt),
            )
        except (LlmError, SanitizeError):
            return RewriteRecord(
                conversation_id=task.conversation_id,
                turn_no=task.turn_no,
                method=method,
                rewrite=task.question,
                initial_rewrite=initial,
                prompt_hash=prompt_sha256(prompt),
                failed=True,
            )

    if len(tasks) <= 1 or client.concurrency <= 1:
        return [one(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=client.concurrency) as pool:
        return list(pool.map(one, tasks))


def failed_count(records: list[RewriteRecord]) -> int:
    return sum(1 for r in records if r.failed)


def write_records(records: list[RewriteRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for r in records:
            handle.write(json.dumps(record_to_dict(r), ensure_ascii=False) + "\n")


def read_records(path: str | Path) -> list[RewriteRecord]:
    """Parse a rewrite file. Accepts any non-empty method tag (e.g. "student")."""
    records = []
    seen: set[tuple[str, int, str]] = set()
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            for field in ("conversation_id", "turn_no", "method", "rewrite"):
                if field not in d:
                    raise ValueError(f"rewrite file line {line_no}: missing {field!r}")
            if not str(d["method"]).strip():
                raise ValueError(f"rewrite file line {line_no}: empty method")
            if not str(d["rewrite"]).strip():
                raise ValueError(f"rewrite file line {line_no}: empty rewrite")
            key = (str(d["conversation_id"]), int(d["turn_no"]), d["method"])
            if key in seen:
                raise ValueError(f"rewrite file line {line_no}: duplicate record {key}")
            seen.add(key)
            records.append(
                RewriteRecord(
                    conversation_id=str(d["conversation_id"]),
                    turn_no=int(d["turn_no"]),
                    method=d["method"],
                    rewrite=d["rewrite"],
                    initial_rewrite=d.get("initial_rewrite"),
                    latency_ms=float(d.get("latency_ms", 0.0)),
                    prompt_hash=d.get("prompt_hash"),
                    failed=bool(d.get("failed", False)),
                    fallback=bool(d.get("fallback", False)),
                )
            )
    return records


def record_to_dict(r: RewriteRecord) -> dict:
    return {
        "conversation_id": r.conversation_id,
        "turn_no": r.turn_no,
        "method": r.method,
        "rewrite": r.rewrite,
        "initial_rewrite": r.initial_rewrite,
        "latency_ms": r.latency_ms,
        "prompt_hash": r.prompt_hash,
        "failed": r.failed,
        "fallback": r.fallback,
    }


def initials_map(records: list[RewriteRecord]) -> dict[tuple[str, int], str]:
    return {(r.conversation_id, r.turn_no): r.rewrite for r in records}
