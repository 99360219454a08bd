"""Reading the exported training files and the upstream tasks format.

The wire formats are the contract with the rewriting pipeline:
  - training examples: JSONL {input, target, meta{conversation_id, turn_no, ...}}
    where input encodes the dialog as "<Que> q1 <Ans> a1 ... <Que> q_t"
  - tasks: JSONL with context pairs + question, encoded here the same way
  - generated rewrites: JSONL rows matching the pipeline's rewrite schema,
    method "student"
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

QUESTION_MARKER = "<Que>"
ANSWER_MARKER = "<Ans>"


@dataclass(frozen=True)
class Example:
    input: str
    target: str | None
    conversation_id: str
    turn_no: int
    question: str  # the current question, used as generation fallback


def encode_dialog(context: list[tuple[str, str]], question: str) -> str:
    parts = []
    for q, a in context:
        parts.append(f"{QUESTION_MARKER} {q}")
        parts.append(f"{ANSWER_MARKER} {a}")
    parts.append(f"{QUESTION_MARKER} {question}")
    return " ".join(parts)


def _last_question(encoded: str) -> str:
    idx = encoded.rfind(QUESTION_MARKER)
    if idx < 0:
        return encoded.strip()
    return encoded[idx + len(QUESTION_MARKER):].strip()


def read_training_examples(path: str | Path) -> list[Example]:
    """Load {input, target, meta} rows; both input and target are required."""
    examples = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if "input" not in row or not str(row.get("input", "")).strip():
                raise ValueError(f"{path} line {line_no}: missing input")
            if not str(row.get("target", "") or "").strip():
                raise ValueError(f"{path} line {line_no}: missing target")
            meta = row.get("meta", {})
            examples.append(
                Example(
                    input=row["input"],
                    target=row["target"],
                    conversation_id=str(meta.get("conversation_id", f"ex{line_no}")),
                    turn_no=int(meta.get("turn_no", line_no)),
                    question=_last_question(row["input"]),
                )
            )
    if not examples:
        raise ValueError(f"no examples in {path}")
    return examples


def read_generation_inputs(path: str | Path) -> list[Example]:
    """Load inputs for generation: either a tasks file or a training file.

    Tasks rows carry context/question fields; training rows carry a
    pre-encoded input. Targets are optional either way.
    """
    examples = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if "input" in row:
                meta = row.get("meta", {})
                examples.append(
                    Example(
                        input=row["input"],
                        target=row.get("target"),
                        conversation_id=str(meta.get("conversation_id", f"ex{line_no}")),
                        turn_no=int(meta.get("turn_no", line_no)),
                        question=_last_question(row["input"]),
                    )
                )
            elif "question" in row:
                context = [(q, a) for q, a in row.get("context", [])]
                examples.append(
                    Example(
                        input=encode_dialog(context, row["question"]),
                        target=None,
                        conversation_id=str(row.get("conversation_id", f"ex{line_no}")),
                        turn_no=int(row.get("turn_no", line_no)),
                        question=row["question"],
                    )
                )
            else:
                raise ValueError(f"{path} line {line_no}: neither an example nor a task row")
    if not examples:
        raise ValueError(f"no inputs in {path}")
    return examples


def write_student_rewrites(rows: list[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
