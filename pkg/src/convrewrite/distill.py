"""Export student-rewriter training sets from tasks and pseudo-label rewrites.

Model inputs encode the dialog with role markers: every question is prefixed
with <Que> and every answer with <Ans>, ending at the current question:

    <Que> q1 <Ans> a1 ... <Que> q_t

Targets are the chosen label source's rewrites (LLM pseudo-labels or human
rewrites). Sampling is seeded and deterministic; train and dev never share an
example.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from pathlib import Path

from .corpus import RewriteTask

QUESTION_MARKER = "<Que>"
ANSWER_MARKER = "<Ans>"
LABEL_SOURCES = ("rw_fsl", "ed_self", "human")

_MARKER_SPLIT = re.compile(r"(<Que>|<Ans>)")


@dataclass(frozen=True)
class DistillExample:
    input: str
    target: str
    conversation_id: str
    turn_no: int
    label_source: str

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "target": self.target,
            "meta": {
                "conversation_id": self.conversation_id,
                "turn_no": self.turn_no,
                "label_source": self.label_source,
            },
        }


def encode_input(context: list[tuple[str, str]], question: str) -> str:
    parts = []
    for q, a in context:
        parts.append(f"{QUESTION_MARKER} {q}")
        parts.append(f"{ANSWER_MARKER} {a}")
    parts.append(f"{QUESTION_MARKER} {question}")
    return " ".join(parts)


def parse_encoded_input(encoded: str) -> tuple[list[tuple[str, str]], str]:
    """Invert encode_input; raises ValueError on malformed marker structure."""
    pieces = _MARKER_SPLIT.split(encoded)
    if pieces[0].strip():
        raise ValueError(f"encoded input must start with {QUESTION_MARKER}")
    markers = pieces[1::2]
    texts = [t.strip() for t in pieces[2::2]]
    if len(markers) != len(texts) or not markers:
        raise ValueError("malformed encoded input")
    expected = [QUESTION_MARKER if i % 2 == 0 else ANSWER_MARKER for i in range(len(markers))]
    if markers != expected or markers[-1] != QUESTION_MARKER:
        raise ValueError("markers must alternate <Que>/<Ans> and end on a question")
    pairs = [(texts[i], texts[i + 1]) for i in range(0, len(texts) - 1, 2)]
    return pairs, texts[-1]


def build_example(task: RewriteTask, label: str, label_source: str) -> DistillExample:
    return DistillExample(
        input=encode_input(task.context, task.question),
        target=label,
        conversation_id=task.conversation_id,
        turn_no=task.turn_no,
        label_source=label_source,
    )


def export_training_set(
    tasks: list[RewriteTask],
    labels: dict[tuple[str, int], str],
    n_train: int,
    n_dev: int,
    seed: int = 42,
    label_source: str = "rw_fsl",
    dev_tasks: list[RewriteTask] | None = None,
) -> tuple[list[DistillExample], list[DistillExample]]:
    """Sample question-level train/dev examples with the given label source.

    When dev_tasks is provided (the dev conversation split), dev examples are
    drawn from it; otherwise both splits sample disjointly from `tasks`.
    """
    if label_source not in LABEL_SOURCES:
        raise ValueError(f"unknown label source: {label_source!r}")
    rng = random.Random(seed)
    if dev_tasks is None:
        if n_train + n_dev > len(tasks):
            raise ValueError(
                f"cannot sample {n_train}+{n_dev} examples from {len(tasks)} tasks"
            )
        sampled = rng.sample(tasks, n_train + n_dev)
        train_sample, dev_sample = sampled[:n_train], sampled[n_train:]
    else:
        if n_train > len(tasks):
            raise ValueError(f"cannot sample {n_train} train examples from {len(tasks)} tasks")
        if n_dev > len(dev_tasks):
            raise ValueError(f"cannot sample {n_dev} dev examples from {len(dev_tasks)} tasks")
        train_sample = rng.sample(tasks, n_train)
        dev_sample = rng.sample(dev_tasks, n_dev)
        overlap = {(t.conversation_id, t.turn_no) for t in train_sample} & {
            (t.conversation_id, t.turn_no) for t in dev_sample
        }
        if overlap:
            raise ValueError(f"train/dev task pools overlap: {sorted(overlap)[:5]}")

    missing = [
        t.query_id
        for t in train_sample + dev_sample
        if (t.conversation_id, t.turn_no) not in labels
    ]
    if missing:
        raise ValueError(f"missing labels for tasks: {', '.join(missing[:10])}")
    train = [build_example(t, labels[(t.conversation_id, t.turn_no)], label_source) for t in train_sample]
    dev = [build_example(t, labels[(t.conversation_id, t.turn_no)], label_source) for t in dev_sample]
    return train, dev


def write_examples(examples: list[DistillExample], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for example in examples:
            handle.write(json.dumps(example.to_dict(), ensure_ascii=False) + "\n")


def read_examples(path: str | Path) -> list[DistillExample]:
    examples = []
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            if "input" not in d or "target" not in d:
                raise ValueError(f"examples line {line_no}: need input and target")
            if not str(d["target"]).strip():
                raise ValueError(f"examples line {line_no}: empty target")
            meta = d.get("meta", {})
            examples.append(
                DistillExample(
                    input=d["input"],
                    target=d["target"],
                    conversation_id=str(meta.get("conversation_id", "")),
                    turn_no=int(meta.get("turn_no", 0)),
                    label_source=meta.get("label_source", "unknown"),
                )
            )
    return examples
