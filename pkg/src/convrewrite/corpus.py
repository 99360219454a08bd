"""Dataset ingestion and preprocessing into evaluable rewrite tasks.

Conversational datasets arrive as JSON/JSONL records, one per user turn, with
dataset-specific field names absorbed by a configurable schema map (the
default matches the public QReCC release). Preprocessing replaces each
conversation's first question with its human rewrite, builds per-turn
contexts, and filters to tasks with judged-relevant passages.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

DEFAULT_SCHEMA_MAP = {
    "conversation_id": "Conversation_no",
    "turn": "Turn_no",
    "question": "Question",
    "rewrite": "Rewrite",
    "answer": "Answer",
    "source": "Conversation_source",
    "gold_passages": "Truth_passages",
}

SOURCE_ALIASES = {
    "quac": "QuAC",
    "nq": "NQ",
    "natural questions": "NQ",
    "natural_questions": "NQ",
    "trec": "TREC",
    "trec cast": "TREC",
    "cast": "TREC",
}


class SchemaError(ValueError):
    """A dataset record does not match the configured schema map."""


@dataclass(frozen=True)
class Turn:
    role: str  # "user" or "system"
    text: str


@dataclass
class Conversation:
    id: str
    source: str
    turns: list[Turn] = field(default_factory=list)
    human_rewrites: dict[int, str] = field(default_factory=dict)
    gold_passages: dict[int, set[str]] = field(default_factory=dict)

    def user_turn_count(self) -> int:
        return sum(1 for t in self.turns if t.role == "user")


@dataclass
class RewriteTask:
    conversation_id: str
    turn_no: int
    context: list[tuple[str, str]]  # preceding (question, answer) pairs
    question: str
    human_rewrite: str | None
    gold_passage_ids: set[str] = field(default_factory=set)
    source: str = "UNKNOWN"
    missing_first_rewrite: bool = False

    @property
    def query_id(self) -> str:
        return f"{self.conversation_id}_{self.turn_no}"


@dataclass(frozen=True)
class Passage:
    id: str
    text: str


def _normalize_source(value) -> str:
    text = str(value).strip()
    return SOURCE_ALIASES.get(text.lower(), text)


def load_conversations(
    path: str | Path,
    schema_map: dict[str, str] | None = None,
    source_override: str | None = None,
) -> list[Conversation]:
    """Load per-turn records and group them into ordered conversations.

    Accepts a JSON array or JSON-lines file. Each record holds one user turn
    (question, answer, optional rewrite, optional gold passage ids). When the
    source field is absent, `source_override` tags every conversation.
    """
    smap = dict(DEFAULT_SCHEMA_MAP)
    if schema_map:
        smap.update(schema_map)
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    records = _read_records(path)

    by_id: dict[str, dict[int, dict]] = {}
    sources: dict[str, str] = {}
    for idx, record in enumerate(records):
        if not isinstance(record, dict):
            raise SchemaError(f"record {idx}: expected an object, got {type(record).__name__}")
        conv_id = _require(record, smap["conversation_id"], idx)
        turn_no = _require(record, smap["turn"], idx)
        question = _require(record, smap["question"], idx)
        if not str(question).strip():
            raise SchemaError(f"record {idx}: empty question")
        try:
            turn_no = int(turn_no)
        except (TypeError, ValueError):
            raise SchemaError(f"record {idx}: turn number {turn_no!r} is not an integer")
        conv_id = str(conv_id)
        turns = by_id.setdefault(conv_id, {})
        if turn_no in turns:
            raise SchemaError(f"record {idx}: duplicate turn ({conv_id}, {turn_no})")
        turns[turn_no] = {
            "question": str(question).strip(),
            "answer": str(record.get(smap["answer"], "") or "").strip(),
            "rewrite": record.get(smap["rewrite"]),
            "gold": record.get(smap["gold_passages"]) or [],
        }
        if conv_id not in sources:
            if smap["source"] in record and record[smap["source"]] not in (None, ""):
                sources[conv_id] = _normalize_source(record[smap["source"]])
            elif source_override:
                sources[conv_id] = source_override
            else:
                sources[conv_id] = "UNKNOWN"

    conversations = []
    for conv_id, turns in by_id.items():
        conv = Conversation(id=conv_id, source=sources[conv_id])
        for turn_no in sorted(turns):
            info = turns[turn_no]
            conv.turns.append(Turn(role="user", text=info["question"]))
            conv.turns.append(Turn(role="system", text=info["answer"]))
            rewrite = info["rewrite"]
            if rewrite is not None and str(rewrite).strip():
                conv.human_rewrites[turn_no] = str(rewrite).strip()
            gold = info["gold"]
            if isinstance(gold, str):
                gold = [gold]
            conv.gold_passages[turn_no] = {str(g) for g in gold if str(g).strip()}
        conversations.append(conv)
    return conversations


def _read_records(path: Path) -> list:
    text = path.read_text(encoding="utf-8").strip()
    if not text:
        return []
    if text.startswith("["):
        return json.loads(text)
    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {line_no}: invalid JSON ({exc.msg})")
    return records


def _require(record: dict, key: str, idx: int):
    if key not in record or record[key] is None:
        raise SchemaError(f"record {idx}: missing field {key!r}")
    return record[key]


def preprocess_tasks(conversations: list[Conversation]) -> list[RewriteTask]:
    """One task per user turn, first questions replaced by their human rewrites.

    Context for turn t holds the preceding (question, answer) pairs with the
    replaced first-turn text. A first turn without a human rewrite keeps its
    question and is flagged on the task.
    """
    tasks = []
    for conv in conversations:
        pairs: list[tuple[str, str]] = []
        turn_no = 0
        pending_question: str | None = None
        missing_first = False
        for turn in conv.turns:
            if turn.role == "user":
                turn_no += 1
                question = turn.text
                if turn_no == 1:
                    rewrite = conv.human_rewrites.get(1)
                    if rewrite:
                        question = rewrite
                    else:
                        missing_first = True
                tasks.append(
                    RewriteTask(
                        conversation_id=conv.id,
                        turn_no=turn_no,
                        context=list(pairs),
                        question=question,
                        human_rewrite=conv.human_rewrites.get(turn_no),
                        gold_passage_ids=set(conv.gold_passages.get(turn_no, set())),
                        source=conv.source,
                        missing_first_rewrite=(turn_no == 1 and missing_first),
                    )
                )
                pending_question = question
            else:
                if pending_question is not None:
                    pairs.append((pending_question, turn.text))
                    pending_question = None
    return tasks


def filter_evaluable(tasks: list[RewriteTask], qrels) -> list[RewriteTask]:
    """Keep tasks with at least one judged-relevant passage, preserving order."""
    kept = []
    for task in tasks:
        judgments = qrels.judgments.get(task.query_id, {})
        if any(grade >= 1 for grade in judgments.values()):
            kept.append(task)
    return kept


def subset_counts(tasks: list[RewriteTask]) -> dict[str, int]:
    counts: dict[str, int] = {"ALL": len(tasks)}
    for task in tasks:
        counts[task.source] = counts.get(task.source, 0) + 1
    return counts


def split_dev(
    conversations: list[Conversation], n: int, seed: int = 42
) -> tuple[list[Conversation], list[Conversation]]:
    """Deterministically sample n dev conversations; returns (train, dev)."""
    if n > len(conversations):
        raise ValueError(f"cannot sample {n} conversations from {len(conversations)}")
    rng = random.Random(seed)
    indices = list(range(len(conversations)))
    dev_indices = set(rng.sample(indices, n))
    train = [conversations[i] for i in indices if i not in dev_indices]
    dev = [conversations[i] for i in indices if i in dev_indices]
    return train, dev


def load_passages(
    path: str | Path, id_field: str = "id", text_field: str = "text"
) -> Iterator[Passage]:
    """Stream passages from a JSONL file in file order.

    Raises on malformed lines (with the 1-based line number) and duplicate ids.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"passage file not found: {path}")
    seen: set[str] = set()
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {line_no}: invalid JSON ({exc.msg})")
            if id_field not in record:
                raise SchemaError(f"line {line_no}: missing field {id_field!r}")
            if text_field not in record:
                raise SchemaError(f"line {line_no}: missing field {text_field!r}")
            pid = str(record[id_field])
            if pid in seen:
                raise SchemaError(f"line {line_no}: duplicate passage id {pid!r}")
            seen.add(pid)
            yield Passage(id=pid, text=str(record[text_field]))


def write_tasks(tasks: list[RewriteTask], path: str | Path) -> None:
    """Write the canonical tasks file: one JSON object per line."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for task in tasks:
            handle.write(json.dumps(task_to_dict(task), ensure_ascii=False) + "\n")


def read_tasks(path: str | Path) -> list[RewriteTask]:
    tasks = []
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                tasks.append(task_from_dict(json.loads(line)))
    return tasks


def task_to_dict(task: RewriteTask) -> dict:
    return {
        "conversation_id": task.conversation_id,
        "turn_no": task.turn_no,
        "context": [[q, a] for q, a in task.context],
        "question": task.question,
        "human_rewrite": task.human_rewrite,
        "gold_passage_ids": sorted(task.gold_passage_ids),
        "source": task.source,
        "missing_first_rewrite": task.missing_first_rewrite,
    }


def task_from_dict(d: dict) -> RewriteTask:
    return RewriteTask(
        conversation_id=str(d["conversation_id"]),
        turn_no=int(d["turn_no"]),
        context=[(q, a) for q, a in d.get("context", [])],
        question=d["question"],
        human_rewrite=d.get("human_rewrite"),
        gold_passage_ids=set(d.get("gold_passage_ids", [])),
        source=d.get("source", "UNKNOWN"),
        missing_first_rewrite=bool(d.get("missing_first_rewrite", False)),
    )
