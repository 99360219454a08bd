"""TREC run/qrels I/O and ranked-retrieval metrics with subset breakdowns.

Metrics follow trec-eval semantics: MRR (reciprocal rank of the first
relevant retrieved document, 0 if none), MAP (precision summed at each
relevant document's rank, divided by the total number of relevant documents),
R@k, and NDCG@k with gain = grade and discount 1/log2(rank + 1). Queries
without a relevant judgment are excluded from aggregates and counted
separately. Aggregates are arithmetic means over evaluated queries, reported
for ALL plus any subsets given by a query -> subset map.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .sparse import ScoredDoc

DEFAULT_RECALL_CUTOFFS = (5, 10, 20, 30, 100)
DEFAULT_NDCG_CUTOFF = 3


@dataclass
class RunFile:
    entries: dict[str, list[ScoredDoc]]
    tag: str = "run"


@dataclass
class Qrels:
    judgments: dict[str, dict[str, int]] = field(default_factory=dict)

    def relevant(self, query_id: str) -> dict[str, int]:
        return {
            doc: grade
            for doc, grade in self.judgments.get(query_id, {}).items()
            if grade >= 1
        }


@dataclass
class MetricReport:
    per_query: dict[str, dict[str, float]]
    aggregate: dict[str, dict[str, float]]
    query_counts: dict[str, int]
    excluded: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "aggregate": self.aggregate,
            "query_counts": self.query_counts,
            "excluded": self.excluded,
            "per_query": self.per_query,
        }


def parse_run(path: str | Path) -> RunFile:
    """Parse a six-column TREC run file, validating rank/score structure."""
    entries: dict[str, list[ScoredDoc]] = {}
    seen: set[tuple[str, str]] = set()
    tag = "run"
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"run file line {line_no}: expected 6 columns, got {len(parts)}")
            qid, _, docid, rank_s, score_s, tag = parts
            try:
                rank = int(rank_s)
                score = float(score_s)
            except ValueError:
                raise ValueError(f"run file line {line_no}: bad rank or score")
            if (qid, docid) in seen:
                raise ValueError(f"run file line {line_no}: duplicate document {docid!r} for query {qid!r}")
            seen.add((qid, docid))
            docs = entries.setdefault(qid, [])
            if rank != len(docs) + 1:
                raise ValueError(
                    f"run file line {line_no}: rank {rank} for query {qid!r}, expected {len(docs) + 1}"
                )
            if docs and score > docs[-1].score:
                raise ValueError(
                    f"run file line {line_no}: score {score} increases over rank order for query {qid!r}"
                )
            docs.append(ScoredDoc(passage_id=docid, score=score, rank=rank))
    return RunFile(entries=entries, tag=tag)


def write_run(run: RunFile, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for qid in run.entries:
            for doc in run.entries[qid]:
                handle.write(f"{qid} Q0 {doc.passage_id} {doc.rank} {doc.score!r} {run.tag}\n")


def read_qrels(path: str | Path) -> Qrels:
    """Read whitespace-separated qrels lines: qid <it> docid grade."""
    judgments: dict[str, dict[str, int]] = {}
    with Path(path).open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"qrels line {line_no}: expected 4 columns, got {len(parts)}")
            qid, _, docid, grade_s = parts
            try:
                grade = int(grade_s)
            except ValueError:
                raise ValueError(f"qrels line {line_no}: bad grade {grade_s!r}")
            if grade < 0:
                raise ValueError(f"qrels line {line_no}: negative grade")
            judgments.setdefault(qid, {})[docid] = grade
    return Qrels(judgments=judgments)


def write_qrels(qrels: Qrels, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for qid in qrels.judgments:
            for docid, grade in qrels.judgments[qid].items():
                handle.write(f"{qid} 0 {docid} {grade}\n")


def query_metrics(
    ranking: list[ScoredDoc],
    judgments: dict[str, int],
    recall_cutoffs=DEFAULT_RECALL_CUTOFFS,
    ndcg_cutoff: int = DEFAULT_NDCG_CUTOFF,
) -> dict[str, float]:
    """Metrics for one query. `judgments` must contain >= 1 relevant grade."""
    relevant = {doc for doc, grade in judgments.items() if grade >= 1}
    total_relevant = len(relevant)
    metrics: dict[str, float] = {}

    first_rank = None
    hits = 0
    precision_sum = 0.0
    hits_at = {}
    cutoffs = sorted(recall_cutoffs)
    for doc in ranking:
        if doc.passage_id in relevant:
            hits += 1
            precision_sum += hits / doc.rank
            if first_rank is None:
                first_rank = doc.rank
        for k in cutoffs:
            if doc.rank == k:
                hits_at[k] = hits
    for k in cutoffs:
        if k not in hits_at:
            hits_at[k] = hits  # ranking shorter than the cutoff
    metrics["MRR"] = 1.0 / first_rank if first_rank else 0.0
    metrics["MAP"] = precision_sum / total_relevant
    for k in cutoffs:
        metrics[f"R@{k}"] = hits_at[k] / total_relevant

    dcg = 0.0
    for doc in ranking[:ndcg_cutoff]:
        grade = judgments.get(doc.passage_id, 0)
        if grade > 0:
            dcg += grade / math.log2(doc.rank + 1)
    ideal_grades = sorted((g for g in judgments.values() if g > 0), reverse=True)
    idcg = sum(
        grade / math.log2(i + 2) for i, grade in enumerate(ideal_grades[:ndcg_cutoff])
    )
    metrics[f"NDCG@{ndcg_cutoff}"] = dcg / idcg if idcg > 0 else 0.0
    return metrics


def evaluate_run(
    run: RunFile,
    qrels: Qrels,
    subsets: dict[str, str] | None = None,
    recall_cutoffs=DEFAULT_RECALL_CUTOFFS,
    ndcg_cutoff: int = DEFAULT_NDCG_CUTOFF,
) -> MetricReport:
    per_query: dict[str, dict[str, float]] = {}
    excluded: list[str] = []
    for qid, ranking in run.entries.items():
        judgments = qrels.judgments.get(qid, {})
        if not any(grade >= 1 for grade in judgments.values()):
            excluded.append(qid)
            continue
        per_query[qid] = query_metrics(ranking, judgments, recall_cutoffs, ndcg_cutoff)

    groups: dict[str, list[str]] = {"ALL": list(per_query)}
    if subsets:
        for qid in per_query:
            subset = subsets.get(qid, "UNKNOWN")
            groups.setdefault(subset, []).append(qid)

    metric_names = (
        ["MRR", "MAP"]
        + [f"R@{k}" for k in sorted(recall_cutoffs)]
        + [f"NDCG@{ndcg_cutoff}"]
    )
    aggregate = {}
    query_counts = {}
    for subset, qids in groups.items():
        query_counts[subset] = len(qids)
        if qids:
            aggregate[subset] = {
                name: sum(per_query[q][name] for q in qids) / len(qids)
                for name in metric_names
            }
        else:
            aggregate[subset] = {name: 0.0 for name in metric_names}
    return MetricReport(
        per_query=per_query,
        aggregate=aggregate,
        query_counts=query_counts,
        excluded=excluded,
    )


@dataclass(frozen=True)
class PairwiseResult:
    win_count: int
    tie_count: int
    loss_count: int
    queries: int

    @property
    def win(self) -> float:
        return self.win_count / self.queries

    @property
    def tie(self) -> float:
        return self.tie_count / self.queries

    @property
    def loss(self) -> float:
        return self.loss_count / self.queries


def reciprocal_rank(ranking: list[ScoredDoc], judgments: dict[str, int]) -> float:
    relevant = {doc for doc, grade in judgments.items() if grade >= 1}
    for doc in ranking:
        if doc.passage_id in relevant:
            return 1.0 / doc.rank
    return 0.0


def pairwise_win_tie(run_a: RunFile, run_b: RunFile, qrels: Qrels) -> PairwiseResult:
    """Per-query reciprocal-rank comparison over the shared judged query set."""
    ids_a, ids_b = set(run_a.entries), set(run_b.entries)
    if ids_a != ids_b:
        diff = sorted(ids_a.symmetric_difference(ids_b))
        raise ValueError(f"runs cover different query sets; difference: {diff[:10]}")
    evaluated = [
        qid for qid in run_a.entries
        if any(g >= 1 for g in qrels.judgments.get(qid, {}).values())
    ]
    if not evaluated:
        raise ValueError("no judged queries shared by both runs")
    win = tie = loss = 0
    for qid in evaluated:
        judgments = qrels.judgments[qid]
        rr_a = reciprocal_rank(run_a.entries[qid], judgments)
        rr_b = reciprocal_rank(run_b.entries[qid], judgments)
        if rr_a > rr_b:
            win += 1
        elif rr_a < rr_b:
            loss += 1
        else:
            tie += 1
    return PairwiseResult(
        win_count=win, tie_count=tie, loss_count=loss, queries=len(evaluated)
    )


def write_report(report: MetricReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def read_report(path: str | Path) -> MetricReport:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return MetricReport(
        per_query=d.get("per_query", {}),
        aggregate=d["aggregate"],
        query_counts=d["query_counts"],
        excluded=d.get("excluded", []),
    )


def run_from_results(results: dict[str, list[ScoredDoc]], tag: str) -> RunFile:
    return RunFile(entries=results, tag=tag)


def qrels_from_tasks(tasks) -> Qrels:
    """Binary qrels (grade 1) from each task's gold passage ids."""
    judgments: dict[str, dict[str, int]] = {}
    for task in tasks:
        if task.gold_passage_ids:
            judgments[task.query_id] = {pid: 1 for pid in sorted(task.gold_passage_ids)}
    return Qrels(judgments=judgments)
