"""Rewrite-quality analytics: token counts, human-token overlap, ROUGE-1, latency.

Tokens here are lowercase, punctuation-stripped, whitespace-split words (a
deliberately simple convention, distinct from the retrieval analyzer). The
overlap percentage (OT) is the share of distinct human-rewrite tokens that
also appear in a generated rewrite; the token average (AT) measures rewrite
length. ROUGE-1 is unigram F1 over the same tokens.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass
from statistics import mean, median

from .rewriter import RewriteRecord

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def tokens(text: str) -> list[str]:
    return [t for t in text.lower().translate(_PUNCT_TABLE).split() if t]


@dataclass
class RewriteStats:
    method: str
    subset: str
    count: int
    avg_tokens: float
    overlap_pct: float | None  # None when no human references exist
    rouge1: float | None = None


def overlap_pct(human: str, rewrite: str) -> float | None:
    """Percent of distinct human-rewrite tokens present in the rewrite."""
    human_set = set(tokens(human))
    if not human_set:
        return None
    return 100.0 * len(human_set & set(tokens(rewrite))) / len(human_set)


def rouge1(candidate: str, reference: str) -> float:
    """Unigram F1 with clipped counts; 0.0 when either side is empty."""
    cand = Counter(tokens(candidate))
    ref = Counter(tokens(reference))
    if not cand or not ref:
        return 0.0
    match = sum((cand & ref).values())
    if match == 0:
        return 0.0
    precision = match / sum(cand.values())
    recall = match / sum(ref.values())
    return 2 * precision * recall / (precision + recall)


def rewrite_stats(
    records: list[RewriteRecord],
    humans: dict[tuple[str, int], str],
    subsets: dict[tuple[str, int], str] | None = None,
    with_rouge: bool = False,
) -> list[RewriteStats]:
    """AT/OT (and optionally ROUGE-1 vs human) per (method, subset) plus ALL rows.

    Records without a matching human rewrite contribute to AT but are skipped
    for OT and ROUGE-1.
    """
    if not records:
        raise ValueError("no rewrite records to analyze")
    groups: dict[tuple[str, str], list[RewriteRecord]] = {}
    for record in records:
        key = (record.conversation_id, record.turn_no)
        subset = subsets.get(key, "UNKNOWN") if subsets else "ALL"
        groups.setdefault((record.method, "ALL"), []).append(record)
        if subsets:
            groups.setdefault((record.method, subset), []).append(record)

    stats = []
    for (method, subset), group in sorted(groups.items()):
        token_counts = [len(tokens(r.rewrite)) for r in group]
        overlaps = []
        rouges = []
        for r in group:
            human = humans.get((r.conversation_id, r.turn_no))
            if not human:
                continue
            ot = overlap_pct(human, r.rewrite)
            if ot is not None:
                overlaps.append(ot)
            if with_rouge:
                rouges.append(rouge1(r.rewrite, human))
        stats.append(
            RewriteStats(
                method=method,
                subset=subset,
                count=len(group),
                avg_tokens=mean(token_counts),
                overlap_pct=mean(overlaps) if overlaps else None,
                rouge1=mean(rouges) if (with_rouge and rouges) else None,
            )
        )
    return stats


@dataclass
class LatencySummary:
    method: str
    timed_count: int
    mean_ms: float | None
    median_ms: float | None
    p95_ms: float | None


def latency_stats(records: list[RewriteRecord]) -> dict[str, LatencySummary]:
    """ms/query statistics per method over timed calls (cache hits excluded).

    A cache hit carries latency 0 and is not a timed call; a method whose
    records are all cache hits reports timed_count == 0 with null statistics.
    """
    if not records:
        raise ValueError("no rewrite records")
    by_method: dict[str, list[float]] = {}
    for record in records:
        by_method.setdefault(record.method, [])
        if record.latency_ms > 0 and not record.failed:
            by_method[record.method].append(record.latency_ms)
    summaries = {}
    for method, timed in sorted(by_method.items()):
        if timed:
            ordered = sorted(timed)
            p95_index = max(0, -(-95 * len(ordered) // 100) - 1)  # ceil(0.95 n) - 1
            summaries[method] = LatencySummary(
                method=method,
                timed_count=len(timed),
                mean_ms=mean(timed),
                median_ms=median(timed),
                p95_ms=ordered[p95_index],
            )
        else:
            summaries[method] = LatencySummary(
                method=method, timed_count=0, mean_ms=None, median_ms=None, p95_ms=None
            )
    return summaries


def stats_table(stats: list[RewriteStats]) -> str:
    """Aligned text table in the AT / %OT layout."""
    subsets = sorted({s.subset for s in stats})
    methods = []
    for s in stats:
        if s.method not in methods:
            methods.append(s.method)
    by_key = {(s.method, s.subset): s for s in stats}
    header = ["Method".ljust(12)]
    for subset in subsets:
        header.append(f"{subset} AT".rjust(12))
        header.append(f"{subset} %OT".rjust(12))
    lines = ["".join(header)]
    for method in methods:
        row = [method.ljust(12)]
        for subset in subsets:
            s = by_key.get((method, subset))
            row.append(f"{s.avg_tokens:.2f}".rjust(12) if s else "-".rjust(12))
            ot = f"{s.overlap_pct:.2f}" if s and s.overlap_pct is not None else "-"
            row.append(ot.rjust(12))
        lines.append("".join(row))
    return "\n".join(lines) + "\n"
