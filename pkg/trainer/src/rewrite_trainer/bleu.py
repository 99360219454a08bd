"""Corpus BLEU with floor smoothing, used for dev-set checkpoint selection."""

from __future__ import annotations

import math
from collections import Counter

_EPSILON = 1e-9


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(candidates: list[str], references: list[str], max_order: int = 4) -> float:
    """BLEU over whitespace tokens with clipped n-gram counts.

    Zero-match orders are floor-smoothed; orders with no candidate n-grams at
    all are skipped. Identical corpora score exactly 1.0.
    """
    if len(candidates) != len(references):
        raise ValueError("candidate and reference counts differ")
    if not candidates:
        raise ValueError("empty corpus")
    matches = [0] * max_order
    totals = [0] * max_order
    candidate_len = 0
    reference_len = 0
    for candidate, reference in zip(candidates, references):
        cand_tokens = candidate.split()
        ref_tokens = reference.split()
        candidate_len += len(cand_tokens)
        reference_len += len(ref_tokens)
        for order in range(1, max_order + 1):
            cand_ngrams = _ngrams(cand_tokens, order)
            ref_ngrams = _ngrams(ref_tokens, order)
            overlap = cand_ngrams & ref_ngrams
            matches[order - 1] += sum(overlap.values())
            totals[order - 1] += sum(cand_ngrams.values())
    log_precision_sum = 0.0
    used_orders = 0
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        used_orders += 1
        precision = m / t if m > 0 else _EPSILON / t
        log_precision_sum += math.log(precision)
    if used_orders == 0 or candidate_len == 0:
        return 0.0
    geometric_mean = math.exp(log_precision_sum / used_orders)
    if candidate_len >= reference_len:
        brevity_penalty = 1.0
    else:
        brevity_penalty = math.exp(1.0 - reference_len / candidate_len)
    return brevity_penalty * geometric_mean
