"""Inverted index and BM25 top-k search.

Scoring uses the Lucene-flavored BM25 formula with non-negative idf:

    score(d, q) = sum_t idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d) / avgdl))
    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))

The sum runs over the analyzed query token list, so repeated query terms
contribute once per occurrence. Documents sharing no term with the query are
never scored; ties break by ascending passage id.
"""

from __future__ import annotations

import heapq
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .analyzer import Analyzer, analyze

MAGIC = b"CRSPIDX\x01"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ScoredDoc:
    passage_id: str
    score: float
    rank: int


@dataclass
class Bm25Index:
    doc_count: int
    avg_doc_len: float
    doc_lens: list[int]
    postings: dict[str, list[tuple[int, int]]]  # term -> [(doc ordinal, tf)], ordinal-sorted
    doc_ids: list[str]
    k1: float = 0.82
    b: float = 0.68
    analyzer: Analyzer = field(default_factory=Analyzer)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        if df == 0:
            return 0.0
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))


def build_index(
    passages: Iterable,
    analyzer: Analyzer | None = None,
    k1: float = 0.82,
    b: float = 0.68,
) -> Bm25Index:
    """Index a passage stream. Passages need `id` and `text` attributes.

    Raises ValueError on duplicate ids or an empty collection.
    """
    if analyzer is None:
        analyzer = Analyzer()
    doc_ids: list[str] = []
    doc_lens: list[int] = []
    postings: dict[str, list[tuple[int, int]]] = {}
    seen: set[str] = set()
    for passage in passages:
        if passage.id in seen:
            raise ValueError(f"duplicate passage id: {passage.id!r}")
        seen.add(passage.id)
        ordinal = len(doc_ids)
        doc_ids.append(passage.id)
        tokens = analyze(passage.text, analyzer)
        doc_lens.append(len(tokens))
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((ordinal, tf))
    if not doc_ids:
        raise ValueError("empty collection")
    avg = sum(doc_lens) / len(doc_lens)
    return Bm25Index(
        doc_count=len(doc_ids),
        avg_doc_len=avg,
        doc_lens=doc_lens,
        postings=postings,
        doc_ids=doc_ids,
        k1=k1,
        b=b,
        analyzer=analyzer,
    )


def search(index: Bm25Index, query: str, k: int = 100) -> list[ScoredDoc]:
    """Exact BM25 top-k: (score desc, passage id asc), ranks from 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    terms = analyze(query, index.analyzer)
    scores: dict[int, float] = {}
    for term in terms:
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = index.idf(term)
        k1, b = index.k1, index.b
        for ordinal, tf in plist:
            norm = k1 * (1.0 - b + b * index.doc_lens[ordinal] / index.avg_doc_len)
            scores[ordinal] = scores.get(ordinal, 0.0) + idf * tf * (k1 + 1.0) / (tf + norm)
    top = heapq.nsmallest(
        k, scores.items(), key=lambda item: (-item[1], index.doc_ids[item[0]])
    )
    return [
        ScoredDoc(passage_id=index.doc_ids[ordinal], score=score, rank=rank)
        for rank, (ordinal, score) in enumerate(top, start=1)
    ]


def _append_varint(buf: bytearray, value: int) -> None:
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.append(byte | 0x80)
        else:
            buf.append(byte)
            return


def _read_varint(data: memoryview, offset: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        byte = data[offset]
        offset += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, offset
        shift += 7


def save_index(index: Bm25Index, path: str | Path) -> None:
    """Write the index to a versioned binary file (delta + varint postings)."""
    header = {
        "k1": index.k1,
        "b": index.b,
        "doc_count": index.doc_count,
        "avg_doc_len": index.avg_doc_len,
        "term_count": len(index.postings),
        "analyzer": index.analyzer.to_dict(),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    buf = bytearray()
    buf += MAGIC
    buf += struct.pack("<I", FORMAT_VERSION)
    buf += struct.pack("<I", len(header_bytes))
    buf += header_bytes
    for doc_id in index.doc_ids:
        raw = doc_id.encode("utf-8")
        _append_varint(buf, len(raw))
        buf += raw
    for length in index.doc_lens:
        _append_varint(buf, length)
    for term in sorted(index.postings):
        raw = term.encode("utf-8")
        _append_varint(buf, len(raw))
        buf += raw
        plist = index.postings[term]
        _append_varint(buf, len(plist))
        prev = 0
        for ordinal, tf in plist:
            _append_varint(buf, ordinal - prev)
            _append_varint(buf, tf)
            prev = ordinal
    Path(path).write_bytes(bytes(buf))


def load_index(path: str | Path) -> Bm25Index:
    raw = Path(path).read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise ValueError(f"not a sparse index file: {path}")
    offset = len(MAGIC)
    (version,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported index format version {version}")
    (header_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    offset += header_len
    data = memoryview(raw)
    doc_count = header["doc_count"]
    doc_ids = []
    for _ in range(doc_count):
        size, offset = _read_varint(data, offset)
        doc_ids.append(bytes(data[offset : offset + size]).decode("utf-8"))
        offset += size
    doc_lens = []
    for _ in range(doc_count):
        length, offset = _read_varint(data, offset)
        doc_lens.append(length)
    postings: dict[str, list[tuple[int, int]]] = {}
    for _ in range(header["term_count"]):
        size, offset = _read_varint(data, offset)
        term = bytes(data[offset : offset + size]).decode("utf-8")
        offset += size
        df, offset = _read_varint(data, offset)
        plist = []
        prev = 0
        for _ in range(df):
            delta, offset = _read_varint(data, offset)
            tf, offset = _read_varint(data, offset)
            prev += delta
            plist.append((prev, tf))
        postings[term] = plist
    return Bm25Index(
        doc_count=doc_count,
        avg_doc_len=header["avg_doc_len"],
        doc_lens=doc_lens,
        postings=postings,
        doc_ids=doc_ids,
        k1=header["k1"],
        b=header["b"],
        analyzer=Analyzer.from_dict(header["analyzer"]),
    )
