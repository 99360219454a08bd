"""Embedding-based retrieval: exact cosine top-k over sharded vector stores.

Vectors are unit-normalized float32 rows, so cosine similarity is a dot
product. Search computes per-shard top-k (ties broken by ascending passage
id, including every candidate tied at the boundary) and merges, which is
provably identical to unsharded brute force. Providers are pluggable: an HTTP
endpoint, a precomputed-vectors file keyed by text hash, or a deterministic
seeded test provider.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .sparse import ScoredDoc

DEFAULT_DIMENSION = 768
DEFAULT_SHARD_COUNT = 8
_NORM_TOLERANCE = 1e-6


class EmbeddingError(RuntimeError):
    pass


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise EmbeddingError("zero-norm embedding vector")
    return matrix / norms


class DeterministicProvider:
    """Seeded hash-to-vector provider for tests and offline pipelines."""

    def __init__(self, dimension: int = DEFAULT_DIMENSION, seed: int = 0):
        self.name = "deterministic"
        self.dimension = dimension
        self.seed = seed

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        rows = np.empty((len(texts), self.dimension), dtype=np.float32)
        for i, text in enumerate(texts):
            digest = hashlib.sha256(f"{self.seed}:{text}".encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            rows[i] = rng.standard_normal(self.dimension, dtype=np.float32)
        return rows


class PrecomputedProvider:
    """Vectors loaded from a JSONL file of {text_hash, vector}."""

    def __init__(self, path: str | Path, dimension: int = DEFAULT_DIMENSION):
        self.name = "precomputed"
        self.dimension = dimension
        self._vectors: dict[str, np.ndarray] = {}
        with Path(path).open(encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                vec = np.asarray(record["vector"], dtype=np.float32)
                if vec.shape != (dimension,):
                    raise EmbeddingError(
                        f"vectors file line {line_no}: dimension {vec.shape} != ({dimension},)"
                    )
                self._vectors[record["text_hash"]] = vec

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        rows = np.empty((len(texts), self.dimension), dtype=np.float32)
        for i, text in enumerate(texts):
            key = hashlib.sha256(text.encode("utf-8")).hexdigest()
            if key not in self._vectors:
                raise EmbeddingError(f"no precomputed vector for text hash {key}")
            rows[i] = self._vectors[key]
        return rows


class HttpEmbeddingProvider:
    """POSTs {"texts": [...]} and reads {"embeddings": [[...], ...]}."""

    def __init__(self, endpoint: str, dimension: int = DEFAULT_DIMENSION,
                 api_key: str | None = None, timeout_s: float = 60.0):
        self.name = "http"
        self.endpoint = endpoint
        self.dimension = dimension
        self.api_key = api_key
        self.timeout_s = timeout_s

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.post(
                self.endpoint, json={"texts": texts}, headers=headers, timeout=self.timeout_s
            )
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise EmbeddingError(f"embedding endpoint failure: {exc}")
        if response.status_code != 200:
            raise EmbeddingError(f"embedding endpoint HTTP {response.status_code}: {response.text[:200]}")
        return np.asarray(response.json()["embeddings"], dtype=np.float32)


def embed(texts: list[str], provider) -> np.ndarray:
    """Embed texts in order; returns unit-normalized rows of provider.dimension."""
    if not texts:
        return np.zeros((0, provider.dimension), dtype=np.float32)
    rows = provider.embed_batch(texts)
    rows = np.asarray(rows, dtype=np.float32)
    if rows.shape != (len(texts), provider.dimension):
        raise EmbeddingError(
            f"provider returned shape {rows.shape}, expected ({len(texts)}, {provider.dimension})"
        )
    if not np.all(np.isfinite(rows)):
        raise EmbeddingError("provider returned non-finite values")
    return _normalize_rows(rows)


@dataclass
class VectorShard:
    shard_no: int
    passage_ids: list[str]
    matrix: np.ndarray  # |passage_ids| x dimension, unit rows, float32

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.passage_ids):
            raise ValueError("shard matrix shape does not match passage ids")
        norms = np.linalg.norm(self.matrix, axis=1)
        if self.matrix.shape[0] and np.max(np.abs(norms - 1.0)) > _NORM_TOLERANCE:
            raise ValueError("shard rows must be unit-normalized")

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1]


def build_shards(
    passage_ids: list[str], matrix: np.ndarray, shard_count: int = DEFAULT_SHARD_COUNT
) -> list[VectorShard]:
    """Split contiguous row ranges into shards; ids must be unique."""
    if len(set(passage_ids)) != len(passage_ids):
        raise ValueError("duplicate passage ids")
    if matrix.shape[0] != len(passage_ids):
        raise ValueError("matrix rows != number of passage ids")
    if shard_count < 1:
        raise ValueError("shard_count must be >= 1")
    bounds = np.linspace(0, len(passage_ids), shard_count + 1, dtype=int)
    shards = []
    for shard_no in range(shard_count):
        lo, hi = bounds[shard_no], bounds[shard_no + 1]
        shards.append(
            VectorShard(
                shard_no=shard_no,
                passage_ids=list(passage_ids[lo:hi]),
                matrix=np.ascontiguousarray(matrix[lo:hi], dtype=np.float32),
            )
        )
    return shards


def save_shard(shard: VectorShard, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"shard_{shard.shard_no:03d}"
    (directory / f"{stem}.vec").write_bytes(shard.matrix.astype(np.float32).tobytes())
    sidecar = {
        "shard_no": shard.shard_no,
        "dimension": shard.dimension,
        "count": len(shard.passage_ids),
        "passage_ids": shard.passage_ids,
    }
    (directory / f"{stem}.json").write_text(
        json.dumps(sidecar, ensure_ascii=False), encoding="utf-8"
    )


def load_shards(directory: str | Path) -> list[VectorShard]:
    directory = Path(directory)
    sidecars = sorted(
        p for p in directory.glob("shard_*.json") if not p.name.endswith(".manifest.json")
    )
    if not sidecars:
        raise FileNotFoundError(f"no shard sidecar files under {directory}")
    shards = []
    for sidecar_path in sidecars:
        meta = json.loads(sidecar_path.read_text(encoding="utf-8"))
        vec_path = sidecar_path.with_suffix(".vec")
        raw = np.frombuffer(vec_path.read_bytes(), dtype=np.float32)
        matrix = raw.reshape(meta["count"], meta["dimension"]).copy()
        shards.append(
            VectorShard(
                shard_no=meta["shard_no"],
                passage_ids=list(meta["passage_ids"]),
                matrix=matrix,
            )
        )
    all_ids = [pid for s in shards for pid in s.passage_ids]
    if len(set(all_ids)) != len(all_ids):
        raise ValueError("duplicate passage ids across shards")
    return shards


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def _shard_topk(shard: VectorShard, query_vec: np.ndarray, k: int) -> list[tuple[float, str]]:
    if shard.matrix.shape[0] == 0:
        return []
    scores = shard.matrix @ query_vec
    n = scores.shape[0]
    if n > k:
        kth = np.partition(scores, n - k)[n - k]
        idx = np.flatnonzero(scores >= kth)  # keep boundary ties for exactness
    else:
        idx = np.arange(n)
    candidates = [(float(scores[i]), shard.passage_ids[i]) for i in idx]
    candidates.sort(key=lambda item: (-item[0], item[1]))
    return candidates[:k]


def search_dense(query_vec: np.ndarray, shards: list[VectorShard], k: int = 100) -> list[ScoredDoc]:
    """Exact top-k by dot product over all shards; ties by ascending passage id."""
    if not shards:
        raise ValueError("no shards to search")
    query_vec = np.asarray(query_vec, dtype=np.float32)
    for shard in shards:
        if shard.dimension != query_vec.shape[0]:
            raise ValueError(
                f"dimension mismatch: query {query_vec.shape[0]}, shard {shard.shard_no} {shard.dimension}"
            )
    merged: list[tuple[float, str]] = []
    for shard in shards:
        merged.extend(_shard_topk(shard, query_vec, k))
    merged.sort(key=lambda item: (-item[0], item[1]))
    return [
        ScoredDoc(passage_id=pid, score=score, rank=rank)
        for rank, (score, pid) in enumerate(merged[:k], start=1)
    ]
