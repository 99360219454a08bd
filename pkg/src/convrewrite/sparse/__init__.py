"""From-scratch BM25 retrieval: analyzer, inverted index, top-k search."""

from .analyzer import Analyzer, analyze, porter_stem
from .index import Bm25Index, ScoredDoc, build_index, load_index, save_index, search

__all__ = [
    "Analyzer",
    "analyze",
    "porter_stem",
    "Bm25Index",
    "ScoredDoc",
    "build_index",
    "load_index",
    "save_index",
    "search",
]
