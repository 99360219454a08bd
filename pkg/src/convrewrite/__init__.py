"""Conversational query rewriting, retrieval, and evaluation toolkit."""

__version__ = "0.1.0"
