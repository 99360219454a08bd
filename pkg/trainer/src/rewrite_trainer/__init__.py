"""Student query-rewriter: distillation fine-tuning and greedy generation."""

__version__ = "0.1.0"
