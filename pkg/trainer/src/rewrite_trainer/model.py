"""Base-checkpoint construction and loading for the student rewriter.

The student is a T5-family encoder-decoder. Without hub access the base
checkpoint is initialized locally: a word-level tokenizer built from the
training corpus (with <Que>/<Ans> registered as special tokens) plus a
randomly initialized small T5. Any directory containing compatible
model + tokenizer files (e.g. a downloaded t5-base) works the same way.
"""

from __future__ import annotations

from pathlib import Path

import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import PreTrainedTokenizerFast, T5Config, T5ForConditionalGeneration
from transformers.utils import logging as hf_logging

from .data import ANSWER_MARKER, QUESTION_MARKER

hf_logging.disable_progress_bar()

SPECIAL_TOKENS = ["<pad>", "</s>", "<unk>", QUESTION_MARKER, ANSWER_MARKER]


def build_tokenizer(corpus: list[str]) -> PreTrainedTokenizerFast:
    """Word-level tokenizer over whitespace tokens, specials pinned first."""
    vocab = {token: i for i, token in enumerate(SPECIAL_TOKENS)}
    for text in corpus:
        for word in text.split():
            if word not in vocab:
                vocab[word] = len(vocab)
    tokenizer = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tokenizer.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tokenizer,
        pad_token="<pad>",
        eos_token="</s>",
        unk_token="<unk>",
        additional_special_tokens=[QUESTION_MARKER, ANSWER_MARKER],
    )
    fast.truncation_side = "left"  # keep the current question, drop oldest context
    return fast


def init_base_checkpoint(
    corpus: list[str],
    out_dir: str | Path,
    d_model: int = 128,
    num_layers: int = 2,
    num_heads: int = 4,
    dropout: float = 0.1,
    seed: int = 42,
) -> Path:
    """Create and save a randomly initialized base model + tokenizer."""
    torch.manual_seed(seed)
    tokenizer = build_tokenizer(corpus)
    config = T5Config(
        vocab_size=len(tokenizer),
        d_model=d_model,
        d_ff=4 * d_model,
        d_kv=max(d_model // num_heads, 8),
        num_layers=num_layers,
        num_heads=num_heads,
        dropout_rate=dropout,
        pad_token_id=tokenizer.pad_token_id,
        eos_token_id=tokenizer.eos_token_id,
        decoder_start_token_id=tokenizer.pad_token_id,
    )
    model = T5ForConditionalGeneration(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return out_dir


def load_checkpoint(path: str | Path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        model = T5ForConditionalGeneration.from_pretrained(path)
        tokenizer = PreTrainedTokenizerFast.from_pretrained(path)
    except (OSError, ValueError) as exc:
        raise ValueError(f"not a usable checkpoint directory: {path} ({exc})")
    tokenizer.truncation_side = "left"
    return model, tokenizer
