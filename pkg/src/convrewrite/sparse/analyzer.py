"""Text analysis for the sparse retriever: tokenization, Porter stemming, stopwords.

The default analyzer lowercases, applies the Porter stemmer, and removes no
stopwords. Tokens are maximal runs of Unicode alphanumerics (underscore is a
separator), so "k1=0.82" analyzes to ["k1", "0", "82"].
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_ASCII_ALPHA_RE = re.compile(r"[a-z]+\Z")

_VOWELS = "aeiou"


def _is_cons(word: str, i: int) -> bool:
    ch = word[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of vowel-consonant sequences: [C](VC)^m[V]."""
    m = 0
    prev_cons = None
    for i in range(len(stem)):
        cons = _is_cons(stem, i)
        if prev_cons is False and cons:
            m += 1
        prev_cons = cons
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and _is_cons(word, len(word) - 1)
    )


def _ends_cvc(word: str) -> bool:
    """Consonant-vowel-consonant ending where the final consonant is not w, x, or y."""
    if len(word) < 3:
        return False
    return (
        _is_cons(word, len(word) - 3)
        and not _is_cons(word, len(word) - 2)
        and _is_cons(word, len(word) - 1)
        and word[-1] not in "wxy"
    )


# (suffix, replacement, minimum measure of the remaining stem) rule tables.
# Longest suffix wins within a step; the measure is tested on the stem left
# after removing the suffix.
_STEP2_RULES = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("bli", "ble"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
    ("logi", "log"),
]

_STEP3_RULES = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

_STEP4_SUFFIXES = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]


def _step1a(word: str) -> str:
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ies"):
        return word[:-2]
    if word.endswith("ss"):
        return word
    if word.endswith("s"):
        return word[:-1]
    return word


def _step1b(word: str) -> str:
    if word.endswith("eed"):
        if _measure(word[:-3]) > 0:
            return word[:-1]
        return word
    stripped = None
    if word.endswith("ed") and _has_vowel(word[:-2]):
        stripped = word[:-2]
    elif word.endswith("ing") and _has_vowel(word[:-3]):
        stripped = word[:-3]
    if stripped is None:
        return word
    if stripped.endswith(("at", "bl", "iz")):
        return stripped + "e"
    if _ends_double_cons(stripped) and stripped[-1] not in "lsz":
        return stripped[:-1]
    if _measure(stripped) == 1 and _ends_cvc(stripped):
        return stripped + "e"
    return stripped


def _step1c(word: str) -> str:
    if word.endswith("y") and _has_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


def _apply_rules(word: str, rules: list[tuple[str, str]]) -> str:
    best = None
    for suffix, repl in rules:
        if word.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
            best = (suffix, repl)
    if best is None:
        return word
    suffix, repl = best
    stem = word[: len(word) - len(suffix)]
    if _measure(stem) > 0:
        return stem + repl
    return word


def _step4(word: str) -> str:
    best = None
    for suffix in _STEP4_SUFFIXES:
        if word.endswith(suffix) and (best is None or len(suffix) > len(best)):
            best = suffix
    if best is None:
        return word
    stem = word[: len(word) - len(best)]
    if best == "ion" and not stem.endswith(("s", "t")):
        return word
    if _measure(stem) > 1:
        return stem
    return word


def _step5(word: str) -> str:
    if word.endswith("e"):
        stem = word[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            word = stem
    if _ends_double_cons(word) and word.endswith("l") and _measure(word[:-1]) > 1:
        word = word[:-1]
    return word


def porter_stem(word: str) -> str:
    """Stem a lowercase word with the canonical Porter algorithm.

    Matches the reference implementation, including its two published
    departures from the original description (bli->ble and logi->log).
    Words of length <= 2 are returned unchanged.
    """
    if len(word) <= 2:
        return word
    word = _step1a(word)
    word = _step1b(word)
    word = _step1c(word)
    word = _apply_rules(word, _STEP2_RULES)
    word = _apply_rules(word, _STEP3_RULES)
    word = _step4(word)
    word = _step5(word)
    return word


@dataclass(frozen=True)
class Analyzer:
    """Analysis chain configuration. Default: lowercase + Porter, no stopwords."""

    lowercase: bool = True
    stemmer: str = "porter"  # "none" or "porter"
    stopwords: frozenset[str] | None = None

    def __post_init__(self):
        if self.stemmer not in ("none", "porter"):
            raise ValueError(f"unknown stemmer: {self.stemmer!r}")
        if self.stopwords is not None and not isinstance(self.stopwords, frozenset):
            object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    def to_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "stemmer": self.stemmer,
            "stopwords": sorted(self.stopwords) if self.stopwords is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Analyzer":
        stop = d.get("stopwords")
        return cls(
            lowercase=d.get("lowercase", True),
            stemmer=d.get("stemmer", "porter"),
            stopwords=frozenset(stop) if stop is not None else None,
        )


def analyze(text: str, analyzer: Analyzer | None = None) -> list[str]:
    """Split text into index terms: unicode-alnum runs, lowercased, stopped, stemmed.

    Stemming only touches pure a-z tokens; mixed alphanumeric or non-ASCII
    tokens pass through unchanged.
    """
    if analyzer is None:
        analyzer = Analyzer()
    tokens = _TOKEN_RE.findall(text)
    if analyzer.lowercase:
        tokens = [t.lower() for t in tokens]
    if analyzer.stopwords:
        tokens = [t for t in tokens if t not in analyzer.stopwords]
    if analyzer.stemmer == "porter":
        tokens = [porter_stem(t) if _ASCII_ALPHA_RE.match(t) else t for t in tokens]
    return tokens
