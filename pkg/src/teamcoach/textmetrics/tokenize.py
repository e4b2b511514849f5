"""The single word-token contract used by every count in the package."""

from __future__ import annotations

import re

_WORD = re.compile(r"[^\W_]+(?:'[^\W_]+)*")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'"})


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens; punctuation dropped, intra-word apostrophes kept.

    >>> tokenize("Hello,world! Don't stop.")
    ['hello', 'world', "don't", 'stop']
    """
    return _WORD.findall(text.translate(_APOSTROPHES).lower())


def word_count(text: str) -> int:
    return len(tokenize(text))
