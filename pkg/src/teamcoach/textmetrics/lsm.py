"""Language style matching over nine function-word categories.

For each category the member's and the team's function-word proportions
``pu`` and ``pt`` are compared as ``1 - |pu - pt| / (pu + pt + eps)``; the
overall score is the plain mean over categories. A category absent from both
texts scores 1.0, which is what the formula gives and is left that way.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from teamcoach.textmetrics.lexicons import (
    FUNCTION_WORD_CATEGORIES,
    FunctionWordLexicon,
    default_function_words,
)
from teamcoach.textmetrics.tokenize import tokenize

DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class FunctionWordProfile:
    proportions: dict[str, float]
    counts: dict[str, int]
    total_tokens: int

    @classmethod
    def from_proportions(cls, proportions: Mapping[str, float]) -> FunctionWordProfile:
        """Profile with given proportions and no token counts (for direct comparisons)."""
        props = {c: float(proportions.get(c, 0.0)) for c in FUNCTION_WORD_CATEGORIES}
        return cls(props, {c: 0 for c in FUNCTION_WORD_CATEGORIES}, 0)


@dataclass(frozen=True)
class LsmResult:
    categories: dict[str, float]
    overall: float
    epsilon: float


def function_word_profile(tokens: Sequence[str], lexicon: FunctionWordLexicon | None = None) -> FunctionWordProfile:
    lexicon = lexicon or default_function_words()
    counts = dict.fromkeys(FUNCTION_WORD_CATEGORIES, 0)
    for tok in tokens:
        cat = lexicon.category_of(tok)
        if cat is not None:
            counts[cat] += 1
    denom = max(1, len(tokens))
    return FunctionWordProfile({c: n / denom for c, n in counts.items()}, counts, len(tokens))


def text_profile(text: str, lexicon: FunctionWordLexicon | None = None) -> FunctionWordProfile:
    return function_word_profile(tokenize(text), lexicon)


def category_score(pu: float, pt: float, epsilon: float = DEFAULT_EPSILON) -> float:
    return 1.0 - abs(pu - pt) / (pu + pt + epsilon)


def lsm(user: FunctionWordProfile, team: FunctionWordProfile, epsilon: float = DEFAULT_EPSILON) -> LsmResult:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    scores = {c: category_score(user.proportions[c], team.proportions[c], epsilon) for c in FUNCTION_WORD_CATEGORIES}
    overall = math.fsum(scores.values()) / len(scores)
    return LsmResult(scores, overall, epsilon)


def pairwise_lsm(
    profiles: Mapping[str, FunctionWordProfile], epsilon: float = DEFAULT_EPSILON
) -> dict[tuple[str, str], LsmResult]:
    """Member-vs-member scores for every unordered pair, keyed in input order."""
    keys = list(profiles)
    out = {}
    for i, a in enumerate(keys):
        for b in keys[i + 1 :]:
            out[(a, b)] = lsm(profiles[a], profiles[b], epsilon)
    return out
