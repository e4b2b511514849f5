"""Prompt variants: audience, target length and context level."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Audience(str, Enum):
    TEAM = "team"
    INDIVIDUAL = "individual"
    RANKING_EVAL = "ranking-eval"


class Length(str, Enum):
    SHORT = "short"
    MEDIUM = "medium"
    LONG = "long"

    @property
    def word_limit(self) -> int:
        return _WORD_LIMITS[self]

    @property
    def example_range(self) -> str:
        """How many strengths / improvements the prompt asks for."""
        return _EXAMPLE_RANGES[self]


_WORD_LIMITS = {Length.SHORT: 100, Length.MEDIUM: 200, Length.LONG: 300}
_EXAMPLE_RANGES = {Length.SHORT: "2-3", Length.MEDIUM: "4-5", Length.LONG: "5-6"}


class ContextLevel(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def rank(self) -> int:
        return list(ContextLevel).index(self)


@dataclass(frozen=True)
class PromptSpec:
    audience: Audience
    length: Length = Length.MEDIUM
    context_level: ContextLevel = ContextLevel.MEDIUM
    template_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "audience", Audience(self.audience))
        object.__setattr__(self, "length", Length(self.length))
        object.__setattr__(self, "context_level", ContextLevel(self.context_level))
        if not self.template_id:
            if self.audience is Audience.RANKING_EVAL:
                tid = "ranking_eval"
            else:
                tid = f"{self.audience.value}/p{self.cell}"
            object.__setattr__(self, "template_id", tid)

    @property
    def cell(self) -> int:
        """Grid cell number 1..9, rows by length and columns by context."""
        row = list(Length).index(self.length)
        return 3 * row + self.context_level.rank + 1

    @property
    def word_limit(self) -> int | None:
        if self.audience is Audience.RANKING_EVAL:
            return None
        return self.length.word_limit

    @classmethod
    def production(cls, audience: Audience | str) -> PromptSpec:
        """Deployed defaults: long team messages, medium individual ones, both at medium context."""
        audience = Audience(audience)
        if audience is Audience.TEAM:
            return cls(audience, Length.LONG, ContextLevel.MEDIUM)
        return cls(audience, Length.MEDIUM, ContextLevel.MEDIUM)


def grid(audience: Audience | str = Audience.INDIVIDUAL) -> list[PromptSpec]:
    """The nine length x context variants for one audience, in cell order."""
    audience = Audience(audience)
    if audience is Audience.RANKING_EVAL:
        raise ValueError("the ranking-evaluation prompt has no length/context grid")
    return [PromptSpec(audience, length, ctx) for length in Length for ctx in ContextLevel]
