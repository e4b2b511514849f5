"""Loading of the tab-separated lexicon data files.

Every lexicon file starts with a header line ``# <format-name>\\t<version>``;
further ``#`` lines are comments. Shipped files live in ``teamcoach/data``
and can be swapped for any file in the same format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from teamcoach.errors import ConfigError

FUNCTION_WORD_CATEGORIES = (
    "articles",
    "personal_pronouns",
    "impersonal_pronouns",
    "prepositions",
    "auxiliary_verbs",
    "adverbs",
    "conjunctions",
    "negations",
    "quantifiers",
)

FUNCTION_WORDS_FORMAT = ("teamcoach-function-words", "v1")
VALENCE_FORMAT = ("teamcoach-valence-lexicon", "v1")
EMOJI_FORMAT = ("teamcoach-emoji-lexicon", "v1")


def _read_lexicon(path: str | Path | None, default_name: str, expected: tuple[str, str]) -> list[list[str]]:
    try:
        if path is None:
            text = resources.files("teamcoach").joinpath("data").joinpath(default_name).read_text(encoding="utf-8")
            source = default_name
        else:
            text = Path(path).read_text(encoding="utf-8")
            source = str(path)
    except OSError as exc:
        raise ConfigError(f"cannot read lexicon: {exc}", field="lexicon") from exc
    lines = text.split("\n")
    header = lines[0].lstrip("# ").rstrip("\r").split("\t")
    if tuple(header[:2]) != expected:
        raise ConfigError(f"{source}: expected header {'/'.join(expected)}, found {lines[0]!r}", field="lexicon")
    rows = []
    for line in lines[1:]:
        line = line.rstrip("\r")
        if not line or line.startswith("# "):
            continue
        rows.append(line.split("\t"))
    return rows


@dataclass(frozen=True)
class LexiconReport:
    """What loading a function-word lexicon found worth flagging."""

    overlaps: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not self.overlaps


@dataclass(frozen=True)
class FunctionWordLexicon:
    categories: dict[str, frozenset[str]]
    report: LexiconReport = field(default_factory=LexiconReport, compare=False)

    def __post_init__(self) -> None:
        if tuple(self.categories) != FUNCTION_WORD_CATEGORIES:
            raise ConfigError(
                f"function-word lexicon must define exactly {', '.join(FUNCTION_WORD_CATEGORIES)} in that order",
                field="lexicon.function_words",
            )
        for name, words in self.categories.items():
            bad = sorted(w for w in words if w != w.lower())
            if bad:
                raise ConfigError(f"category {name} has non-lowercase entries {bad}", field="lexicon.function_words")
        # a token belongs to the first category that lists it
        index: dict[str, str] = {}
        for name in FUNCTION_WORD_CATEGORIES:
            for w in self.categories[name]:
                index.setdefault(w, name)
        object.__setattr__(self, "_index", index)

    def category_of(self, token: str) -> str | None:
        return self._index.get(token)  # type: ignore[attr-defined]


def load_function_words(path: str | Path | None = None) -> FunctionWordLexicon:
    rows = _read_lexicon(path, "function_words.tsv", FUNCTION_WORDS_FORMAT)
    cats: dict[str, set[str]] = {name: set() for name in FUNCTION_WORD_CATEGORIES}
    for row in rows:
        if len(row) != 2:
            raise ConfigError(f"malformed function-word row {row!r}", field="lexicon.function_words")
        cat, word = row
        if cat not in cats:
            raise ConfigError(f"unknown category {cat!r}", field="lexicon.function_words")
        cats[cat].add(word)
    seen: dict[str, list[str]] = {}
    for name in FUNCTION_WORD_CATEGORIES:
        for w in cats[name]:
            seen.setdefault(w, []).append(name)
    overlaps = {w: tuple(c) for w, c in sorted(seen.items()) if len(c) > 1}
    return FunctionWordLexicon({k: frozenset(v) for k, v in cats.items()}, LexiconReport(overlaps))


@dataclass(frozen=True)
class ValenceLexicon:
    valence: dict[str, float]
    emoji: dict[str, str]


def load_valence_lexicon(path: str | Path | None = None, emoji_path: str | Path | None = None) -> ValenceLexicon:
    valence = {}
    for row in _read_lexicon(path, "valence_lexicon.tsv", VALENCE_FORMAT):
        if len(row) < 2:
            raise ConfigError(f"malformed valence row {row!r}", field="lexicon.valence")
        valence[row[0]] = float(row[1])
    emoji = {}
    for row in _read_lexicon(emoji_path, "emoji_lexicon.tsv", EMOJI_FORMAT):
        if len(row) >= 2:
            emoji[row[0]] = row[1]
    if not valence:
        raise ConfigError("valence lexicon is empty", field="lexicon.valence")
    return ValenceLexicon(valence, emoji)


@lru_cache(maxsize=1)
def default_function_words() -> FunctionWordLexicon:
    return load_function_words()


@lru_cache(maxsize=1)
def default_valence_lexicon() -> ValenceLexicon:
    return load_valence_lexicon()
