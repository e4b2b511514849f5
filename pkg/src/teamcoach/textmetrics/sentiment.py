"""Rule-based lexicon sentiment (VADER rules).

Per-token valences from the lexicon are adjusted by up to three preceding
tokens (boosters/dampeners, negations), capitalisation emphasis, the
contrastive "but", a small idiom table, and "least"; the sum gets
exclamation/question-mark emphasis and is squashed to ``s / sqrt(s*s + 15)``.

Constants and rule order follow the published reference implementation so
that scores agree with it to rounding.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass

from teamcoach.errors import ConfigError
from teamcoach.textmetrics.lexicons import ValenceLexicon, default_valence_lexicon

BOOST = 0.293
DAMPEN = -0.293
CAPS_BOOST = 0.733
NEGATION_SCALAR = -0.74
ALPHA = 15
WINDOW = 3

NEGATIONS = frozenset(
    """aint arent cannot cant couldnt darent didnt doesnt ain't aren't can't couldn't daren't didn't doesn't
    dont hadnt hasnt havent isnt mightnt mustnt neither don't hadn't hasn't haven't isn't mightn't mustn't
    neednt needn't never none nope nor not nothing nowhere oughtnt shant shouldnt uhuh wasnt werent
    oughtn't shan't shouldn't uh-uh wasn't weren't without wont wouldnt won't wouldn't rarely seldom despite""".split()
)

_BOOSTERS_UP = """absolutely amazingly awfully completely considerable considerably decidedly deeply effing enormous
enormously entirely especially exceptional exceptionally extreme extremely fabulously flipping flippin frackin
fracking fricking frickin frigging friggin fully fuckin fucking fuggin fugging greatly hella highly hugely
incredible incredibly intensely major majorly more most particularly purely quite really remarkably so
substantially thoroughly total totally tremendous tremendously uber unbelievably unusually utter utterly very"""
_BOOSTERS_DOWN = """almost barely hardly kinda kindof kind-of less little marginal marginally occasional occasionally
partly scarce scarcely slight slightly somewhat sorta sortof sort-of"""

BOOSTERS: dict[str, float] = {w: BOOST for w in _BOOSTERS_UP.split()}
BOOSTERS.update({w: DAMPEN for w in _BOOSTERS_DOWN.split()})
BOOSTERS.update({"just enough": DAMPEN, "kind of": DAMPEN, "sort of": DAMPEN})

IDIOMS = {
    "the shit": 3,
    "the bomb": 3,
    "bad ass": 1.5,
    "badass": 1.5,
    "bus stop": 0.0,
    "yeah right": -2,
    "kiss of death": -1.5,
    "to die for": 3,
    "beating heart": 3.5,
}


@dataclass(frozen=True)
class SentimentScore:
    compound: float
    pos: float
    neg: float
    neu: float

    @classmethod
    def zero(cls) -> SentimentScore:
        return cls(0.0, 0.0, 0.0, 0.0)


def _is_negation(word: str) -> bool:
    return word in NEGATIONS or "n't" in word


def _strip_punct(token: str) -> str:
    stripped = token.strip(string.punctuation)
    # two characters or fewer left: probably an emoticon, keep it whole
    return token if len(stripped) <= 2 else stripped


def _replace_emoji(text: str, emoji: dict[str, str]) -> str:
    out = []
    prev_space = True
    for ch in text:
        if ch in emoji:
            if not prev_space:
                out.append(" ")
            out.append(emoji[ch])
            prev_space = False
        else:
            out.append(ch)
            prev_space = ch == " "
    return "".join(out).strip()


def _contrast(valences: list[float], pivot: int) -> None:
    """Halve valences before "but", amplify those after it, in place.

    The target slot is the first slot holding an equal value rather than the
    slot being visited; the reference behaves this way and scores must match it.
    """
    for k in range(len(valences)):
        v = valences[k]
        slot = valences.index(v)
        if slot < pivot:
            valences[slot] = v * 0.5
        elif slot > pivot:
            valences[slot] = v * 1.5


class SentimentAnalyzer:
    def __init__(self, lexicon: ValenceLexicon | None = None) -> None:
        if lexicon is None:
            lexicon = default_valence_lexicon()
        if not lexicon.valence:
            raise ConfigError("valence lexicon not loaded", field="lexicon.valence")
        self.lexicon = lexicon.valence
        self.emoji = lexicon.emoji

    def score(self, text: str) -> SentimentScore:
        text = _replace_emoji(text, self.emoji)
        words = [_strip_punct(t) for t in text.split()]
        lower = [w.lower() for w in words]
        upper = sum(1 for w in words if w.isupper())
        caps_differ = 0 < len(words) - upper < len(words)

        valences: list[float] = []
        for i, word in enumerate(lower):
            if word in BOOSTERS or (word == "kind" and i + 1 < len(lower) and lower[i + 1] == "of"):
                valences.append(0.0)
                continue
            valences.append(self._token_valence(words, lower, i, caps_differ))

        if "but" in lower:
            _contrast(valences, lower.index("but"))
        return self._summarise(valences, text)

    def _token_valence(self, words: list[str], lower: list[str], i: int, caps_differ: bool) -> float:
        word = lower[i]
        if word not in self.lexicon:
            return 0.0
        lex = self.lexicon
        valence = lex[word]
        # "no" directly before a lexicon word acts as a negator, not as a sentiment word
        if word == "no" and i != len(lower) - 1 and lower[i + 1] in lex:
            valence = 0.0
        if (
            (i > 0 and lower[i - 1] == "no")
            or (i > 1 and lower[i - 2] == "no")
            or (i > 2 and lower[i - 3] == "no" and lower[i - 1] in ("or", "nor"))
        ):
            valence = lex[word] * NEGATION_SCALAR
        if words[i].isupper() and caps_differ:
            valence += CAPS_BOOST if valence > 0 else -CAPS_BOOST

        for dist in range(WINDOW):
            j = i - dist - 1
            if j < 0 or lower[j] in lex:
                continue
            boost = self._booster(words[j], valence, caps_differ)
            if dist == 1:
                boost *= 0.95
            elif dist == 2:
                boost *= 0.9
            valence += boost
            valence = self._negate(valence, lower, i, dist)
            if dist == 2:
                valence = self._idioms(valence, lower, i)
        return self._least(valence, lower, i)

    @staticmethod
    def _booster(word: str, valence: float, caps_differ: bool) -> float:
        scalar = BOOSTERS.get(word.lower(), 0.0)
        if scalar == 0.0:
            return 0.0
        if valence < 0:
            scalar = -scalar
        if word.isupper() and caps_differ:
            scalar += CAPS_BOOST if valence > 0 else -CAPS_BOOST
        return scalar

    @staticmethod
    def _negate(valence: float, lower: list[str], i: int, dist: int) -> float:
        before = lower[i - dist - 1]
        if dist == 0:
            return valence * NEGATION_SCALAR if _is_negation(before) else valence
        if dist == 1:
            if lower[i - 2] == "never" and lower[i - 1] in ("so", "this"):
                return valence * 1.25
            if lower[i - 2] == "without" and lower[i - 1] == "doubt":
                return valence
            return valence * NEGATION_SCALAR if _is_negation(before) else valence
        if (lower[i - 3] == "never" and lower[i - 2] in ("so", "this")) or lower[i - 1] in ("so", "this"):
            return valence * 1.25
        if lower[i - 3] == "without" and "doubt" in (lower[i - 2], lower[i - 1]):
            return valence
        return valence * NEGATION_SCALAR if _is_negation(before) else valence

    @staticmethod
    def _idioms(valence: float, lower: list[str], i: int) -> float:
        w3, w2, w1, w0 = lower[i - 3], lower[i - 2], lower[i - 1], lower[i]
        preceding = [f"{w1} {w0}", f"{w2} {w1} {w0}", f"{w2} {w1}", f"{w3} {w2} {w1}", f"{w3} {w2}"]
        for seq in preceding:
            if seq in IDIOMS:
                valence = IDIOMS[seq]
                break
        if len(lower) - 1 > i and f"{w0} {lower[i + 1]}" in IDIOMS:
            valence = IDIOMS[f"{w0} {lower[i + 1]}"]
        if len(lower) - 1 > i + 1 and f"{w0} {lower[i + 1]} {lower[i + 2]}" in IDIOMS:
            valence = IDIOMS[f"{w0} {lower[i + 1]} {lower[i + 2]}"]
        for seq in (f"{w3} {w2} {w1}", f"{w3} {w2}", f"{w2} {w1}"):
            if seq in BOOSTERS:
                valence += BOOSTERS[seq]
        return valence

    def _least(self, valence: float, lower: list[str], i: int) -> float:
        if i > 0 and lower[i - 1] == "least" and lower[i - 1] not in self.lexicon:
            if i == 1 or lower[i - 2] not in ("at", "very"):
                return valence * NEGATION_SCALAR
        return valence

    @staticmethod
    def _summarise(valences: list[float], text: str) -> SentimentScore:
        if not valences:
            return SentimentScore.zero()
        total = float(sum(valences))
        bangs = min(text.count("!"), 4) * 0.292
        qmarks = text.count("?")
        quest = (qmarks * 0.18 if qmarks <= 3 else 0.96) if qmarks > 1 else 0.0
        emphasis = bangs + quest
        if total > 0:
            total += emphasis
        elif total < 0:
            total -= emphasis
        compound = max(-1.0, min(1.0, total / math.sqrt(total * total + ALPHA)))

        pos = sum(v + 1 for v in valences if v > 0)
        neg = sum(v - 1 for v in valences if v < 0)
        neu = sum(1 for v in valences if v == 0)
        if pos > abs(neg):
            pos += emphasis
        elif pos < abs(neg):
            neg -= emphasis
        denom = pos + abs(neg) + neu
        return SentimentScore(compound, abs(pos / denom), abs(neg / denom), abs(neu / denom))


_default: SentimentAnalyzer | None = None


def sentiment(text: str, lexicon: ValenceLexicon | None = None) -> SentimentScore:
    global _default
    if lexicon is not None:
        return SentimentAnalyzer(lexicon).score(text)
    if _default is None:
        _default = SentimentAnalyzer()
    return _default.score(text)
