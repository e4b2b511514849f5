"""Participation and flow statistics over a whole transcript."""

from __future__ import annotations

from dataclasses import dataclass

from teamcoach.errors import TeamcoachError
from teamcoach.textmetrics.tokenize import word_count
from teamcoach.transcript import Transcript


class DegenerateTranscriptError(TeamcoachError):
    """The transcript holds no countable words."""


@dataclass(frozen=True)
class EngagementReport:
    word_counts: dict[str, int]
    ratios: dict[str, float]
    total_words: int


@dataclass(frozen=True)
class FlowStats:
    duration_minutes: float
    turns: dict[str, int]
    messages: dict[str, int]
    total_words: int


def _words_by_member(t: Transcript) -> dict[str, int]:
    counts = dict.fromkeys(t.member_ids, 0)
    for msg in t.messages:
        counts[msg.sender_id] += word_count(msg.text)
    return counts


def engagement(t: Transcript) -> EngagementReport:
    """Share of the team's words contributed by each member.

    Members who never spoke are reported with ratio 0.
    """
    counts = _words_by_member(t)
    total = sum(counts.values())
    if total == 0:
        raise DegenerateTranscriptError(f"channel {t.channel_id!r} has no countable words")
    return EngagementReport(counts, {m: n / total for m, n in counts.items()}, total)


def flow_stats(t: Transcript) -> FlowStats:
    """Duration, per-member turns and message counts, total words.

    A turn is a maximal run of consecutive messages from one sender.
    """
    turns = dict.fromkeys(t.member_ids, 0)
    messages = dict.fromkeys(t.member_ids, 0)
    prev = None
    for msg in t.messages:
        messages[msg.sender_id] += 1
        if msg.sender_id != prev:
            turns[msg.sender_id] += 1
            prev = msg.sender_id
    duration = (t.end - t.start).total_seconds() / 60.0
    return FlowStats(duration, turns, messages, sum(_words_by_member(t).values()))
