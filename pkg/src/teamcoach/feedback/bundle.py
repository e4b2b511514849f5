"""The per-cycle bundle of communication metrics that feeds the prompts."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass
from typing import Any

from teamcoach.textmetrics import (
    EngagementReport,
    FlowStats,
    FunctionWordLexicon,
    LsmResult,
    SentimentAnalyzer,
    SentimentScore,
    engagement,
    flow_stats,
    function_word_profile,
    lsm,
    tokenize,
)
from teamcoach.textmetrics.lsm import DEFAULT_EPSILON
from teamcoach.transcript import Transcript


@dataclass(frozen=True)
class MetricBundle:
    members: dict[str, str]  # member id -> alias, transcript order
    team_sentiment: SentimentScore
    member_sentiment: dict[str, SentimentScore]
    engagement: EngagementReport
    lsm: dict[str, LsmResult]
    flow: FlowStats
    task_goal: str

    def alias(self, member_id: str) -> str:
        return self.members[member_id]

    def to_dict(self) -> dict[str, Any]:
        return {
            "members": dict(self.members),
            "task_goal": self.task_goal,
            "team_sentiment": asdict(self.team_sentiment),
            "member_sentiment": {m: asdict(s) for m, s in self.member_sentiment.items()},
            "engagement": asdict(self.engagement),
            "lsm": {m: {"overall": r.overall, "categories": dict(r.categories)} for m, r in self.lsm.items()},
            "flow": asdict(self.flow),
        }


def _mean(scores: Sequence[SentimentScore]) -> SentimentScore:
    if not scores:
        return SentimentScore.zero()
    n = len(scores)
    return SentimentScore(
        math.fsum(s.compound for s in scores) / n,
        math.fsum(s.pos for s in scores) / n,
        math.fsum(s.neg for s in scores) / n,
        math.fsum(s.neu for s in scores) / n,
    )


def analyze(
    t: Transcript,
    function_words: FunctionWordLexicon | None = None,
    analyzer: SentimentAnalyzer | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> MetricBundle:
    """Compute every metric the feedback prompts consume.

    Sentiment is scored per message and averaged: over all messages for the
    team, over the member's own messages for a member (zero if they were silent).
    LSM compares each member's function-word profile with the whole team's.
    Raises DegenerateTranscriptError when there are no countable words.
    """
    eng = engagement(t)
    analyzer = analyzer or SentimentAnalyzer()
    per_message = [analyzer.score(m.text) for m in t.messages]
    by_member: dict[str, list[SentimentScore]] = {m: [] for m in t.member_ids}
    tokens_by_member: dict[str, list[str]] = {m: [] for m in t.member_ids}
    all_tokens: list[str] = []
    for msg, score in zip(t.messages, per_message):
        by_member[msg.sender_id].append(score)
        toks = tokenize(msg.text)
        tokens_by_member[msg.sender_id].extend(toks)
        all_tokens.extend(toks)
    team_profile = function_word_profile(all_tokens, function_words)
    lsm_results = {
        m: lsm(function_word_profile(toks, function_words), team_profile, epsilon)
        for m, toks in tokens_by_member.items()
    }
    return MetricBundle(
        members={m.id: m.alias for m in t.members},
        team_sentiment=_mean(per_message),
        member_sentiment={m: _mean(s) for m, s in by_member.items()},
        engagement=eng,
        lsm=lsm_results,
        flow=flow_stats(t),
        task_goal=t.task_goal,
    )
