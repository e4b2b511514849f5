"""Threshold rules that turn metric values into plain-language judgments.

High-context prompts carry these sentences so the model does not have to
interpret raw numbers itself.
"""

from __future__ import annotations

import operator
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

from teamcoach.errors import ConfigError
from teamcoach.promptkit.blocks import ContextBlock

if TYPE_CHECKING:
    from teamcoach.feedback.bundle import MetricBundle

METRICS = ("engagement", "team_sentiment", "member_sentiment", "lsm")
_OPS = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}


@dataclass(frozen=True)
class JudgmentRule:
    """``metric op threshold`` triggers ``template``.

    Templates may use ``{alias}`` (member rules), ``{value}`` (2 decimals)
    and ``{percent}`` (value as an integer percentage).
    """

    name: str
    metric: str
    op: str
    threshold: float
    template: str

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise ConfigError(f"unknown metric {self.metric!r}", field=f"judgments.{self.name}.metric")
        if self.op not in _OPS:
            raise ConfigError(f"unknown comparison {self.op!r}", field=f"judgments.{self.name}.op")

    def fires(self, value: float) -> bool:
        return _OPS[self.op](value, self.threshold)


DEFAULT_RULES: tuple[JudgmentRule, ...] = (
    JudgmentRule(
        "low-participation",
        "engagement",
        "<",
        0.20,
        "Engagement was imbalanced: {alias} contributed {percent}% of the team's words.",
    ),
    JudgmentRule(
        "negative-team-tone",
        "team_sentiment",
        "<",
        0.0,
        "The overall tone of the conversation was negative (compound sentiment {value}).",
    ),
    JudgmentRule(
        "negative-member-tone",
        "member_sentiment",
        "<",
        0.0,
        "{alias}'s messages carried a negative tone (compound sentiment {value}).",
    ),
    JudgmentRule(
        "low-style-matching",
        "lsm",
        "<",
        0.5,
        "{alias}'s language style diverged from the team's (language style matching {value}).",
    ),
)


def rules_with_thresholds(
    engagement: float = 0.20, sentiment: float = 0.0, lsm: float = 0.5
) -> tuple[JudgmentRule, ...]:
    """The default rule table with its thresholds replaced."""
    by_metric = {"engagement": engagement, "team_sentiment": sentiment, "member_sentiment": sentiment, "lsm": lsm}
    return tuple(
        JudgmentRule(r.name, r.metric, r.op, by_metric[r.metric], r.template) for r in DEFAULT_RULES
    )


def format_decimal(value: float) -> str:
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


def format_percent(ratio: float) -> str:
    return f"{ratio * 100:.0f}"


def _render(rule: JudgmentRule, value: float, alias: str = "") -> str:
    return rule.template.format(alias=alias, value=format_decimal(value), percent=format_percent(value))


def _member_values(m: MetricBundle, metric: str) -> Iterable[tuple[str, float]]:
    for member_id in m.members:
        if metric == "engagement":
            yield member_id, m.engagement.ratios[member_id]
        elif metric == "member_sentiment":
            yield member_id, m.member_sentiment[member_id].compound
        else:
            yield member_id, m.lsm[member_id].overall


def judgment_synthesizer(m: MetricBundle, rules: Sequence[JudgmentRule] | None = None) -> list[ContextBlock]:
    """One explicit-judgment block per (rule, subject) that fires.

    Team-level judgments have scope "team"; member-level ones carry the
    member id as scope. Order follows the rule table, then member order.
    """
    out = []
    for rule in DEFAULT_RULES if rules is None else rules:
        if rule.metric == "team_sentiment":
            value = m.team_sentiment.compound
            if rule.fires(value):
                out.append(ContextBlock("explicit-judgment", _render(rule, value), "team", rule.name))
            continue
        for member_id, value in _member_values(m, rule.metric):
            if rule.fires(value):
                text = _render(rule, value, m.members[member_id])
                out.append(ContextBlock("explicit-judgment", text, member_id, rule.name))
    return out
