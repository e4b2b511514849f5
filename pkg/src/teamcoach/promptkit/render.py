"""Rendering of prompt templates with transcript and metric data."""

from __future__ import annotations

import hashlib
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from teamcoach.errors import TeamcoachError
from teamcoach.promptkit.blocks import ContextBlock
from teamcoach.promptkit.judgments import (
    JudgmentRule,
    format_decimal,
    format_percent,
    judgment_synthesizer,
)
from teamcoach.promptkit.specs import Audience, PromptSpec
from teamcoach.promptkit.templates import TemplateRegistry, default_registry
from teamcoach.transcript import Transcript, format_for_prompt, member_view

if TYPE_CHECKING:
    from teamcoach.feedback.bundle import MetricBundle
    from teamcoach.tasks import RankingSubmission, TaskDefinition, TaskScore

PLACEHOLDER = re.compile(r"\{([A-Za-z][A-Za-z0-9]*)\}")
NO_JUDGMENTS = "- No metric crossed a judgment threshold."


class RenderError(TeamcoachError):
    def __init__(self, placeholder: str, template: str) -> None:
        self.placeholder = placeholder
        super().__init__(f"no value for placeholder {{{placeholder}}} in {template}")


@dataclass(frozen=True)
class RenderedPrompt:
    spec: PromptSpec
    system_text: str
    user_text: str
    substitutions: dict[str, str] = field(default_factory=dict)  # placeholder -> source
    blocks: tuple[ContextBlock, ...] = ()

    @property
    def kinds(self) -> frozenset[str]:
        return frozenset(b.kind for b in self.blocks)

    @property
    def word_limit(self) -> int | None:
        return self.spec.word_limit

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.system_text.encode("utf-8"))
        h.update(b"\0")
        h.update(self.user_text.encode("utf-8"))
        return h.hexdigest()


Values = Mapping[str, "tuple[str | None, str]"]


def fill(template: str, values: Values, where: str, used: dict[str, str]) -> str:
    """Substitute ``{Name}`` markers in one pass; substituted text is never rescanned."""

    def sub(m: re.Match[str]) -> str:
        name = m.group(1)
        value, source = values.get(name, (None, ""))
        if value is None:
            raise RenderError(name, where)
        used[name] = source
        return value

    return PLACEHOLDER.sub(sub, template)


def _require_audience(spec: PromptSpec, audience: Audience) -> None:
    if spec.audience is not audience:
        raise ValueError(f"spec is for audience {spec.audience.value}, expected {audience.value}")


def _common_values(t: Transcript, m: MetricBundle, spec: PromptSpec) -> dict[str, tuple[str | None, str]]:
    return {
        "TeamConversation": (format_for_prompt(t.messages), "transcript.messages"),
        "TeamSentiment": (format_decimal(m.team_sentiment.compound), "metrics.team_sentiment.compound"),
        "TeamTask": (t.task_goal.strip() or None, "transcript.task_goal"),
        "WordLimit": (str(spec.length.word_limit), "spec.length"),
        "ExampleRange": (spec.length.example_range, "spec.length"),
    }


def _judgment_text(blocks: Sequence[ContextBlock]) -> str:
    if not blocks:
        return NO_JUDGMENTS
    return "\n".join(f"- {b.payload}" for b in blocks)


def _assemble(
    spec: PromptSpec,
    values: Values,
    registry: TemplateRegistry,
    member_id: str | None = None,
) -> RenderedPrompt:
    used: dict[str, str] = {}
    blocks = []
    for frag in registry.blocks_for(spec):
        payload = fill(frag.body, values, f"fragments/{frag.name}.txt", used)
        scope = member_id if frag.scope == "member" and member_id is not None else "team"
        blocks.append(ContextBlock(frag.kind, payload, scope, frag.name))
    user_text = "\n\n".join(b.payload for b in blocks) + "\n"
    return RenderedPrompt(spec, registry.system_text, user_text, dict(sorted(used.items())), tuple(blocks))


def render_team_prompt(
    t: Transcript,
    m: MetricBundle,
    spec: PromptSpec | None = None,
    rules: Sequence[JudgmentRule] | None = None,
    registry: TemplateRegistry | None = None,
) -> RenderedPrompt:
    spec = spec or PromptSpec.production(Audience.TEAM)
    _require_audience(spec, Audience.TEAM)
    values = _common_values(t, m, spec)
    values["TotalTeamMember"] = (str(len(m.members)), "metrics.members")
    values["Judgments"] = (_judgment_text(judgment_synthesizer(m, rules)), "judgments")
    return _assemble(spec, values, registry or default_registry())


def render_individual_prompt(
    t: Transcript,
    member: str,
    m: MetricBundle,
    spec: PromptSpec | None = None,
    rules: Sequence[JudgmentRule] | None = None,
    registry: TemplateRegistry | None = None,
) -> RenderedPrompt:
    """Prompt for one member's feedback; ``member`` is an id or alias."""
    spec = spec or PromptSpec.production(Audience.INDIVIDUAL)
    _require_audience(spec, Audience.INDIVIDUAL)
    member_id = t.resolve_member(member)
    alias = t.alias_of(member_id)
    own = member_view(t, member_id).messages
    judgments = [b for b in judgment_synthesizer(m, rules) if b.scope in ("team", member_id)]
    values = _common_values(t, m, spec)
    values.update(
        {
            "Speaker": (alias, "transcript.members.alias"),
            "TeamMemberName": (alias, "transcript.members.alias"),
            "TeamMemberScript": (format_for_prompt(own) if own else "(no messages)", "transcript.messages[member]"),
            "MemberSentiment": (
                format_decimal(m.member_sentiment[member_id].compound),
                "metrics.member_sentiment.compound",
            ),
            "MemberWordsSpokenPercentage": (
                format_percent(m.engagement.ratios[member_id]),
                "metrics.engagement.ratios",
            ),
            "LanguageStyleMatching": (format_decimal(m.lsm[member_id].overall), "metrics.lsm.overall"),
            "Judgments": (_judgment_text(judgments), "judgments"),
        }
    )
    return _assemble(spec, values, registry or default_registry(), member_id)


def _numbered(items: Sequence[str]) -> str:
    return ", ".join(f"{i}. {item}" for i, item in enumerate(items, 1))


def _score_text(score: TaskScore) -> str:
    if score.score.denominator == 1:
        return str(score.score.numerator)
    return score.display()


def render_ranking_eval_prompt(
    task: TaskDefinition,
    submission: RankingSubmission,
    score: TaskScore,
    registry: TemplateRegistry | None = None,
) -> RenderedPrompt:
    registry = registry or default_registry()
    if submission.task_id != task.task_id:
        raise ValueError(f"submission is for task {submission.task_id!r}, not {task.task_id!r}")
    if sorted(submission.ranking) != sorted(task.items):
        raise ValueError("submission is not a ranking of the task's items")
    values = {
        "TeamTask": (task.scenario.strip() or task.title or None, "task.scenario"),
        "Ranking": (_numbered(submission.ranking), "submission.ranking"),
        "Score": (_score_text(score), "score"),
        "ExpertRanking": (_numbered(task.expert_ranking), "task.expert_ranking"),
    }
    used: dict[str, str] = {}
    user_text = fill(registry.ranking_eval_text, values, "ranking_eval.txt", used) + "\n"
    return RenderedPrompt(PromptSpec(Audience.RANKING_EVAL), registry.system_text, user_text, dict(sorted(used.items())))
