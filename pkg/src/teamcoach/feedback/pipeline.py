"""One feedback cycle: render prompts, fan out to the backend, parse replies."""

from __future__ import annotations

import json
import logging
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from teamcoach.feedback.bundle import MetricBundle
from teamcoach.feedback.sections import Section, validate_sections
from teamcoach.llm import (
    TEAM_TAG,
    Backend,
    BackendPolicy,
    CompletionRequest,
    CompletionResult,
    fan_out,
    member_tag,
)
from teamcoach.promptkit import (
    Audience,
    JudgmentRule,
    PromptSpec,
    RenderedPrompt,
    TemplateRegistry,
    render_individual_prompt,
    render_team_prompt,
)
from teamcoach.textmetrics import word_count
from teamcoach.transcript import Transcript

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FeedbackConfig:
    team_spec: PromptSpec = field(default_factory=lambda: PromptSpec.production(Audience.TEAM))
    individual_spec: PromptSpec = field(default_factory=lambda: PromptSpec.production(Audience.INDIVIDUAL))
    model_id: str = "mock"
    max_output_tokens: int = 2048
    temperature: float = 0.0
    rules: tuple[JudgmentRule, ...] | None = None
    deliver_invalid: bool = False
    registry: TemplateRegistry | None = field(default=None, compare=False)


@dataclass(frozen=True)
class FeedbackMessage:
    audience: str  # "team" or "member:<id>"
    sections: tuple[Section, ...]
    raw: str
    request_tag: str
    valid: bool
    violations: tuple[str, ...] = ()
    word_limit: int | None = None
    backend: str = ""

    @property
    def is_team(self) -> bool:
        return self.audience == TEAM_TAG

    @property
    def member_id(self) -> str | None:
        return None if self.is_team else self.audience.split(":", 1)[1]

    @property
    def word_count(self) -> int:
        return word_count(self.raw)

    @property
    def over_limit(self) -> bool:
        return self.word_limit is not None and self.word_count > self.word_limit


@dataclass(frozen=True)
class FeedbackCycle:
    channel_id: str
    messages: tuple[FeedbackMessage, ...]
    failures: dict[str, str]  # request tag -> error text
    prompts: dict[str, RenderedPrompt]
    bundle: MetricBundle
    deliver_invalid: bool = False

    @property
    def complete(self) -> bool:
        return not self.failures and all(m.valid for m in self.messages)

    def deliverable(self) -> list[FeedbackMessage]:
        return [m for m in self.messages if m.valid or self.deliver_invalid]

    def report(self, cycle_id: str = "") -> dict[str, Any]:
        return {
            "cycle_id": cycle_id,
            "channel_id": self.channel_id,
            "metrics": self.bundle.to_dict(),
            "prompts": {
                tag: {"template_id": p.spec.template_id, "sha256": p.digest()} for tag, p in self.prompts.items()
            },
            "messages": {
                m.request_tag: {
                    "valid": m.valid,
                    "violations": list(m.violations),
                    "sections": [s.key for s in m.sections],
                    "word_count": m.word_count,
                    "over_limit": m.over_limit,
                    "backend": m.backend,
                }
                for m in self.messages
            },
            "failures": dict(self.failures),
        }

    def write_report(self, path: str | Path, cycle_id: str = "") -> Path:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(self.report(cycle_id), indent=2, ensure_ascii=False), encoding="utf-8")
        return p


def build_requests(
    t: Transcript, bundle: MetricBundle, config: FeedbackConfig
) -> tuple[dict[str, RenderedPrompt], CompletionRequest, list[CompletionRequest]]:
    prompts: dict[str, RenderedPrompt] = {
        TEAM_TAG: render_team_prompt(t, bundle, config.team_spec, config.rules, config.registry)
    }
    for member_id in t.member_ids:
        prompts[member_tag(member_id)] = render_individual_prompt(
            t, member_id, bundle, config.individual_spec, config.rules, config.registry
        )
    reqs = {
        tag: CompletionRequest(
            p.system_text, p.user_text, config.model_id, config.max_output_tokens, config.temperature, tag
        )
        for tag, p in prompts.items()
    }
    team = reqs.pop(TEAM_TAG)
    return prompts, team, list(reqs.values())


def to_message(result: CompletionResult, word_limit: int | None) -> FeedbackMessage:
    parsed = validate_sections(result.text, result.request_tag)
    msg = FeedbackMessage(
        audience=result.request_tag,
        sections=parsed.sections,
        raw=result.text,
        request_tag=result.request_tag,
        valid=parsed.valid,
        violations=parsed.violations,
        word_limit=word_limit,
        backend=result.backend,
    )
    if msg.over_limit:
        logger.info("%s: %d words exceeds the %d-word target", msg.request_tag, msg.word_count, word_limit)
    if not msg.valid:
        logger.warning("%s: invalid feedback (%s)", msg.request_tag, ", ".join(msg.violations))
    return msg


def generate_feedback(
    t: Transcript,
    bundle: MetricBundle,
    backend: Backend,
    config: FeedbackConfig | None = None,
    policy: BackendPolicy | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> FeedbackCycle:
    """Team message plus one message per member.

    Failed requests are reported in ``failures`` by tag; messages whose
    sections do not validate are kept with ``valid=False``.
    """
    config = config or FeedbackConfig()
    prompts, team_req, member_reqs = build_requests(t, bundle, config)
    out = fan_out(backend, team_req, member_reqs, policy, sleep)
    messages = []
    for tag, prompt in prompts.items():
        if tag in out.results:
            messages.append(to_message(out.results[tag], prompt.word_limit))
    failures = {tag: str(err) for tag, err in out.failures.items()}
    return FeedbackCycle(t.channel_id, tuple(messages), failures, prompts, bundle, config.deliver_invalid)


def messages_by_tag(messages: Sequence[FeedbackMessage]) -> dict[str, FeedbackMessage]:
    return {m.request_tag: m for m in messages}
