"""The experiment-session protocol: teams, rounds, timers, scoring and feedback.

Each round every team discusses for ``round_duration``, submits a ranking
that is scored against the expert order, and sees the score revealed in its
channel. Treatment teams then get a feedback cycle followed by the feedback
reading window; control teams do not.
"""

from __future__ import annotations

import logging
import random
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum
from typing import Any

from teamcoach.delivery import (
    Adapter,
    DeliveryReport,
    IdempotencyLedger,
    Routing,
    announce,
    deliver,
)
from teamcoach.errors import ConfigError, TeamcoachError
from teamcoach.feedback import FeedbackConfig, MetricBundle, analyze, generate_feedback
from teamcoach.llm import (
    RANKING_TAG,
    Backend,
    BackendPolicy,
    CompletionRequest,
    LlmError,
    complete,
)
from teamcoach.orchestrator.behaviour import TeamBehaviour
from teamcoach.orchestrator.clock import Clock
from teamcoach.orchestrator.events import EventLog
from teamcoach.promptkit import render_ranking_eval_prompt
from teamcoach.tasks import (
    RankingSubmission,
    TaskDefinition,
    TaskScore,
    score_ranking,
    validate_submission,
)
from teamcoach.textmetrics import DegenerateTranscriptError
from teamcoach.transcript import Transcript

logger = logging.getLogger(__name__)


class SessionError(TeamcoachError):
    pass


class Condition(str, Enum):
    CONTROL = "control"
    TREATMENT = "treatment"


class Phase(str, Enum):
    DISCUSSING = "discussing"
    SUBMITTING = "submitting"
    SCORED = "scored"
    FEEDBACK = "feedback"
    DONE = "done"


LEGAL_TRANSITIONS: dict[Phase, frozenset[Phase]] = {
    Phase.DISCUSSING: frozenset({Phase.SUBMITTING}),
    # a team that submits nothing by the deadline goes straight to done
    Phase.SUBMITTING: frozenset({Phase.SCORED, Phase.DONE}),
    Phase.SCORED: frozenset({Phase.FEEDBACK, Phase.DONE}),
    Phase.FEEDBACK: frozenset({Phase.DONE}),
    Phase.DONE: frozenset(),
}

REMAINDER_POLICIES = ("reject", "spread", "smaller-team")


@dataclass(frozen=True)
class SessionPlan:
    participants: tuple[str, ...]
    rounds: tuple[TaskDefinition, ...]
    team_size: int = 3
    conditions: tuple[Condition, ...] = ()
    treatment_teams: int | None = None
    round_duration: timedelta = timedelta(minutes=10)
    feedback_window: timedelta = timedelta(minutes=3)
    remainder: str = "reject"
    seed: int = 0
    ranking_eval: bool = False
    channels: tuple[str, ...] = ()  # existing team channels, in team order; generated ids when empty

    def __post_init__(self) -> None:
        if self.team_size < 2:
            raise ConfigError("must be at least 2", field="session.team_size")
        if not self.rounds:
            raise ConfigError("at least one round is required", field="session.tasks")
        if len(set(self.participants)) != len(self.participants):
            raise ConfigError("participants must be distinct", field="session.participants")
        if self.remainder not in REMAINDER_POLICIES:
            raise ConfigError(f"must be one of {', '.join(REMAINDER_POLICIES)}", field="session.remainder")
        if self.round_duration <= timedelta(0) or self.feedback_window < timedelta(0):
            raise ConfigError("durations must be positive", field="session.round_minutes")
        object.__setattr__(self, "conditions", tuple(Condition(c) for c in self.conditions))


@dataclass(frozen=True)
class Team:
    team_id: str
    channel_id: str
    members: tuple[str, ...]
    condition: Condition


@dataclass(frozen=True)
class TeamAssignment:
    teams: tuple[Team, ...]
    seed: int

    def by_condition(self, condition: Condition) -> list[Team]:
        return [t for t in self.teams if t.condition is condition]


def _split(people: list[str], size: int, policy: str) -> list[list[str]]:
    n_teams, rest = divmod(len(people), size)
    if rest == 0:
        return [people[i * size : (i + 1) * size] for i in range(n_teams)]
    if policy == "reject":
        raise SessionError(f"{len(people)} participants do not divide into teams of {size} ({rest} left over)")
    if policy == "spread":
        if rest > n_teams:
            raise SessionError(f"cannot spread {rest} extra participants over {n_teams} teams")
        teams = [people[i * size : (i + 1) * size] for i in range(n_teams)]
        for i, person in enumerate(people[n_teams * size :]):
            teams[i].append(person)
        return teams
    if rest < 2:
        raise SessionError(f"a team of {rest} is too small")
    return [people[i : i + size] for i in range(0, len(people), size)]


def assemble_teams(participants: Sequence[str], plan: SessionPlan) -> TeamAssignment:
    """Shuffle participants into teams and assign conditions, deterministically for ``plan.seed``.

    Without explicit ``plan.conditions``, ``plan.treatment_teams`` teams (half,
    rounded up, by default) are drawn at random for treatment.
    """
    if len(participants) < plan.team_size:
        raise SessionError(f"need at least {plan.team_size} participants, got {len(participants)}")
    rng = random.Random(plan.seed)
    people = list(participants)
    rng.shuffle(people)
    groups = _split(people, plan.team_size, plan.remainder)
    if plan.conditions:
        if len(plan.conditions) != len(groups):
            raise ConfigError(f"{len(plan.conditions)} conditions for {len(groups)} teams", field="session.conditions")
        conditions = list(plan.conditions)
    else:
        k = (len(groups) + 1) // 2 if plan.treatment_teams is None else plan.treatment_teams
        if not 0 <= k <= len(groups):
            raise ConfigError(f"{k} treatment teams out of {len(groups)}", field="session.treatment_teams")
        chosen = set(rng.sample(range(len(groups)), k))
        conditions = [Condition.TREATMENT if i in chosen else Condition.CONTROL for i in range(len(groups))]
    if plan.channels and len(plan.channels) != len(groups):
        raise ConfigError(f"{len(plan.channels)} channels for {len(groups)} teams", field="session.channels")
    channels = plan.channels or tuple(f"C-team-{i + 1:02d}" for i in range(len(groups)))
    teams = tuple(
        Team(f"team-{i + 1:02d}", channels[i], tuple(g), c) for i, (g, c) in enumerate(zip(groups, conditions))
    )
    return TeamAssignment(teams, plan.seed)


@dataclass(frozen=True)
class RoundState:
    round_index: int
    team_id: str
    phase: Phase = Phase.DISCUSSING
    submission: RankingSubmission | None = None
    score: TaskScore | None = None
    history: tuple[Phase, ...] = (Phase.DISCUSSING,)

    def advance(self, phase: Phase, **changes: Any) -> RoundState:
        if phase not in LEGAL_TRANSITIONS[self.phase]:
            raise SessionError(f"illegal transition {self.phase.value} -> {phase.value}")
        return replace(self, phase=phase, history=(*self.history, phase), **changes)


@dataclass
class SessionResult:
    assignment: TeamAssignment
    states: list[RoundState] = field(default_factory=list)
    deliveries: list[DeliveryReport] = field(default_factory=list)


class SessionRunner:
    def __init__(
        self,
        plan: SessionPlan,
        assignment: TeamAssignment,
        behaviour: TeamBehaviour,
        backend: Backend,
        adapter: Adapter,
        clock: Clock,
        events: EventLog | None = None,
        feedback: FeedbackConfig | None = None,
        policy: BackendPolicy | None = None,
        ledger: IdempotencyLedger | None = None,
        sleep: Callable[[float], None] = time.sleep,
        analyze: Callable[[Transcript], MetricBundle] = analyze,
    ) -> None:
        self.analyze = analyze
        self.plan = plan
        self.assignment = assignment
        self.behaviour = behaviour
        self.backend = backend
        self.adapter = adapter
        self.clock = clock
        self.events = events or EventLog()
        self.feedback = feedback or FeedbackConfig()
        self.policy = policy or BackendPolicy()
        self.ledger = ledger
        self.sleep = sleep
        self.deliveries: list[DeliveryReport] = []

    def _emit(self, event: str, **fields: Any) -> None:
        self.events.emit(event, self.clock.now(), **fields)

    def _move(self, state: RoundState, phase: Phase, team: Team, **changes: Any) -> RoundState:
        new = state.advance(phase, **changes)
        self._emit("phase", team_id=team.team_id, round=state.round_index, **{"from": state.phase.value, "to": phase.value})
        return new

    def run_round(self, state: RoundState, team: Team, task: TaskDefinition, round_start: datetime) -> RoundState:
        if state.phase is not Phase.DISCUSSING:
            raise SessionError(f"round {state.round_index} of {team.team_id} is already {state.phase.value}")
        deadline = round_start + self.plan.round_duration
        self.clock.wait_until(deadline)
        transcript = self.behaviour.conversation(
            team.channel_id, team.members, task, state.round_index, round_start, self.plan.round_duration
        )
        state = self._move(state, Phase.SUBMITTING, team)

        raw = self.behaviour.submission(team.channel_id, task, state.round_index)
        checked = validate_submission(task, raw, self.clock.now()) if raw is not None else ["missing: submission"]
        if not isinstance(checked, RankingSubmission):
            self._emit("submission", team_id=team.team_id, round=state.round_index, valid=False, violations=checked)
            return self._move(state, Phase.DONE, team)
        score = score_ranking(task, checked)
        state = self._move(state, Phase.SCORED, team, submission=checked, score=score)
        self._emit("score", team_id=team.team_id, round=state.round_index, task_id=task.task_id, score=score.display())
        self._reveal(team, task, checked, score, state.round_index)

        if team.condition is Condition.CONTROL:
            return self._move(state, Phase.DONE, team)
        state = self._move(state, Phase.FEEDBACK, team)
        self._feedback(team, transcript, state.round_index)
        self.clock.wait_until(deadline + self.plan.feedback_window)
        return self._move(state, Phase.DONE, team)

    def _reveal(self, team: Team, task: TaskDefinition, sub: RankingSubmission, score: TaskScore, rnd: int) -> None:
        expert = "\n".join(f"{i}. {item}" for i, item in enumerate(task.expert_ranking, 1))
        text = f"> Round {rnd + 1} results\nYour team's score: {score.display()}\n\nExpert ranking:\n{expert}"
        if self.plan.ranking_eval:
            prompt = render_ranking_eval_prompt(task, sub, score, self.feedback.registry)
            req = CompletionRequest(
                prompt.system_text, prompt.user_text, self.feedback.model_id, self.feedback.max_output_tokens,
                self.feedback.temperature, RANKING_TAG,
            )
            try:
                text += "\n\n" + complete(self.backend, req, self.policy, self.sleep).text
            except LlmError as exc:
                logger.warning("ranking evaluation for %s failed: %s", team.team_id, exc)
        rec = announce(self.adapter, team.channel_id, text, f"{team.team_id}:round-{rnd}:reveal", self.ledger)
        self._emit(
            "delivery", team_id=team.team_id, channel_id=team.channel_id, round=rnd, kind="reveal",
            condition=team.condition.value, audience=rec.audience, status=rec.status, target_kind=rec.target.kind.value,
        )

    def _feedback(self, team: Team, transcript: Transcript | None, rnd: int) -> None:
        cycle_id = f"{team.team_id}:round-{rnd}"
        if transcript is None:
            self._emit("cycle", team_id=team.team_id, round=rnd, status="skipped", error="no messages this round")
            return
        try:
            bundle = self.analyze(transcript)
        except DegenerateTranscriptError as exc:
            self._emit("cycle", team_id=team.team_id, round=rnd, status="failed", error=str(exc))
            return
        cycle = generate_feedback(transcript, bundle, self.backend, self.feedback, self.policy, self.sleep)
        report = deliver(cycle.deliverable(), Routing(team.channel_id, team.members), self.adapter, cycle_id, self.ledger)
        self.deliveries.append(report)
        for rec in report.records:
            self._emit(
                "delivery", team_id=team.team_id, channel_id=team.channel_id, round=rnd, kind="feedback",
                condition=team.condition.value, audience=rec.audience, status=rec.status,
                target_kind=rec.target.kind.value,
            )
        self._emit("cycle", team_id=team.team_id, round=rnd, status="ok" if cycle.complete else "partial",
                   failures=cycle.failures)

    def run(self) -> SessionResult:
        result = SessionResult(self.assignment)
        self._emit(
            "session_start", seed=self.plan.seed,
            teams=[{"team_id": t.team_id, "members": list(t.members), "condition": t.condition.value}
                   for t in self.assignment.teams],
        )
        for rnd, task in enumerate(self.plan.rounds):
            round_start = self.clock.now()
            self._emit("round_start", round=rnd, task_id=task.task_id)
            for team in self.assignment.teams:
                result.states.append(self.run_round(RoundState(rnd, team.team_id), team, task, round_start))
            self.clock.wait_until(round_start + self.plan.round_duration + self.plan.feedback_window)
        result.deliveries = list(self.deliveries)
        self._emit("session_end", states=len(result.states))
        return result


def condition_violations(events: Sequence[dict[str, Any]]) -> list[dict[str, Any]]:
    """Feedback deliveries that reached a control team; empty when the session is sound."""
    conditions: dict[str, str] = {}
    for e in events:
        if e["event"] == "session_start":
            conditions.update({t["team_id"]: t["condition"] for t in e["teams"]})
    return [
        e for e in events
        if e["event"] == "delivery" and e.get("kind") == "feedback"
        and conditions.get(e.get("team_id", ""), e.get("condition")) == Condition.CONTROL.value
    ]
