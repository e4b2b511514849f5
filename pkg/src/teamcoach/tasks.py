"""Survival ranking tasks and their scoring.

A team's ranking is compared with the expert order by the sum of absolute
position differences. The score is the distance saved relative to the worst
case, the inverse of the expert order::

    score = (dist_worst - dist_expert) / dist_worst * 100

Scores are kept as exact fractions; callers round for display.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from datetime import datetime
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

from teamcoach.errors import TeamcoachError

TASKS_FORMAT = "teamcoach-tasks"


class TaskError(TeamcoachError):
    pass


class SubmissionError(TaskError):
    def __init__(self, violations: Sequence[str]) -> None:
        self.violations = list(violations)
        super().__init__("invalid ranking: " + "; ".join(self.violations))


@dataclass(frozen=True)
class TaskDefinition:
    task_id: str
    scenario: str
    items: tuple[str, ...]
    expert_ranking: tuple[str, ...]
    title: str = ""
    notes: dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if len(set(self.items)) != len(self.items):
            raise TaskError(f"task {self.task_id}: duplicate items")
        if sorted(self.expert_ranking) != sorted(self.items):
            raise TaskError(f"task {self.task_id}: expert ranking is not a permutation of the items")
        if len(self.items) < 2:
            raise TaskError(f"task {self.task_id}: needs at least two items")


@dataclass(frozen=True)
class RankingSubmission:
    task_id: str
    ranking: tuple[str, ...]
    submitted_at: datetime | None = None


@dataclass(frozen=True)
class TaskScore:
    score: Fraction
    dist_expert: int
    dist_worst: int

    @property
    def score_percent(self) -> float:
        return float(self.score)

    def display(self) -> str:
        return f"{float(self.score):.1f}"


def positional_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Sum over items of |position in a - position in b|."""
    pos_b = {item: i for i, item in enumerate(b)}
    return sum(abs(i - pos_b[item]) for i, item in enumerate(a))


def score_ranking(task: TaskDefinition, sub: RankingSubmission) -> TaskScore:
    if sub.task_id != task.task_id:
        raise TaskError(f"submission is for task {sub.task_id!r}, not {task.task_id!r}")
    violations = _violations(task, sub.ranking)
    if violations:
        raise SubmissionError(violations)
    dist_expert = positional_distance(sub.ranking, task.expert_ranking)
    dist_worst = positional_distance(task.expert_ranking[::-1], task.expert_ranking)
    score = Fraction(dist_worst - dist_expert, dist_worst) * 100
    return TaskScore(score, dist_expert, dist_worst)


def _violations(task: TaskDefinition, ranking: Sequence[str]) -> list[str]:
    out = []
    seen = set()
    for item in ranking:
        if item not in task.items:
            out.append(f"unknown: {item}")
        elif item in seen:
            out.append(f"duplicate: {item}")
        seen.add(item)
    out.extend(f"missing: {item}" for item in task.items if item not in seen)
    return out


def validate_submission(
    task: TaskDefinition, raw_items: Iterable[str], submitted_at: datetime | None = None
) -> RankingSubmission | list[str]:
    """Match ``raw_items`` case-insensitively against the task's item names.

    Returns the submission, or the list of violations (``unknown: x``,
    ``duplicate: x``, ``missing: x``).
    """
    canonical = {item.casefold(): item for item in task.items}
    ranking = []
    violations = []
    for raw in raw_items:
        name = canonical.get(" ".join(str(raw).split()).casefold())
        if name is None:
            violations.append(f"unknown: {str(raw).strip()}")
            continue
        ranking.append(name)
    violations.extend(_violations(task, ranking))
    if violations:
        return violations
    return RankingSubmission(task.task_id, tuple(ranking), submitted_at)


def _task_from_dict(d: dict[str, Any]) -> TaskDefinition:
    try:
        items = d["items"]
        names = tuple(i["name"] if isinstance(i, dict) else str(i) for i in items)
        notes = {i["name"]: i.get("note", "") for i in items if isinstance(i, dict)}
        return TaskDefinition(
            task_id=str(d["task_id"]),
            scenario=str(d.get("scenario", "")),
            items=names,
            expert_ranking=tuple(d["expert_ranking"]),
            title=str(d.get("title", "")),
            notes=notes,
        )
    except (KeyError, TypeError) as exc:
        raise TaskError(f"malformed task definition: {exc}") from exc


def load_tasks(source: str | Path | dict[str, Any]) -> list[TaskDefinition]:
    """Load task definitions from a file (or parsed document) in the built-in format."""
    doc = source if isinstance(source, dict) else json.loads(Path(source).read_text(encoding="utf-8"))
    if doc.get("format") != TASKS_FORMAT:
        raise TaskError(f"not a {TASKS_FORMAT} document")
    return [_task_from_dict(t) for t in doc["tasks"]]


@lru_cache(maxsize=1)
def _builtin() -> tuple[TaskDefinition, ...]:
    text = resources.files("teamcoach").joinpath("data").joinpath("tasks.json").read_text(encoding="utf-8")
    return tuple(load_tasks(json.loads(text)))


def builtin_tasks() -> list[TaskDefinition]:
    return list(_builtin())


def get_task(task_id: str, extra: Iterable[TaskDefinition] = ()) -> TaskDefinition:
    for task in [*extra, *_builtin()]:
        if task.task_id == task_id:
            return task
    raise TaskError(f"unknown task {task_id!r}")
