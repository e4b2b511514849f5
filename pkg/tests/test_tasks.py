from __future__ import annotations

import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teamcoach.tasks import (
    RankingSubmission,
    SubmissionError,
    TaskDefinition,
    TaskError,
    builtin_tasks,
    get_task,
    load_tasks,
    positional_distance,
    score_ranking,
    validate_submission,
)


def brute_force_distance(a, b):
    """Footrule distance written independently: position lookups by list scan."""
    total = 0
    for item in a:
        total += abs(list(a).index(item) - list(b).index(item))
    return total


def golden(fixtures_dir):
    return json.loads((fixtures_dir / "expert_tasks.json").read_text(encoding="utf-8"))


def test_builtin_tasks_match_expert_data(fixtures_dir):
    want = golden(fixtures_dir)
    tasks = {t.task_id: t for t in builtin_tasks()}
    assert sorted(tasks) == sorted(want)
    for tid, data in want.items():
        assert list(tasks[tid].items) == data["items"]
        assert list(tasks[tid].expert_ranking) == data["expert"]
    assert tasks["ocean"].expert_ranking[0] == "Shaving mirror"


def test_builtin_tasks_have_scenarios():
    for task in builtin_tasks():
        assert task.title
        assert len(task.scenario) > 100
        assert set(task.notes) == set(task.items)


@pytest.mark.parametrize("task_id", ["canada", "ocean", "moon"])
def test_expert_and_inverse(task_id):
    task = get_task(task_id)
    best = score_ranking(task, RankingSubmission(task_id, task.expert_ranking))
    worst = score_ranking(task, RankingSubmission(task_id, task.expert_ranking[::-1]))
    assert best.score == 100 and best.display() == "100.0"
    assert worst.score == 0 and worst.display() == "0.0"
    assert best.dist_worst == 24


def test_two_adjacent_swaps():
    task = get_task("moon")
    r = list(task.expert_ranking)
    r[0], r[1] = r[1], r[0]
    r[3], r[4] = r[4], r[3]
    s = score_ranking(task, RankingSubmission("moon", tuple(r)))
    assert s.dist_expert == 4
    assert s.score == Fraction(500, 6)
    assert s.display() == "83.3"


def test_all_permutations_against_oracle():
    task = get_task("canada")
    expert = task.expert_ranking
    worst = brute_force_distance(expert[::-1], expert)
    for perm in itertools.permutations(expert):
        s = score_ranking(task, RankingSubmission("canada", perm))
        d = brute_force_distance(perm, expert)
        assert s.dist_expert == d
        assert s.score == Fraction(worst - d, worst) * 100
        assert 0 <= s.score <= 100


@pytest.mark.parametrize("n", range(3, 10))
def test_worst_distance_closed_form(n):
    items = tuple(f"item{i}" for i in range(n))
    assert positional_distance(items[::-1], items) == sum(abs(2 * i - (n + 1)) for i in range(1, n + 1))


def test_validate_is_case_and_space_insensitive():
    task = get_task("moon")
    raw = [f"  {x.upper()} " for x in task.expert_ranking]
    sub = validate_submission(task, raw)
    assert isinstance(sub, RankingSubmission)
    assert sub.ranking == task.expert_ranking


def test_validate_reports_every_violation():
    task = get_task("moon")
    raw = list(task.expert_ranking[:5]) + ["Stellar map", "Laser"]
    violations = validate_submission(task, raw)
    assert "unknown: Laser" in violations
    assert "duplicate: Stellar map" in violations
    assert "missing: Box of matches" in violations
    assert "missing: Parachute silk" in violations


def test_scoring_rejects_invalid_ranking():
    task = get_task("moon")
    with pytest.raises(SubmissionError) as info:
        score_ranking(task, RankingSubmission("moon", task.expert_ranking[:-1]))
    assert info.value.violations == ["missing: Box of matches"]
    with pytest.raises(TaskError):
        score_ranking(task, RankingSubmission("ocean", task.expert_ranking))


def test_definition_invariants():
    with pytest.raises(TaskError):
        TaskDefinition("t", "", ("a", "a"), ("a", "a"))
    with pytest.raises(TaskError):
        TaskDefinition("t", "", ("a", "b"), ("a", "c"))


def test_unknown_task():
    with pytest.raises(TaskError):
        get_task("desert")


def test_load_custom_tasks(tmp_path):
    path = tmp_path / "tasks.json"
    doc = {
        "format": "teamcoach-tasks",
        "tasks": [{"task_id": "desert", "scenario": "hot", "items": ["hat", "water", "map"], "expert_ranking": ["water", "hat", "map"]}],
    }
    path.write_text(json.dumps(doc), encoding="utf-8")
    (task,) = load_tasks(path)
    assert get_task("desert", [task]).expert_ranking == ("water", "hat", "map")
    with pytest.raises(TaskError):
        load_tasks({"format": "other", "tasks": []})


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=2, max_value=12).flatmap(lambda n: st.permutations(list(range(n)))))
def test_score_bounds_and_reversal(perm):
    items = tuple(str(i) for i in range(len(perm)))
    task = TaskDefinition("p", "", items, items)
    ranking = tuple(str(i) for i in perm)
    s = score_ranking(task, RankingSubmission("p", ranking))
    assert 0 <= s.score <= 100
    assert s.dist_expert % 2 == 0
    assert (s.score == 100) == (ranking == items)
