from __future__ import annotations

import shutil
from dataclasses import replace
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teamcoach.errors import ConfigError
from teamcoach.feedback import analyze
from teamcoach.promptkit import (
    Audience,
    ContextLevel,
    JudgmentRule,
    Length,
    PromptSpec,
    RenderError,
    TemplateRegistry,
    grid,
    judgment_synthesizer,
    render_individual_prompt,
    render_ranking_eval_prompt,
    render_team_prompt,
    rules_with_thresholds,
)
from teamcoach.promptkit.judgments import format_decimal
from teamcoach.promptkit.render import NO_JUDGMENTS, PLACEHOLDER, fill
from teamcoach.tasks import RankingSubmission, get_task, score_ranking
from teamcoach.textmetrics import SentimentScore

LEVEL_KINDS = {
    "low": {"formatting-rules", "task-goal", "transcript"},
    "medium": {"formatting-rules", "task-goal", "transcript", "metric-datum", "few-shot-examples"},
    "high": {"formatting-rules", "task-goal", "transcript", "metric-datum", "few-shot-examples", "explicit-judgment"},
}


@pytest.fixture
def bundle(team_three):
    return analyze(team_three)


def render(t, m, spec, member="U1"):
    if spec.audience is Audience.TEAM:
        return render_team_prompt(t, m, spec)
    return render_individual_prompt(t, member, m, spec)


def test_grid_cells():
    cells = grid("team")
    assert [s.cell for s in cells] == list(range(1, 10))
    assert [s.template_id for s in cells][:3] == ["team/p1", "team/p2", "team/p3"]
    assert PromptSpec("individual", "short", "low").cell == 1
    assert PromptSpec("individual", "long", "high").cell == 9
    assert PromptSpec("team", "medium", "medium").cell == 5
    with pytest.raises(ValueError):
        grid("ranking-eval")


def test_production_cells():
    assert PromptSpec.production("team").template_id == "team/p8"
    assert PromptSpec.production("individual").template_id == "individual/p5"


def test_length_settings():
    assert [x.word_limit for x in Length] == [100, 200, 300]
    assert [x.example_range for x in Length] == ["2-3", "4-5", "5-6"]


@pytest.mark.parametrize("spec", grid("team") + grid("individual"), ids=lambda s: s.template_id)
def test_every_cell_renders(team_three, bundle, spec):
    r = render(team_three, bundle, spec)
    assert not PLACEHOLDER.search(r.user_text)
    assert set(r.kinds) == LEVEL_KINDS[spec.context_level.value]
    assert f"{spec.length.word_limit} WORDS" in r.user_text
    assert team_three.task_goal in r.user_text
    assert "[2024-05-01T12:00:00Z] alias-1: Hi team" in r.user_text


@pytest.mark.parametrize("audience", ["team", "individual"])
def test_low_context_carries_no_metrics(team_three, bundle, audience):
    r = render(team_three, bundle, PromptSpec(audience, "short", "low"))
    assert "TeamSentiment" not in r.user_text
    assert format_decimal(bundle.team_sentiment.compound) not in r.user_text
    assert "Example:" not in r.user_text
    assert "Explicit judgments" not in r.user_text


def test_medium_adds_metrics_and_examples(team_three, bundle):
    r = render_team_prompt(team_three, bundle, PromptSpec("team", "medium", "medium"))
    assert f"TeamSentiment: {format_decimal(bundle.team_sentiment.compound)}" in r.user_text
    assert "TotalTeamMember: 3" in r.user_text
    assert "Example:" in r.user_text
    assert "Explicit judgments" not in r.user_text


def test_individual_metrics(team_three, bundle):
    r = render_individual_prompt(team_three, "alias-2", bundle, PromptSpec("individual", "medium", "medium"))
    assert "MemberWordsSpokenPercentage: 32%" in r.user_text
    assert f"LanguageStyleMatching: {format_decimal(bundle.lsm['U2'].overall)}" in r.user_text
    assert "Feedback Guide for alias-2" in r.user_text
    # the member's own script is carried alongside the team conversation
    assert "alias-2: Put them last." in r.user_text.split("TeamConversation")[-1]


def test_high_context_contains_fired_judgment(team_three, bundle):
    r = render_team_prompt(team_three, bundle, PromptSpec("team", "long", "high"))
    assert "alias-2's messages carried a negative tone" in r.user_text


def test_high_context_without_firing_rule(team_three, bundle):
    r = render_team_prompt(team_three, bundle, PromptSpec("team", "long", "high"), rules=())
    assert NO_JUDGMENTS in r.user_text


def test_individual_sees_only_own_and_team_judgments(team_three, bundle):
    gloomy = replace(bundle, team_sentiment=SentimentScore(-0.4, 0, 0.2, 0.8))
    spec = PromptSpec("individual", "short", "high")
    mine = render_individual_prompt(team_three, "U2", gloomy, spec).user_text
    other = render_individual_prompt(team_three, "U1", gloomy, spec).user_text
    assert "alias-2's messages" in mine
    assert "alias-2's messages" not in other
    assert "overall tone of the conversation was negative (compound sentiment -0.40)" in other


def test_judgment_rules(bundle):
    blocks = judgment_synthesizer(bundle, rules_with_thresholds(engagement=0.3))
    names = [(b.name, b.scope) for b in blocks]
    assert ("low-participation", "U3") in names
    assert ("low-participation", "U1") not in names
    assert all(b.kind == "explicit-judgment" for b in blocks)
    with pytest.raises(ConfigError):
        JudgmentRule("x", "happiness", "<", 0, "")
    with pytest.raises(ConfigError):
        JudgmentRule("x", "lsm", "==", 0, "")


def test_missing_task_goal_fails_loudly(team_three, bundle):
    with pytest.raises(RenderError) as info:
        render_team_prompt(replace(team_three, task_goal=""), bundle)
    assert info.value.placeholder == "TeamTask"


def test_substitution_sources(team_three, bundle):
    r = render_team_prompt(team_three, bundle, PromptSpec("team", "long", "medium"))
    assert r.substitutions["TeamSentiment"] == "metrics.team_sentiment.compound"
    assert r.substitutions["TeamConversation"] == "transcript.messages"


def test_rendering_is_deterministic(team_three, bundle):
    a = render_team_prompt(team_three, bundle)
    b = render_team_prompt(team_three, analyze(team_three))
    assert a.digest() == b.digest()


def test_ranking_eval_prompt():
    task = get_task("moon")
    sub = RankingSubmission("moon", task.expert_ranking)
    r = render_ranking_eval_prompt(task, sub, score_ranking(task, sub))
    assert "1. Two 100 lb. tanks of oxygen, 2. 5 gallons of water" in r.user_text
    assert "received a score of 100%." in r.user_text
    assert "Expert Solution" in r.user_text
    assert task.scenario.strip() in r.user_text
    assert r.word_limit is None
    swapped = list(task.expert_ranking)
    swapped[0], swapped[1] = swapped[1], swapped[0]
    swapped[3], swapped[4] = swapped[4], swapped[3]
    sub = RankingSubmission("moon", tuple(swapped))
    assert "received a score of 83.3%." in render_ranking_eval_prompt(task, sub, score_ranking(task, sub)).user_text


def test_fill_is_single_pass():
    used: dict[str, str] = {}
    out = fill("{A} and {B}", {"A": ("{B}", "a"), "B": ("b", "b")}, "t", used)
    assert out == "{B} and b"
    with pytest.raises(RenderError):
        fill("{C}", {}, "t", {})


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet="{}AbC xyz", max_size=40))
def test_user_text_never_reinterpreted(text):
    out = fill("[{X}]", {"X": (text, "x")}, "t", {})
    assert out == f"[{text}]"


def test_custom_template_directory(tmp_path, team_three, bundle):
    root = tmp_path / "templates"
    with resources.as_file(resources.files("teamcoach").joinpath("templates")) as src:
        shutil.copytree(src, root)
    (root / "fragments" / "team_objective.txt").write_text(
        "# kind: formatting-rules\n# scope: team\nBe kind to {TeamTask}.\n", encoding="utf-8"
    )
    r = render_team_prompt(team_three, bundle, registry=TemplateRegistry(root))
    assert f"Be kind to {team_three.task_goal}." in r.user_text


def test_broken_template_directory(tmp_path):
    with pytest.raises(ConfigError) as info:
        TemplateRegistry(tmp_path)
    assert info.value.field == "prompts.template_dir"


def test_context_rank_is_monotone():
    assert [c.rank for c in ContextLevel] == sorted(c.rank for c in ContextLevel)
