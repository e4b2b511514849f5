from __future__ import annotations

import json
import math

import pytest

from teamcoach.feedback import (
    FeedbackConfig,
    analyze,
    build_requests,
    classify_heading,
    generate_feedback,
    validate_sections,
)
from teamcoach.feedback.sections import (
    ACTIONABLE,
    IMPROVEMENTS,
    MERGED,
    STRENGTHS,
    SUMMARY,
    split_sections,
)
from teamcoach.llm import (
    BackendPolicy,
    FaultInjectingBackend,
    MockBackend,
    RawCompletion,
    fail_permanently,
)
from teamcoach.promptkit import PromptSpec
from teamcoach.textmetrics import lsm, sentiment, text_profile

TEAM_DOC = """> Summary of Goals and Contributions
The team ranked the items together.

> Key Strengths
- Everyone joined in.

> Areas for Improvement
- Discuss alternatives.

> Actionable Steps
- Restate the ranking.
"""


class Fixed:
    name = "fixed"

    def __init__(self, text: str) -> None:
        self.text = text

    def send(self, req, timeout_s):
        return RawCompletion(self.text, backend=self.name)


def test_bundle_member_lsm_is_against_whole_team(team_three):
    m = analyze(team_three)
    team_text = " ".join(msg.text for msg in team_three.messages)
    for mid in team_three.member_ids:
        own = " ".join(msg.text for msg in team_three.messages if msg.sender_id == mid)
        assert m.lsm[mid].overall == pytest.approx(lsm(text_profile(own), text_profile(team_text)).overall, abs=1e-12)
    assert [round(m.lsm[x].overall, 3) for x in ("U1", "U2", "U3")] == [0.877, 0.816, 0.595]


def test_bundle_sentiment_is_mean_of_messages(team_three):
    m = analyze(team_three)
    per_message = [sentiment(msg.text).compound for msg in team_three.messages]
    assert m.team_sentiment.compound == pytest.approx(math.fsum(per_message) / len(per_message), abs=1e-12)
    u2 = [sentiment(msg.text).compound for msg in team_three.messages if msg.sender_id == "U2"]
    assert m.member_sentiment["U2"].compound == pytest.approx(sum(u2) / 3, abs=1e-12)
    assert m.member_sentiment["U2"].compound < 0 < m.team_sentiment.compound


def test_bundle_serialises(team_three):
    doc = analyze(team_three).to_dict()
    json.dumps(doc)
    assert doc["engagement"]["word_counts"] == {"U1": 23, "U2": 18, "U3": 15}
    assert doc["members"] == {"U1": "alias-1", "U2": "alias-2", "U3": "alias-3"}


@pytest.mark.parametrize(
    ("heading", "key"),
    [
        ("Summary of Goals and Contributions", SUMMARY),
        ("Summary of Contribution", SUMMARY),
        ("Key Strengths", STRENGTHS),
        ("Areas for Improvement", IMPROVEMENTS),
        ("Actionable Steps", ACTIONABLE),
        ("Next steps", ACTIONABLE),
        ("Areas for Improvement and Actionable Steps", MERGED),
        ("Weather report", None),
    ],
)
def test_classify_heading(heading, key):
    assert classify_heading(heading) == key


@pytest.mark.parametrize(
    "styled",
    [
        TEAM_DOC,
        TEAM_DOC.replace("> ", "## "),
        TEAM_DOC.replace("> Key Strengths", "**Key Strengths**"),
        TEAM_DOC.replace("> Actionable Steps", "Actionable Steps:"),
    ],
)
def test_heading_styles(styled):
    parse = validate_sections(styled, "team")
    assert parse.valid, parse.violations
    assert parse.keys() == [SUMMARY, STRENGTHS, IMPROVEMENTS, ACTIONABLE]


def test_team_accepts_merged_heading():
    doc = TEAM_DOC.replace("> Areas for Improvement\n- Discuss alternatives.\n\n> Actionable Steps", "> Improvements and Actionable Steps")
    assert validate_sections(doc, "team").valid


def test_individual_requires_all_four():
    doc = TEAM_DOC.replace("> Areas for Improvement\n- Discuss alternatives.\n\n> Actionable Steps", "> Improvements and Actionable Steps")
    parse = validate_sections(doc, "member:U1")
    assert not parse.valid
    assert "merged: improvements+actionable" in parse.violations


def test_violations_reported():
    doc = TEAM_DOC + "\n> Key Strengths\n- again\n\n> Summary\n"
    parse = validate_sections(doc.replace("- Everyone joined in.", ""), "team")
    assert f"duplicate: {STRENGTHS}" in parse.violations
    assert not parse.valid
    assert validate_sections("just prose", "team").violations == (
        f"missing: {SUMMARY}",
        f"missing: {STRENGTHS}",
        f"missing: {IMPROVEMENTS}",
    )


def test_unclassified_heading_stays_in_body():
    sections = split_sections("> Key Strengths\n> Weather report\nsunny\n")
    assert len(sections) == 1
    assert "Weather report" in sections[0].body


def test_mock_cycle_produces_four_valid_messages(team_three):
    cycle = generate_feedback(team_three, analyze(team_three), MockBackend(1))
    assert [m.request_tag for m in cycle.messages] == ["team", "member:U1", "member:U2", "member:U3"]
    assert all(m.valid for m in cycle.messages)
    assert cycle.complete
    team = cycle.messages[0]
    assert team.is_team and team.member_id is None
    assert cycle.messages[2].member_id == "U2"
    assert team_three.task_goal in team.raw


def test_grid_cell_choice_reaches_requests(team_three):
    cfg = FeedbackConfig(team_spec=PromptSpec("team", "short", "low"), individual_spec=PromptSpec("individual", "short", "low"))
    prompts, team, members = build_requests(team_three, analyze(team_three), cfg)
    assert prompts["team"].spec.cell == 1
    assert "100 WORDS" in team.user_text
    assert [r.request_tag for r in members] == ["member:U1", "member:U2", "member:U3"]


def test_permanent_failure_is_reported(team_three):
    backend = FaultInjectingBackend(MockBackend(), fail_permanently(["member:U2"]))
    cycle = generate_feedback(team_three, analyze(team_three), backend, policy=BackendPolicy(backoff_s=0))
    assert [m.request_tag for m in cycle.messages] == ["team", "member:U1", "member:U3"]
    assert list(cycle.failures) == ["member:U2"]
    assert not cycle.complete
    assert len(cycle.deliverable()) == 3


def test_invalid_output_is_held_back(team_three, tmp_path):
    cycle = generate_feedback(team_three, analyze(team_three), Fixed("Great job everyone."))
    assert not any(m.valid for m in cycle.messages)
    assert cycle.deliverable() == []
    loose = generate_feedback(team_three, analyze(team_three), Fixed("Great job."), FeedbackConfig(deliver_invalid=True))
    assert len(loose.deliverable()) == 4
    path = cycle.write_report(tmp_path / "r.json", "c1")
    doc = json.loads(path.read_text())
    assert doc["messages"]["team"]["valid"] is False
    assert doc["prompts"]["team"]["template_id"] == "team/p8"


def test_word_limit_is_advisory(team_three):
    long_doc = TEAM_DOC.replace("Everyone joined in.", "word " * 400)
    cycle = generate_feedback(team_three, analyze(team_three), Fixed(long_doc))
    team = cycle.messages[0]
    assert team.valid and team.over_limit
    assert team.word_limit == 300
