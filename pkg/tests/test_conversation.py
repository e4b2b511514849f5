from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from teamcoach.textmetrics import (
    DegenerateTranscriptError,
    engagement,
    flow_stats,
    tokenize,
    word_count,
)
from teamcoach.transcript import parse_transcript

# hand tallies for tests/fixtures/team_three.json
WORDS = {"U1": 23, "U2": 18, "U3": 15}
MESSAGES = {"U1": 3, "U2": 3, "U3": 2}
TURNS = {"U1": 2, "U2": 2, "U3": 2}


@pytest.mark.parametrize(
    ("text", "tokens"),
    [
        ("Hello,world! Don't stop.", ["hello", "world", "don't", "stop"]),
        ("It’s fine", ["it's", "fine"]),
        ("a_b c-d", ["a", "b", "c", "d"]),
        ("100 items, 2nd place", ["100", "items", "2nd", "place"]),
        ("café déjà-vu", ["café", "déjà", "vu"]),
        ("...", []),
        ("'quoted'", ["quoted"]),
    ],
)
def test_tokenize(text, tokens):
    assert tokenize(text) == tokens


def test_engagement_hand_tally(team_three):
    rep = engagement(team_three)
    assert rep.word_counts == WORDS
    assert rep.total_words == 56
    assert rep.ratios == {m: n / 56 for m, n in WORDS.items()}
    assert sum(rep.ratios.values()) == pytest.approx(1.0, abs=1e-9)


def test_flow_hand_tally(team_three):
    flow = flow_stats(team_three)
    assert flow.duration_minutes == 6.0
    assert flow.messages == MESSAGES
    assert flow.turns == TURNS
    assert flow.total_words == 56


def _transcript(texts):
    return parse_transcript(
        json.dumps(
            {
                "channel_id": "C",
                "members": [{"id": "A", "alias": "a"}, {"id": "B", "alias": "b"}],
                "messages": [
                    {"sender_id": s, "ts": f"2024-01-01T10:{i:02d}:00Z", "text": t} for i, (s, t) in enumerate(texts)
                ],
            }
        )
    )


def test_silent_member_has_zero_ratio():
    rep = engagement(_transcript([("A", "hello there")]))
    assert rep.ratios == {"A": 1.0, "B": 0.0}


def test_punctuation_only_transcript_is_degenerate():
    with pytest.raises(DegenerateTranscriptError):
        engagement(_transcript([("A", "!!!"), ("B", "?")]))


def test_single_message_has_zero_duration():
    assert flow_stats(_transcript([("A", "hi")])).duration_minutes == 0.0


chat = st.lists(
    st.tuples(st.sampled_from("AB"), st.text(alphabet="abc .!'", min_size=1).filter(str.strip)), min_size=1, max_size=30
)


@settings(max_examples=200, deadline=None)
@given(chat)
def test_ratios_sum_to_one(texts):
    t = _transcript(texts)
    if sum(word_count(x) for _, x in texts) == 0:
        return
    rep = engagement(t)
    assert sum(rep.ratios.values()) == pytest.approx(1.0, abs=1e-9)
    assert all(0.0 <= r <= 1.0 for r in rep.ratios.values())


@settings(max_examples=200, deadline=None)
@given(chat)
def test_turns_bounded_by_messages(texts):
    flow = flow_stats(_transcript(texts))
    assert sum(flow.messages.values()) == len(texts)
    for m in "AB":
        assert flow.turns[m] <= flow.messages[m]
    switches = sum(1 for (a, _), (b, _) in zip(texts, texts[1:]) if a != b)
    assert sum(flow.turns.values()) == switches + 1
