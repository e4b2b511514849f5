from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from lsm_oracle import CATEGORIES, expected, load_pairs

from teamcoach.errors import ConfigError
from teamcoach.textmetrics import (
    FUNCTION_WORD_CATEGORIES,
    load_function_words,
    lsm,
    pairwise_lsm,
    text_profile,
)
from teamcoach.textmetrics.lsm import FunctionWordProfile, category_score

PAIRS = load_pairs()


def test_category_order_is_fixed():
    assert FUNCTION_WORD_CATEGORIES == CATEGORIES


@pytest.mark.parametrize("pair", PAIRS, ids=[f"pair{i}" for i in range(len(PAIRS))])
def test_profile_counts_match_hand_tally(pair):
    for side in ("member", "team"):
        prof = text_profile(pair[side])
        assert prof.total_tokens == pair[f"{side}_tokens"]
        assert prof.counts == {c: pair[f"{side}_counts"].get(c, 0) for c in CATEGORIES}


@pytest.mark.parametrize("pair", PAIRS, ids=[f"pair{i}" for i in range(len(PAIRS))])
def test_scores_match_exact_arithmetic(pair):
    cats, overall = expected(pair)
    got = lsm(text_profile(pair["member"]), text_profile(pair["team"]))
    for c in CATEGORIES:
        assert got.categories[c] == pytest.approx(float(cats[c]), abs=1e-12)
    assert got.overall == pytest.approx(float(overall), abs=1e-12)


def test_first_listed_category_wins():
    # "since" and "until" are listed as prepositions and as conjunctions
    prof = text_profile("since until")
    assert prof.counts["prepositions"] == 2
    assert prof.counts["conjunctions"] == 0
    assert "since" in load_function_words().report.overlaps


def test_identical_profiles_score_one():
    p = text_profile("We think the oxygen is more important than the map, and so do they.")
    res = lsm(p, p)
    assert res.overall == 1.0
    assert set(res.categories.values()) == {1.0}


def test_absent_category_scores_one():
    res = lsm(text_profile("oxygen water"), text_profile("map rope"))
    assert res.overall == 1.0


def test_disjoint_category_scores_near_zero():
    assert category_score(0.5, 0.0) == pytest.approx(0.0, abs=1e-5)


def test_empty_member_text_has_zero_proportions():
    prof = text_profile("")
    assert prof.total_tokens == 0
    assert set(prof.proportions.values()) == {0.0}


def test_epsilon_must_be_positive():
    p = text_profile("the map")
    with pytest.raises(ValueError):
        lsm(p, p, epsilon=0)


def test_pairwise_covers_each_pair_once():
    profiles = {k: text_profile(v) for k, v in {"a": "the map", "b": "a rope", "c": "we go"}.items()}
    assert list(pairwise_lsm(profiles)) == [("a", "b"), ("a", "c"), ("b", "c")]


def test_custom_lexicon_must_have_all_categories(tmp_path):
    path = tmp_path / "fw.tsv"
    path.write_text("# teamcoach-function-words\tv1\narticles\tthe\n", encoding="utf-8")
    lex = load_function_words(path)
    assert lex.category_of("the") == "articles"
    bad = tmp_path / "bad.tsv"
    bad.write_text("# teamcoach-function-words\tv1\nadjectives\tbig\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_function_words(bad)


proportion = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
profiles = st.builds(
    FunctionWordProfile.from_proportions, st.fixed_dictionaries({c: proportion for c in CATEGORIES})
)


@settings(max_examples=500, deadline=None)
@given(profiles, profiles)
def test_bounded_and_symmetric(a, b):
    ab, ba = lsm(a, b), lsm(b, a)
    assert 0.0 <= ab.overall <= 1.0
    assert all(0.0 <= v <= 1.0 for v in ab.categories.values())
    assert math.isclose(ab.overall, ba.overall, abs_tol=1e-15)


@settings(max_examples=200, deadline=None)
@given(profiles)
def test_self_match_is_maximal(a):
    assert lsm(a, a).overall == 1.0


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=200), st.text(max_size=200))
def test_text_profiles_bounded(x, y):
    res = lsm(text_profile(x), text_profile(y))
    assert 0.0 <= res.overall <= 1.0
