import itertools

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from pscf_lab.errors import InternalError
from pscf_lab.profiles import Profile, enumerate_profiles, generate_impartial_culture
from pscf_lab.rules import (
    RuleId,
    apply_rule,
    blacks,
    borda,
    condorcet_winner,
    copeland,
    irv,
    is_lottery,
    plurality,
    schulze,
    simpson_kramer,
    uniform_lottery,
)
from strategies import profiles

UNANIMOUS = Profile(3, ((0, 1, 2),) * 3)
CYCLE = Profile(3, ((0, 1, 2), (1, 2, 0), (2, 0, 1)))
X1_3 = Profile(3, ((0, 1, 2), (1, 0, 2), (2, 0, 1)))
X2_3 = Profile(3, ((0, 1, 2), (0, 1, 2), (2, 1, 0)))
X1_4 = Profile(4, ((0, 1, 2, 3), (1, 2, 3, 0), (3, 0, 1, 2)))

CONDORCET_RULES = (RuleId.COPELAND, RuleId.SCHULZE, RuleId.SIMPSON_KRAMER, RuleId.BLACKS)


class TestUniformLottery:
    def test_singleton(self):
        assert np.array_equal(uniform_lottery([0], 3), [1, 0, 0])

    def test_full_set(self):
        assert np.allclose(uniform_lottery([0, 1, 2], 3), [1 / 3] * 3)

    def test_pair_of_four(self):
        assert np.array_equal(uniform_lottery([0, 1], 4), [0.5, 0.5, 0, 0])

    def test_empty_rejected(self):
        with pytest.raises(InternalError):
            uniform_lottery([], 3)


class TestPlurality:
    def test_three_way_tie(self):
        assert np.allclose(plurality(X1_3), [1 / 3] * 3)

    def test_clear_winner(self):
        assert np.array_equal(plurality(X2_3), [1, 0, 0])

    def test_unanimous(self):
        assert np.array_equal(plurality(UNANIMOUS), [1, 0, 0])


class TestBorda:
    def test_hand_computed_scores(self):
        # (a>b>c), (b>a>c), (b>c>a): scores a=3, b=5, c=1.
        p = Profile(3, ((0, 1, 2), (1, 0, 2), (1, 2, 0)))
        assert np.array_equal(borda(p), [0, 1, 0])

    def test_unanimous(self):
        assert np.array_equal(borda(UNANIMOUS), [1, 0, 0])

    def test_reversal_symmetry(self):
        p = Profile(2, ((0, 1), (1, 0)))
        assert np.allclose(borda(p), [0.5, 0.5])


class TestCopeland:
    def test_four_candidate_profile(self):
        # Scores: a=2, b=2, c=1, d=1.
        assert np.array_equal(copeland(X1_4), [0.5, 0.5, 0, 0])

    def test_unanimous(self):
        assert np.array_equal(copeland(UNANIMOUS), [1, 0, 0])


class TestSimpsonKramer:
    def test_unanimous(self):
        assert np.array_equal(simpson_kramer(UNANIMOUS), [1, 0, 0])

    def test_cycle_symmetry(self):
        assert np.allclose(simpson_kramer(CYCLE), [1 / 3] * 3)


class TestSchulze:
    def test_unanimous(self):
        assert np.array_equal(schulze(UNANIMOUS), [1, 0, 0])

    def test_cycle_symmetry(self):
        assert np.allclose(schulze(CYCLE), [1 / 3] * 3)


class TestIrv:
    def test_unanimous(self):
        assert np.array_equal(irv(UNANIMOUS), [1, 0, 0])

    def test_hand_simulation(self):
        # (a>b>c), (a>b>c), (b>c>a): c eliminated, then b.
        p = Profile(3, ((0, 1, 2), (0, 1, 2), (1, 2, 0)))
        assert np.array_equal(irv(p), [1, 0, 0])

    def test_two_candidates_match_plurality_with_lex_tiebreak(self):
        ballots = list(itertools.permutations(range(2)))
        for n in range(1, 5):
            for combo in itertools.product(ballots, repeat=n):
                p = Profile(2, combo)
                lot = plurality(p)
                expected = np.zeros(2)
                expected[np.flatnonzero(lot == lot.max())[0]] = 1.0
                assert np.array_equal(irv(p), expected)


class TestBlacks:
    def test_unanimous(self):
        assert np.array_equal(blacks(UNANIMOUS), [1, 0, 0])

    def test_cycle_falls_back_to_borda(self):
        assert np.allclose(blacks(CYCLE), [1 / 3] * 3)

    def test_condorcet_winner_takes_all(self):
        p = Profile(3, ((1, 0, 2), (1, 2, 0), (0, 1, 2)))
        assert condorcet_winner(p) == 1
        assert np.array_equal(blacks(p), [0, 1, 0])


class TestCondorcetWinner:
    def test_unanimous(self):
        assert condorcet_winner(UNANIMOUS) == 0

    def test_cycle_has_none(self):
        assert condorcet_winner(CYCLE) is None

    def test_four_candidate_profile_has_none(self):
        assert condorcet_winner(X1_4) is None


class TestApplyRule:
    @pytest.mark.parametrize(
        "rule,direct", [(RuleId.PLURALITY, plurality), (RuleId.SCHULZE, schulze), (RuleId.IRV, irv)]
    )
    def test_dispatch(self, rule, direct):
        p = generate_impartial_culture(4, 5, seed=11)
        assert np.array_equal(apply_rule(rule, p), direct(p))


@given(profiles(), st.sampled_from(list(RuleId)))
@settings(max_examples=80, deadline=None)
def test_all_rules_return_simplex_lotteries(p, rule):
    lot = apply_rule(rule, p)
    assert is_lottery(lot)


@given(profiles(min_n=2), st.sampled_from(list(RuleId)), st.data())
@settings(max_examples=60, deadline=None)
def test_anonymity(p, rule, data):
    order = data.draw(st.permutations(range(p.num_voters)))
    shuffled = Profile(p.num_candidates, tuple(p.ballots[i] for i in order))
    assert np.array_equal(apply_rule(rule, p), apply_rule(rule, shuffled))


@given(profiles(min_m=2), st.data())
@settings(max_examples=60, deadline=None)
def test_neutrality_of_rules_without_lexicographic_steps(p, data):
    # IRV is excluded: its lexicographic eliminations are not label-invariant.
    relabel = data.draw(st.permutations(range(p.num_candidates)))
    mapped = Profile(
        p.num_candidates, tuple(tuple(relabel[c] for c in b) for b in p.ballots)
    )
    for rule in (
        RuleId.PLURALITY,
        RuleId.BORDA,
        RuleId.COPELAND,
        RuleId.SCHULZE,
        RuleId.SIMPSON_KRAMER,
        RuleId.BLACKS,
    ):
        original = apply_rule(rule, p)
        permuted = apply_rule(rule, mapped)
        for c in range(p.num_candidates):
            assert permuted[relabel[c]] == pytest.approx(original[c])


@given(profiles(min_m=2), st.data())
@settings(max_examples=60, deadline=None)
def test_unanimity(p, data):
    top = data.draw(st.integers(0, p.num_candidates - 1))
    ballots = tuple((top,) + tuple(c for c in b if c != top) for b in p.ballots)
    shared_top = Profile(p.num_candidates, ballots)
    for rule in RuleId:
        assert apply_rule(rule, shared_top)[top] == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 3, 5])
def test_condorcet_consistency_exhaustive_m3(n):
    for p in enumerate_profiles(3, n):
        w = condorcet_winner(p)
        if w is None:
            continue
        for rule in CONDORCET_RULES:
            assert apply_rule(rule, p)[w] == pytest.approx(1.0)


def test_condorcet_consistency_randomized_m7():
    rng = np.random.default_rng(5)
    hits = 0
    for _ in range(300):
        p = generate_impartial_culture(7, 9, rng)
        w = condorcet_winner(p)
        if w is None:
            continue
        hits += 1
        for rule in CONDORCET_RULES:
            assert apply_rule(rule, p)[w] == pytest.approx(1.0)
    assert hits > 50  # Condorcet winners are common at m=7, n=9
