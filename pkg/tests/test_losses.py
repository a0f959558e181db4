import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from pscf_lab.errors import DimensionError, VoterError
from pscf_lab.losses import (
    LossValue,
    l1_loss,
    participation_loss,
    sd_loss,
    stochastically_dominates,
)
from pscf_lab.profiles import Profile
from pscf_lab.rules import plurality, uniform_lottery
from strategies import lotteries, profiles


class TestL1Loss:
    def test_identity(self):
        assert l1_loss([0.5, 0.5, 0], [0.5, 0.5, 0]) == 0

    def test_disjoint_point_masses(self):
        assert l1_loss([1, 0, 0], [0, 1, 0]) == 2

    def test_hand_arithmetic(self):
        assert l1_loss([0.5, 0.5, 0], [1 / 3, 1 / 3, 1 / 3]) == pytest.approx(2 / 3)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            l1_loss([1, 0], [1, 0, 0])


class TestStochasticDominance:
    def test_reflexive(self):
        p = (0.2, 0.3, 0.5)
        assert stochastically_dominates(p, p, (0, 1, 2))

    def test_point_mass_on_top_dominates(self):
        sigma = (0, 1, 2)
        assert stochastically_dominates((1, 0, 0), (1 / 3, 1 / 3, 1 / 3), sigma)

    def test_worst_does_not_dominate_best(self):
        sigma = (0, 1, 2)
        assert not stochastically_dominates((0, 0, 1), (1, 0, 0), sigma)


class TestSdLoss:
    def test_zero_on_equal(self):
        p = (0.1, 0.2, 0.7)
        assert sd_loss(p, (2, 0, 1), p) == 0

    def test_full_gap(self):
        assert sd_loss((0, 0, 1), (0, 1, 2), (1, 0, 0)) == pytest.approx(1.0)

    def test_hand_arithmetic(self):
        got = sd_loss((1 / 3, 1 / 3, 1 / 3), (0, 1, 2), (0.5, 0.5, 0))
        assert got == pytest.approx(1 / 3)

    @given(st.integers(2, 5), st.data())
    @settings(max_examples=60)
    def test_bounds_and_equivalence(self, m, data):
        p = np.array(data.draw(lotteries(m)))
        q = np.array(data.draw(lotteries(m)))
        sigma = tuple(data.draw(st.permutations(range(m))))
        loss = sd_loss(p, sigma, q)
        assert 0.0 <= loss <= 1.0
        assert (loss <= 1e-9) == stochastically_dominates(p, q, sigma)
        assert sd_loss(p, sigma, p) == 0.0

    @given(st.integers(2, 5), st.data())
    @settings(max_examples=40)
    def test_last_prefix_contributes_nothing(self, m, data):
        p = np.array(data.draw(lotteries(m)))
        q = np.array(data.draw(lotteries(m)))
        sigma = tuple(data.draw(st.permutations(range(m))))
        full_gap = np.cumsum(q[list(sigma)])[-1] - np.cumsum(p[list(sigma)])[-1]
        assert abs(full_gap) < 1e-9


class TestParticipationLoss:
    @given(profiles(min_n=2), st.data())
    @settings(max_examples=40, deadline=None)
    def test_profile_independent_function_scores_zero(self, p, data):
        fixed = np.array(data.draw(lotteries(p.num_candidates)))
        assert participation_loss(lambda _: fixed, p) == 0.0

    def test_plurality_on_unanimous_profiles(self):
        p = Profile(3, ((1, 0, 2),) * 4)
        assert participation_loss(plurality, p) == 0.0

    def test_single_voter_rejected(self):
        with pytest.raises(VoterError):
            participation_loss(plurality, Profile(2, ((0, 1),)))

    def test_detects_no_show_paradox(self):
        # Voter 2 prefers b; with them the outcome is the tie {a,b}, without
        # them a wins outright, so their abstention cannot help. But voter 0
        # favouring a gains mass on a when leaving: loss is positive for a
        # rule contrived to reward the departure.
        def contrarian(profile):
            return uniform_lottery([profile.num_voters % profile.num_candidates],
                                   profile.num_candidates)

        p = Profile(2, ((0, 1), (0, 1), (1, 0)))
        assert participation_loss(contrarian, p) == pytest.approx(1.0)


def test_loss_value_breakdown_sums():
    combined = LossValue.combined(0.25, 0.5)
    assert combined.value == pytest.approx(0.75, abs=1e-12)
    assert combined.rule_loss == 0.25
    assert combined.participation_loss == 0.5
