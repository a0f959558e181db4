"""Shared hypothesis strategies for property tests."""

import hypothesis.strategies as st

from pscf_lab.profiles import Profile


@st.composite
def profiles(draw, min_m=1, max_m=5, min_n=1, max_n=6):
    m = draw(st.integers(min_m, max_m))
    n = draw(st.integers(min_n, max_n))
    ballots = tuple(tuple(draw(st.permutations(range(m)))) for _ in range(n))
    return Profile(m, ballots)


@st.composite
def lotteries(draw, m):
    weights = draw(
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=m, max_size=m).filter(
            lambda w: sum(w) > 1e-6
        )
    )
    total = sum(weights)
    return tuple(w / total for w in weights)
