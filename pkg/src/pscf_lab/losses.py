"""Loss functions over lotteries: L1 rule loss, stochastic dominance, participation.

Stochastic dominance is evaluated along a voter's ranking: lottery P dominates
Q when every prefix of the ranking receives at least as much probability
under P as under Q. The dominance loss is the largest prefix shortfall, which
is zero exactly when dominance holds and is piecewise-linear in the lottery
entries, so it can drive gradient training. Participation loss asks, for each
voter, how far the lottery obtained by their abstention falls short of
dominating the truthful lottery with respect to their own ballot, and takes
the worst voter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, VoterError
from .profiles import Ballot, Profile, remove_voter
from .rules import Lottery

DOMINANCE_TOL = 1e-9


@dataclass(frozen=True)
class LossValue:
    """A non-negative loss, optionally broken into its two training components."""

    value: float
    rule_loss: Optional[float] = None
    participation_loss: Optional[float] = None

    @classmethod
    def combined(cls, rule_loss: float, participation_loss: float) -> "LossValue":
        return cls(rule_loss + participation_loss, rule_loss, participation_loss)


def l1_loss(p: Lottery, q: Lottery) -> float:
    """Sum of absolute per-candidate probability differences."""
    p, q = np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionError(f"lottery length mismatch: {p.shape} vs {q.shape}")
    return float(np.abs(p - q).sum())


def _prefix_sums(lottery: Lottery, sigma: Ballot) -> np.ndarray:
    return np.cumsum(np.asarray(lottery, dtype=np.float64)[list(sigma)])


def stochastically_dominates(
    p: Lottery, q: Lottery, sigma: Ballot, tol: float = DOMINANCE_TOL
) -> bool:
    """True iff every sigma-prefix gets at least as much mass under p as under q."""
    return bool(np.all(_prefix_sums(p, sigma) >= _prefix_sums(q, sigma) - tol))


def sd_loss(p: Lottery, sigma: Ballot, q: Lottery) -> float:
    """Largest prefix shortfall of p below the reference q along sigma.

    Zero when p stochastically dominates q; the final prefix always
    contributes zero because both lotteries sum to one.
    """
    gaps = _prefix_sums(q, sigma) - _prefix_sums(p, sigma)
    return float(max(0.0, gaps.max()))


def participation_loss(f: Callable[[Profile], Lottery], x: Profile) -> float:
    """Worst-case abstention gain under ``f`` at profile ``x``.

    For each voter i, compare f on the profile without voter i against the
    truthful lottery f(x) along voter i's own ballot, and return the largest
    dominance loss. A profile-independent f scores exactly zero.
    """
    if x.num_voters < 2:
        raise VoterError("participation needs at least two voters")
    truthful = f(x)
    return max(
        sd_loss(f(remove_voter(x, i)), x.ballots[i], truthful)
        for i in range(x.num_voters)
    )
