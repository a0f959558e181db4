"""Probabilistic social choice functions returning uniform lotteries.

Each rule maps a profile to a lottery: a length-m probability vector placing
equal mass on every member of the rule's winner set. Scores are computed in
exact integer arithmetic (Copeland scores are doubled to stay integral), so
argmax sets never depend on floating-point rounding. Only IRV breaks ties
during its elimination rounds; every other rule returns the full tied winner
set.
"""

from __future__ import annotations

import enum
from typing import Iterable, Optional

import numpy as np

from .embeddings import _pairwise_counts
from .errors import InternalError
from .profiles import Profile

# A lottery is a 1-D float vector on the probability simplex.
Lottery = np.ndarray

LOTTERY_TOL = 1e-9


class RuleId(str, enum.Enum):
    PLURALITY = "plurality"
    BORDA = "borda"
    COPELAND = "copeland"
    SCHULZE = "schulze"
    SIMPSON_KRAMER = "simpson_kramer"
    IRV = "irv"
    BLACKS = "blacks"


def is_lottery(vec: np.ndarray, tol: float = LOTTERY_TOL) -> bool:
    vec = np.asarray(vec)
    return bool(vec.ndim == 1 and np.all(vec >= 0) and abs(vec.sum() - 1.0) <= tol)


def uniform_lottery(winners: Iterable[int], m: int) -> Lottery:
    """Probability 1/|winners| on each winner, 0 elsewhere."""
    winners = list(winners)
    if not winners:
        raise InternalError("no rule may produce an empty winner set")
    if any(not 0 <= w < m for w in winners):
        raise InternalError(f"winner index out of range: {winners}")
    lot = np.zeros(m)
    lot[winners] = 1.0 / len(winners)
    return lot


def _argmax_set(scores: np.ndarray) -> np.ndarray:
    return np.flatnonzero(scores == scores.max())


def plurality(p: Profile) -> Lottery:
    """Uniform over the candidates ranked first by the most voters."""
    counts = np.bincount(p.ranking_array[:, 0], minlength=p.num_candidates)
    return uniform_lottery(_argmax_set(counts), p.num_candidates)


def borda_scores(p: Profile) -> np.ndarray:
    """Integer Borda scores: a candidate at 1-indexed rank r earns m - r points."""
    m = p.num_candidates
    return (m - 1 - p.position_array).sum(axis=0)


def borda(p: Profile) -> Lottery:
    """Uniform over the candidates with maximum Borda score."""
    return uniform_lottery(_argmax_set(borda_scores(p)), p.num_candidates)


def copeland(p: Profile) -> Lottery:
    """Uniform over maximum Copeland score: pairwise wins plus half per tie.

    Scores are doubled (2 per win, 1 per tie) so the argmax is exact.
    """
    n = p.num_voters
    d = _pairwise_counts(p)
    wins = (2 * d > n).sum(axis=1)
    ties = (2 * d == n).sum(axis=1) - 1  # every candidate "ties" itself on the diagonal
    return uniform_lottery(_argmax_set(2 * wins + ties), p.num_candidates)


def condorcet_winner(p: Profile) -> Optional[int]:
    """The candidate with a strict pairwise majority over every other, if any."""
    n = p.num_voters
    d = _pairwise_counts(p)
    beats = 2 * d > n
    np.fill_diagonal(beats, True)
    winners = np.flatnonzero(beats.all(axis=1))
    return int(winners[0]) if winners.size else None


def _majority_graph(p: Profile) -> np.ndarray:
    """Edge weights of the tournament graph: d[j, k] where a strict majority
    prefers j to k, 0 where there is no edge (ties contribute no edge)."""
    n = p.num_voters
    d = _pairwise_counts(p)
    return np.where(2 * d > n, d, 0)


def simpson_kramer(p: Profile) -> Lottery:
    """Uniform over candidates whose heaviest incoming majority edge is lightest.

    A candidate with no incoming edge (a Condorcet winner) scores 0, which
    makes the rule Condorcet-consistent.
    """
    g = _majority_graph(p)
    worst_incoming = g.max(axis=0)
    winners = np.flatnonzero(worst_incoming == worst_incoming.min())
    return uniform_lottery(winners, p.num_candidates)


def schulze(p: Profile) -> Lottery:
    """Uniform over the Schulze winners under widest-path (max-min) strengths.

    Path strength is the minimum edge weight along the path; p(a, b) is the
    maximum strength over paths from a to b, 0 if none exists. Winners are the
    candidates a with p(a, b) >= p(b, a) against every b.
    """
    m = p.num_candidates
    strength = _majority_graph(p)
    for k in range(m):
        strength = np.maximum(strength, np.minimum.outer(strength[:, k], strength[k, :]))
    np.fill_diagonal(strength, 0)
    winners = np.flatnonzero((strength >= strength.T).all(axis=1))
    if winners.size == 0:
        raise InternalError("Schulze winner set is provably non-empty")
    return uniform_lottery(winners, m)


def irv(p: Profile) -> Lottery:
    """Instant-runoff: m - 1 rounds, each deleting the lowest-plurality candidate.

    Ties for elimination are broken lexicographically in favour of
    lower-indexed candidates: the highest-indexed of the tied candidates is
    the one eliminated. With m = 2 this reduces to plurality with a
    lexicographic tie-break. All probability mass goes to the sole survivor.
    """
    m = p.num_candidates
    ranking = p.ranking_array
    active = np.ones(m, dtype=bool)
    for _ in range(m - 1):
        counts = np.zeros(m, dtype=np.int64)
        for ballot in ranking:
            for c in ballot:
                if active[c]:
                    counts[c] += 1
                    break
        alive = np.flatnonzero(active)
        lowest = alive[counts[alive] == counts[alive].min()]
        active[lowest.max()] = False
    return uniform_lottery(np.flatnonzero(active), m)


def blacks(p: Profile) -> Lottery:
    """Condorcet winner when one exists, otherwise the Borda lottery."""
    w = condorcet_winner(p)
    if w is not None:
        return uniform_lottery([w], p.num_candidates)
    return borda(p)


_RULES = {
    RuleId.PLURALITY: plurality,
    RuleId.BORDA: borda,
    RuleId.COPELAND: copeland,
    RuleId.SCHULZE: schulze,
    RuleId.SIMPSON_KRAMER: simpson_kramer,
    RuleId.IRV: irv,
    RuleId.BLACKS: blacks,
}


def apply_rule(rule: RuleId, p: Profile) -> Lottery:
    """Dispatch to the rule implementation for ``rule``."""
    return _RULES[RuleId(rule)](p)
