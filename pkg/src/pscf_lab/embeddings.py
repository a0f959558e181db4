"""Fixed-size m x m matrix embeddings of preference profiles.

Three embeddings are supported: the tournament matrix of pairwise majority
outcomes, the weighted tournament of pairwise support counts, and the rank
frequency matrix of (candidate, position) counts. Raw weighted-tournament and
rank-frequency entries are integer counts; dividing by the voter count of the
embedded profile yields the normalized form fed to networks, which is what
makes model inputs independent of the number of voters.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import StateError
from .profiles import Profile


class EmbeddingKind(str, enum.Enum):
    TOURNAMENT = "tournament"
    WEIGHTED_TOURNAMENT = "weighted_tournament"
    RANK_FREQUENCY = "rank_frequency"


@dataclass(frozen=True)
class EmbeddingMatrix:
    kind: EmbeddingKind
    m: int
    entries: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)


def _pairwise_counts(p: Profile) -> np.ndarray:
    """(m, m) int matrix; [j, k] counts voters putting j before k. Diagonal 0."""
    pos = p.position_array
    return (pos[:, :, None] < pos[:, None, :]).sum(axis=0, dtype=np.int64)


def weighted_tournament(p: Profile) -> EmbeddingMatrix:
    """Pairwise support counts |{i : j preferred to k}|; diagonal 0."""
    return EmbeddingMatrix(EmbeddingKind.WEIGHTED_TOURNAMENT, p.num_candidates, _pairwise_counts(p))


def tournament(p: Profile) -> EmbeddingMatrix:
    """Majority outcomes: 1 if a strict majority prefers j to k, 0 if the
    reverse, 1/2 on an exact tie. The diagonal is fixed at 1/2."""
    n = p.num_voters
    counts = _pairwise_counts(p)
    entries = np.full(counts.shape, 0.5)
    entries[2 * counts > n] = 1.0
    entries[2 * counts < n] = 0.0
    np.fill_diagonal(entries, 0.5)
    return EmbeddingMatrix(EmbeddingKind.TOURNAMENT, p.num_candidates, entries)


def rank_frequency(p: Profile) -> EmbeddingMatrix:
    """[c, k] counts voters ranking candidate c at position k (0-indexed columns)."""
    m = p.num_candidates
    pos = p.position_array
    flat = (np.arange(m)[None, :] * m + pos).ravel()
    entries = np.bincount(flat, minlength=m * m).reshape(m, m).astype(np.int64)
    return EmbeddingMatrix(EmbeddingKind.RANK_FREQUENCY, m, entries)


_EMBEDDERS = {
    EmbeddingKind.TOURNAMENT: tournament,
    EmbeddingKind.WEIGHTED_TOURNAMENT: weighted_tournament,
    EmbeddingKind.RANK_FREQUENCY: rank_frequency,
}


def embed(p: Profile, kind: EmbeddingKind) -> EmbeddingMatrix:
    """Compute the raw embedding of ``p`` under ``kind``."""
    return _EMBEDDERS[EmbeddingKind(kind)](p)


def normalize(e: EmbeddingMatrix, n: int) -> EmbeddingMatrix:
    """Divide count entries by the voter count ``n`` of the embedded profile.

    Tournament matrices already live in [0, 1] and pass through with entries
    unchanged. Normalizing twice is a state error.
    """
    if e.normalized:
        raise StateError("embedding is already normalized")
    if n < 1:
        raise StateError(f"voter count must be positive, got {n}")
    if e.kind is EmbeddingKind.TOURNAMENT:
        return replace(e, normalized=True)
    return EmbeddingMatrix(e.kind, e.m, e.entries.astype(np.float64) / n, normalized=True)


def to_feature_vector(e: EmbeddingMatrix) -> np.ndarray:
    """Row-major flattening into a length m*m float vector for network input."""
    if e.kind is not EmbeddingKind.TOURNAMENT and not e.normalized:
        raise StateError("count embeddings must be normalized before flattening")
    return e.entries.astype(np.float64).ravel().copy()


def feature_vector(p: Profile, kind: EmbeddingKind) -> np.ndarray:
    """Normalized, flattened embedding of ``p``: the standard model input."""
    return to_feature_vector(normalize(embed(p, kind), p.num_voters))
