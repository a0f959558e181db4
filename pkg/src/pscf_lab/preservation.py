"""Counterexample search for PSCF preservation under profile embeddings.

An embedding preserves a rule when any two profiles with equal embeddings
receive equal lotteries. This module decides single pairs, searches profile
spaces for violating pairs, and checks the published counterexample pairs,
hunting for replacements where a published pair does not hold up.

Embedding equality is always decided on raw (count-valued) matrices, so the
comparison is exact. The exhaustive search canonicalizes profiles by sorting
ballots: all three embeddings and all seven rules are anonymous, hence any
violating pair stays a violating pair after sorting, and enumerating ballot
multisets instead of sequences loses nothing while shrinking the space from
(m!)^n to C(m! + n - 1, n).
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .embeddings import EmbeddingKind, embed
from .errors import DimensionError
from .profiles import Profile, format_profile
from .rules import RuleId, apply_rule

DEFAULT_BUDGET = 2_000_000
_LOTTERY_TOL = 1e-9


@dataclass(frozen=True)
class PreservationViolation:
    """Two profiles with identical raw embeddings but different lotteries."""

    rule: RuleId
    embedding: EmbeddingKind
    profile_a: Profile
    profile_b: Profile
    lottery_a: np.ndarray
    lottery_b: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "rule": self.rule.value,
            "embedding": self.embedding.value,
            "m": self.profile_a.num_candidates,
            "n": self.profile_a.num_voters,
            "profile_a": format_profile(self.profile_a),
            "profile_b": format_profile(self.profile_b),
            "lottery_a": [float(x) for x in self.lottery_a],
            "lottery_b": [float(x) for x in self.lottery_b],
        }


def check_pair(
    rule: RuleId, emb: EmbeddingKind, a: Profile, b: Profile
) -> Optional[PreservationViolation]:
    """Violation record iff ``a`` and ``b`` embed equally but get different lotteries."""
    if a.num_candidates != b.num_candidates or a.num_voters != b.num_voters:
        raise DimensionError("profiles in a preservation pair must share m and n")
    if not np.array_equal(embed(a, emb).entries, embed(b, emb).entries):
        return None
    lot_a = apply_rule(rule, a)
    lot_b = apply_rule(rule, b)
    if np.abs(lot_a - lot_b).sum() <= _LOTTERY_TOL:
        return None
    return PreservationViolation(RuleId(rule), EmbeddingKind(emb), a, b, lot_a, lot_b)


def multiset_profile_count(m: int, n: int) -> int:
    """Number of ballot multisets: C(m! + n - 1, n)."""
    return math.comb(math.factorial(m) + n - 1, n)


def _scan_group_table(rule, emb, m, profiles_iter):
    """Group profiles by raw embedding; keep one representative per distinct lottery."""
    groups: dict[bytes, list[tuple[Profile, np.ndarray]]] = {}
    for profile in profiles_iter:
        key = embed(profile, emb).entries.tobytes()
        lottery = apply_rule(rule, profile)
        bucket = groups.setdefault(key, [])
        for _, seen in bucket:
            if np.abs(lottery - seen).sum() <= _LOTTERY_TOL:
                break
        else:
            bucket.append((profile, lottery))
    return groups


def _first_violation(rule, emb, groups) -> Optional[PreservationViolation]:
    for bucket in groups.values():
        if len(bucket) > 1:
            (pa, la), (pb, lb) = bucket[0], bucket[1]
            return PreservationViolation(RuleId(rule), EmbeddingKind(emb), pa, pb, la, lb)
    return None


def _scan_partition(args):
    rule, emb, m, n, first_index = args
    perms = list(itertools.permutations(range(m)))
    rest = perms[first_index:]
    profiles = (
        Profile(m, (perms[first_index],) + tail)
        for tail in itertools.combinations_with_replacement(rest, n - 1)
    )
    return _scan_group_table(rule, emb, m, profiles)


def _merge_group_tables(tables):
    merged: dict[bytes, list[tuple[Profile, np.ndarray]]] = {}
    for table in tables:
        for key, bucket in table.items():
            target = merged.setdefault(key, [])
            for profile, lottery in bucket:
                for _, seen in target:
                    if np.abs(lottery - seen).sum() <= _LOTTERY_TOL:
                        break
                else:
                    target.append((profile, lottery))
    return merged


def max_worker_threads(requested: int) -> int:
    """Apply the PSCF_LAB_THREADS cap to a requested worker count."""
    cap = os.environ.get("PSCF_LAB_THREADS")
    workers = max(1, int(requested))
    if cap:
        workers = min(workers, max(1, int(cap)))
    return workers


def search_counterexample(
    rule: RuleId,
    emb: EmbeddingKind,
    m: int,
    n: int,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    jobs: int = 1,
) -> Optional[PreservationViolation]:
    """Search (m, n) profile space for a preservation violation.

    When the canonical space fits in ``budget`` profiles the search is
    exhaustive (a ``None`` result then certifies preservation at this size);
    otherwise ``budget`` random profiles are sampled with the given seed and
    only the sampled portion is checked. Partitions of the exhaustive space
    (split on the lexicographically smallest ballot) can run in parallel;
    ``jobs`` is capped by the PSCF_LAB_THREADS environment variable.
    """
    if budget <= 0:
        raise DimensionError(f"search budget must be positive, got {budget}")
    rule, emb = RuleId(rule), EmbeddingKind(emb)
    n_perms = math.factorial(m)
    if multiset_profile_count(m, n) <= budget:
        jobs = max_worker_threads(jobs)
        tasks = [(rule, emb, m, n, i) for i in range(n_perms)]
        if jobs > 1 and n > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                tables = list(pool.map(_scan_partition, tasks))
        elif n > 1:
            tables = [_scan_partition(t) for t in tasks]
        else:
            perms = list(itertools.permutations(range(m)))
            tables = [_scan_group_table(rule, emb, m, (Profile(m, (b,)) for b in perms))]
        return _first_violation(rule, emb, _merge_group_tables(tables))
    rng = np.random.default_rng(seed)
    sampled = (
        Profile(m, tuple(sorted(tuple(int(c) for c in rng.permutation(m)) for _ in range(n))))
        for _ in range(budget)
    )
    return _first_violation(rule, emb, _scan_group_table(rule, emb, m, sampled))


# ---------------------------------------------------------------------------
# Published counterexample pairs (candidates a, b, c, d mapped to 0, 1, 2, 3)
# ---------------------------------------------------------------------------

_A, _B, _C, _D = 0, 1, 2, 3
_SHARED_4CAND_PAIR = (
    ((_A, _B, _C, _D), (_B, _C, _D, _A), (_D, _A, _B, _C)),
    ((_A, _B, _C, _D), (_B, _A, _D, _C), (_D, _C, _B, _A)),
)


def paper_counterexample_pairs() -> list[tuple[str, RuleId, EmbeddingKind, Profile, Profile]]:
    """The published profile pairs claimed to witness non-preservation."""
    pairs = [
        (
            "plurality/weighted_tournament",
            RuleId.PLURALITY,
            EmbeddingKind.WEIGHTED_TOURNAMENT,
            ((_A, _B, _C), (_B, _A, _C), (_C, _A, _B)),
            ((_A, _B, _C), (_A, _B, _C), (_C, _B, _A)),
        ),
        (
            "borda/tournament",
            RuleId.BORDA,
            EmbeddingKind.TOURNAMENT,
            ((_A, _B, _C), (_B, _A, _C), (_B, _C, _A)),
            ((_A, _B, _C), (_A, _B, _C), (_A, _B, _C)),
        ),
        (
            "copeland/rank_frequency",
            RuleId.COPELAND,
            EmbeddingKind.RANK_FREQUENCY,
            *_SHARED_4CAND_PAIR,
        ),
        (
            "schulze/rank_frequency",
            RuleId.SCHULZE,
            EmbeddingKind.RANK_FREQUENCY,
            *_SHARED_4CAND_PAIR,
        ),
        (
            # Printed with both profiles identical; kept verbatim so the
            # checker reports it and hunts for a genuine pair.
            "schulze/tournament",
            RuleId.SCHULZE,
            EmbeddingKind.TOURNAMENT,
            ((_A, _B, _C, _D), (_B, _C, _D, _A), (_D, _A, _B, _C)),
            ((_A, _B, _C, _D), (_B, _C, _D, _A), (_D, _A, _B, _C)),
        ),
        (
            "simpson_kramer/rank_frequency",
            RuleId.SIMPSON_KRAMER,
            EmbeddingKind.RANK_FREQUENCY,
            *_SHARED_4CAND_PAIR,
        ),
        (
            "simpson_kramer/tournament",
            RuleId.SIMPSON_KRAMER,
            EmbeddingKind.TOURNAMENT,
            ((_A, _B, _C, _D), (_B, _C, _A, _D), (_D, _C, _A, _B)),
            ((_A, _B, _C, _D), (_B, _C, _A, _D), (_C, _A, _B, _D)),
        ),
        (
            "irv/rank_frequency",
            RuleId.IRV,
            EmbeddingKind.RANK_FREQUENCY,
            *_SHARED_4CAND_PAIR,
        ),
        (
            "irv/tournament",
            RuleId.IRV,
            EmbeddingKind.TOURNAMENT,
            ((_A, _B, _C, _D), (_B, _C, _D, _A), (_D, _A, _C, _B)),
            ((_A, _B, _C, _D), (_B, _C, _D, _A), (_D, _A, _B, _C)),
        ),
        (
            "blacks/rank_frequency",
            RuleId.BLACKS,
            EmbeddingKind.RANK_FREQUENCY,
            *_SHARED_4CAND_PAIR,
        ),
        (
            "blacks/tournament",
            RuleId.BLACKS,
            EmbeddingKind.TOURNAMENT,
            ((_A, _B, _C, _D), (_B, _C, _A, _D), (_D, _C, _A, _B)),
            ((_A, _B, _C, _D), (_B, _C, _A, _D), (_C, _A, _B, _D)),
        ),
    ]
    return [
        (label, rule, emb, Profile(len(x1[0]), x1), Profile(len(x2[0]), x2))
        for label, rule, emb, x1, x2 in pairs
    ]


@dataclass(frozen=True)
class PairVerdict:
    """Outcome of re-checking one published counterexample pair."""

    label: str
    rule: RuleId
    embedding: EmbeddingKind
    profile_a: Profile
    profile_b: Profile
    embeddings_match: bool
    lotteries_differ: bool
    replacement: Optional[PreservationViolation]
    replacement_searched: bool

    @property
    def valid(self) -> bool:
        return self.embeddings_match and self.lotteries_differ

    def to_json_dict(self) -> dict:
        return {
            "pair": self.label,
            "rule": self.rule.value,
            "embedding": self.embedding.value,
            "profile_a": format_profile(self.profile_a),
            "profile_b": format_profile(self.profile_b),
            "embeddings_match": self.embeddings_match,
            "lotteries_differ": self.lotteries_differ,
            "verdict": "valid" if self.valid else "invalid",
            "replacement_searched": self.replacement_searched,
            "replacement": self.replacement.to_json_dict() if self.replacement else None,
        }


def verify_paper_counterexamples(budget: int = DEFAULT_BUDGET, jobs: int = 1) -> list[PairVerdict]:
    """Re-check every published pair; search for replacements where one fails.

    For each pair the verdict records whether the raw embeddings match and
    whether the lotteries differ. Any pair that is not a genuine violation
    triggers an exhaustive replacement search at the pair's own (m, n).
    """
    verdicts = []
    for label, rule, emb, x1, x2 in paper_counterexample_pairs():
        match = bool(np.array_equal(embed(x1, emb).entries, embed(x2, emb).entries))
        lot_a, lot_b = apply_rule(rule, x1), apply_rule(rule, x2)
        differ = bool(np.abs(lot_a - lot_b).sum() > _LOTTERY_TOL)
        replacement = None
        searched = False
        if not (match and differ):
            searched = True
            replacement = search_counterexample(
                rule, emb, x1.num_candidates, x1.num_voters, budget=budget, jobs=jobs
            )
        verdicts.append(
            PairVerdict(label, rule, emb, x1, x2, match, differ, replacement, searched)
        )
    return verdicts
