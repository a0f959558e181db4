"""Strict-order preference profiles: generation, mutation, enumeration, file I/O.

Candidates are 0-indexed integers everywhere in this package. A ballot lists
candidates from most to least preferred, so ``ballot[0]`` is the voter's top
choice. Formulas from the voting literature that speak of 1-indexed ranks are
converted at the operation boundary (see :func:`rank_of`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CandidateError, DimensionError, FormatError, VoterError

Ballot = tuple[int, ...]

# All randomness in this package flows through numpy's PCG64 generator; the
# name is recorded in experiment reports so datasets stay reproducible.
PRNG_NAME = "numpy-pcg64"

PROFILE_FILE_MAGIC = "#pscf-profiles"


def _as_ballot(ranking: Sequence[int], m: int) -> Ballot:
    ballot = tuple(int(c) for c in ranking)
    if len(ballot) != m or sorted(ballot) != list(range(m)):
        raise DimensionError(
            f"ballot {ballot} is not a permutation of 0..{m - 1}"
        )
    return ballot


@dataclass(frozen=True)
class Profile:
    """An immutable list of strict ballots over ``num_candidates`` candidates.

    Instances are validated on construction and safe to share between
    concurrent workers; the cached index arrays are derived data only.
    """

    num_candidates: int
    ballots: tuple[Ballot, ...]

    def __post_init__(self) -> None:
        if self.num_candidates < 1:
            raise DimensionError("a profile needs at least one candidate")
        ballots = tuple(self.ballots)
        if len(ballots) < 1:
            raise DimensionError("a profile needs at least one ballot")
        ballots = tuple(_as_ballot(b, self.num_candidates) for b in ballots)
        object.__setattr__(self, "ballots", ballots)

    @property
    def num_voters(self) -> int:
        return len(self.ballots)

    @cached_property
    def ranking_array(self) -> np.ndarray:
        """(n, m) int array; entry [i, k] is the candidate voter i puts at position k."""
        arr = np.asarray(self.ballots, dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def position_array(self) -> np.ndarray:
        """(n, m) int array; entry [i, c] is the 0-indexed position of candidate c on ballot i."""
        # Rows are permutations, so argsort inverts them.
        arr = np.argsort(self.ranking_array, axis=1)
        arr.setflags(write=False)
        return arr

    def __str__(self) -> str:
        return format_profile(self)


def generate_impartial_culture(
    m: int, n: int, seed: int | np.random.Generator
) -> Profile:
    """Sample n ballots independently and uniformly from all m! rankings.

    Uses Fisher-Yates shuffles driven by :data:`PRNG_NAME`; a fixed integer
    seed reproduces the profile bit for bit. Passing a ``Generator`` lets a
    caller stream many profiles from one seeded source.
    """
    if m < 1 or n < 1:
        raise DimensionError(f"cannot sample a profile with m={m}, n={n}")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    ballots = tuple(tuple(int(c) for c in rng.permutation(m)) for _ in range(n))
    return Profile(m, ballots)


def rank_of(ballot: Ballot, c: int) -> int:
    """1-indexed rank of candidate ``c`` on ``ballot`` (1 = most preferred)."""
    if not 0 <= c < len(ballot):
        raise CandidateError(f"candidate {c} out of range for a {len(ballot)}-candidate ballot")
    return ballot.index(c) + 1


def remove_voter(p: Profile, i: int) -> Profile:
    """Profile with voter ``i``'s ballot deleted; surviving ballots keep their order."""
    if p.num_voters == 1:
        raise VoterError("cannot remove the sole voter of a profile")
    if not 0 <= i < p.num_voters:
        raise VoterError(f"voter {i} out of range for a {p.num_voters}-voter profile")
    return Profile(p.num_candidates, p.ballots[:i] + p.ballots[i + 1 :])


def enumerate_profiles(m: int, n: int) -> Iterator[Profile]:
    """Yield every (m, n) profile exactly once, lexicographic over ballot sequences.

    There are (m!)**n of them; the caller is responsible for feasibility.
    """
    perms = list(itertools.permutations(range(m)))
    for ballots in itertools.product(perms, repeat=n):
        yield Profile(m, ballots)


def format_profile(p: Profile) -> str:
    """One-line text form: ballots joined by ';', candidates by ','."""
    return ";".join(",".join(str(c) for c in b) for b in p.ballots)


def parse_profile(line: str, m: int) -> Profile:
    """Inverse of :func:`format_profile` for a known candidate count."""
    try:
        ballots = tuple(
            tuple(int(tok) for tok in chunk.split(",")) for chunk in line.strip().split(";")
        )
    except ValueError as exc:
        raise FormatError(f"unparsable profile line: {line!r}") from exc
    try:
        return Profile(m, ballots)
    except DimensionError as exc:
        raise FormatError(f"invalid profile line: {line!r} ({exc})") from exc


def save_profiles(path, profiles: Iterable[Profile]) -> None:
    """Write profiles to ``path`` in the one-profile-per-line text format."""
    profiles = list(profiles)
    if not profiles:
        raise DimensionError("refusing to write an empty profile file")
    m = profiles[0].num_candidates
    for p in profiles:
        if p.num_candidates != m:
            raise DimensionError("all profiles in one file must share a candidate count")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{PROFILE_FILE_MAGIC} m={m}\n")
        for p in profiles:
            fh.write(format_profile(p) + "\n")


def load_profiles(path) -> list[Profile]:
    """Read a profile file written by :func:`save_profiles`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        prefix = f"{PROFILE_FILE_MAGIC} m="
        if not header.startswith(prefix):
            raise FormatError(f"missing profile file header, got {header!r}")
        try:
            m = int(header[len(prefix) :])
        except ValueError as exc:
            raise FormatError(f"bad candidate count in header {header!r}") from exc
        return [parse_profile(line, m) for line in fh if line.strip()]
