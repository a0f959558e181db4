import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pscf_lab.errors import CandidateError, DimensionError, FormatError, VoterError
from pscf_lab.profiles import (
    Profile,
    enumerate_profiles,
    format_profile,
    generate_impartial_culture,
    load_profiles,
    parse_profile,
    rank_of,
    remove_voter,
    save_profiles,
)
from strategies import profiles


def test_profile_validation_rejects_bad_ballots():
    with pytest.raises(DimensionError):
        Profile(3, ((0, 1, 1),))
    with pytest.raises(DimensionError):
        Profile(3, ((0, 1),))
    with pytest.raises(DimensionError):
        Profile(3, ())
    with pytest.raises(DimensionError):
        Profile(0, ((),))


def test_position_array_inverts_ranking():
    p = Profile(4, ((2, 0, 3, 1), (1, 2, 3, 0)))
    assert p.position_array[0, 2] == 0
    assert p.position_array[0, 1] == 3
    assert p.position_array[1, 0] == 3


class TestImpartialCulture:
    def test_single_candidate(self):
        p = generate_impartial_culture(1, 5, seed=123)
        assert p.ballots == ((0,),) * 5

    def test_deterministic_for_seed(self):
        a = generate_impartial_culture(7, 29, seed=42)
        b = generate_impartial_culture(7, 29, seed=42)
        assert a == b

    def test_invalid_dimensions(self):
        with pytest.raises(DimensionError):
            generate_impartial_culture(0, 3, seed=0)
        with pytest.raises(DimensionError):
            generate_impartial_culture(3, 0, seed=0)

    def test_uniform_ballot_frequencies(self):
        # Frozen oracle: with m=3 each of the 6 ballots should appear with
        # frequency 1/6 +/- 0.01 at n=60000.
        p = generate_impartial_culture(3, 60000, seed=7)
        counts = {}
        for b in p.ballots:
            counts[b] = counts.get(b, 0) + 1
        assert len(counts) == 6
        for count in counts.values():
            assert abs(count / 60000 - 1 / 6) < 0.01

    @given(profiles())
    @settings(max_examples=60)
    def test_every_ballot_is_a_permutation(self, p):
        for ballot in p.ballots:
            assert sorted(ballot) == list(range(p.num_candidates))


class TestRankOf:
    def test_top_and_bottom(self):
        assert rank_of((0, 1, 2), 0) == 1
        assert rank_of((0, 1, 2), 2) == 3

    def test_mid_rank_read(self):
        # Second ballot of the four-candidate witness profile: (b, c, d, a).
        assert rank_of((1, 2, 3, 0), 3) == 3

    def test_out_of_range(self):
        with pytest.raises(CandidateError):
            rank_of((0, 1, 2), 3)


class TestRemoveVoter:
    def test_deletes_in_place(self):
        p = Profile(2, ((0, 1), (1, 0), (0, 1)))
        q = remove_voter(p, 1)
        assert q.ballots == ((0, 1), (0, 1))

    def test_reinsert_is_inverse(self):
        p = generate_impartial_culture(4, 5, seed=3)
        for i in range(p.num_voters):
            q = remove_voter(p, i)
            restored = Profile(4, q.ballots[:i] + (p.ballots[i],) + q.ballots[i:])
            assert restored == p

    def test_three_voter_witness_profile(self):
        p = Profile(3, ((0, 1, 2), (1, 0, 2), (2, 0, 1)))
        assert remove_voter(p, 2).ballots == ((0, 1, 2), (1, 0, 2))

    def test_errors(self):
        with pytest.raises(VoterError):
            remove_voter(Profile(2, ((0, 1),)), 0)
        with pytest.raises(VoterError):
            remove_voter(Profile(2, ((0, 1), (1, 0))), 2)

    @given(profiles(min_n=2), st.data())
    @settings(max_examples=40)
    def test_never_reorders_survivors(self, p, data):
        i = data.draw(st.integers(0, p.num_voters - 1))
        q = remove_voter(p, i)
        assert q.ballots == p.ballots[:i] + p.ballots[i + 1 :]


class TestEnumerateProfiles:
    @pytest.mark.parametrize("m,n,expected", [(2, 1, 2), (3, 2, 36), (3, 3, 216)])
    def test_counts(self, m, n, expected):
        seen = set()
        for p in enumerate_profiles(m, n):
            seen.add(p.ballots)
        assert len(seen) == expected

    def test_lexicographic_order(self):
        ballots = [p.ballots for p in enumerate_profiles(3, 2)]
        assert ballots == sorted(ballots)

    def test_yields_valid_profiles(self):
        for p in enumerate_profiles(3, 2):
            for ballot in p.ballots:
                assert sorted(ballot) == [0, 1, 2]


class TestProfileFile:
    def test_format_example(self):
        p = Profile(3, ((0, 1, 2), (1, 0, 2), (2, 0, 1)))
        assert format_profile(p) == "0,1,2;1,0,2;2,0,1"
        assert parse_profile("0,1,2;1,0,2;2,0,1", 3) == p

    def test_round_trip(self, tmp_path):
        path = tmp_path / "profiles.txt"
        original = [generate_impartial_culture(4, 3, seed=s) for s in range(5)]
        save_profiles(path, original)
        assert load_profiles(path) == original
        header = path.read_text().splitlines()[0]
        assert header == "#pscf-profiles m=4"

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0,1,2;1,0,2\n")
        with pytest.raises(FormatError):
            load_profiles(path)

    def test_bad_line(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("#pscf-profiles m=3\n0,1;1,0\n")
        with pytest.raises(FormatError):
            load_profiles(path)

    def test_mixed_m_rejected(self, tmp_path):
        with pytest.raises(DimensionError):
            save_profiles(
                tmp_path / "x.txt",
                [Profile(2, ((0, 1),)), Profile(3, ((0, 1, 2),))],
            )
