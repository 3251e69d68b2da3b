import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_canonical_patches
from vjig.errors import InvalidArgumentError, StalePermutationError
from vjig.perm_core import Permutation, PermutationSet, UNCONSTRAINED_POOL
from vjig.puzzle import (
    PuzzleRecord,
    apply_permutation,
    build_record,
    canonical_order,
    invert_permutation,
    verify_record,
)
from vjig.rng import substream
from vjig.samplers import SamplerParams, generate_spatial


@pytest.fixture(scope="module")
def perm_set_100():
    ps, _ = generate_spatial(SamplerParams(n_perms=100, n_p=4, n_f=3, seed=13))
    return ps


class TestCanonicalOrder:
    def test_concatenates_frames(self):
        frames = [[f"{f}.{i}" for i in range(4)] for f in range(3)]
        out = canonical_order(frames)
        assert len(out) == 12
        assert out[:4] == ["0.0", "0.1", "0.2", "0.3"]

    def test_singleton(self):
        assert canonical_order([["only"]]) == ["only"]

    def test_ragged_rejected(self):
        with pytest.raises(InvalidArgumentError):
            canonical_order([[1, 2, 3, 4], [1, 2, 3], [1, 2, 3, 4]])


class TestApplyPermutation:
    def test_identity(self):
        assert apply_permutation(["a", "b", "c"], Permutation((1, 2, 3))) == ["a", "b", "c"]

    def test_swap(self):
        assert apply_permutation(["A", "B"], Permutation((2, 1))) == ["B", "A"]

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            apply_permutation(["a"], Permutation((1, 2)))

    @given(st.permutations(list(range(1, 10))))
    def test_invert_round_trip(self, entries):
        p = Permutation(tuple(entries))
        items = [f"item{i}" for i in range(len(p))]
        assert invert_permutation(apply_permutation(items, p), p) == items

    @given(st.permutations(list(range(1, 10))))
    def test_inverse_permutation_equivalence(self, entries):
        p = Permutation(tuple(entries))
        items = list(range(len(p)))
        assert apply_permutation(apply_permutation(items, p), p.inverse()) == items


class TestBuildRecord:
    def test_label_zero_for_single_row_set(self):
        ps = PermutationSet((Permutation(tuple(range(1, 13))),), n_p=4, n_f=3, mode=UNCONSTRAINED_POOL, seed=0)
        patches = make_canonical_patches(substream(0, "p"))
        rec = build_record("t0", patches, ps, seed=1)
        assert rec.label == 0

    def test_labels_deterministic_in_seed_and_id(self, perm_set_100):
        patches = make_canonical_patches(substream(1, "p"))
        a = build_record("tup-1", patches, perm_set_100, seed=5)
        b = build_record("tup-1", patches, perm_set_100, seed=5)
        c = build_record("tup-2", patches, perm_set_100, seed=5)
        assert a.label == b.label
        labels_differ_somewhere = any(
            build_record(f"t{i}", patches, perm_set_100, seed=5).label != a.label for i in range(20)
        )
        assert labels_differ_somewhere
        assert isinstance(c.label, int)

    def test_epoch_salt_reshuffles_labels(self, perm_set_100):
        patches = make_canonical_patches(substream(2, "p"))
        base = [build_record(f"t{i}", patches, perm_set_100, seed=5, epoch=0).label for i in range(50)]
        salted = [build_record(f"t{i}", patches, perm_set_100, seed=5, epoch=1).label for i in range(50)]
        assert base != salted

    def test_patch_count_mismatch(self, perm_set_100):
        with pytest.raises(InvalidArgumentError):
            build_record("t", make_canonical_patches(substream(3, "p"))[:7], perm_set_100, seed=0)

    def test_shuffle_follows_labeled_row(self, perm_set_100):
        patches = make_canonical_patches(substream(4, "p"))
        rec = build_record("t", patches, perm_set_100, seed=9)
        row = perm_set_100.rows[rec.label]
        for position, value in enumerate(row.entries):
            assert rec.patches[position] is patches[value - 1]


class TestVerifyRecord:
    def test_fresh_record_passes(self, perm_set_100):
        patches = make_canonical_patches(substream(5, "p"))
        rec = build_record("t", patches, perm_set_100, seed=3)
        assert verify_record(rec, perm_set_100) is True

    def test_mutated_label_fails(self, perm_set_100):
        patches = make_canonical_patches(substream(6, "p"))
        rec = build_record("t", patches, perm_set_100, seed=3)
        bad = PuzzleRecord(rec.tuple_id, rec.patches, (rec.label + 1) % perm_set_100.n_rows, rec.perm_set_digest)
        assert verify_record(bad, perm_set_100) is False

    def test_out_of_range_label_fails(self, perm_set_100):
        patches = make_canonical_patches(substream(7, "p"))
        rec = build_record("t", patches, perm_set_100, seed=3)
        bad = PuzzleRecord(rec.tuple_id, rec.patches, perm_set_100.n_rows, rec.perm_set_digest)
        assert verify_record(bad, perm_set_100) is False

    def test_swapped_patches_fail(self, perm_set_100):
        patches = make_canonical_patches(substream(8, "p"))
        rec = build_record("t", patches, perm_set_100, seed=3)
        swapped = list(rec.patches)
        swapped[0], swapped[1] = swapped[1], swapped[0]
        bad = PuzzleRecord(rec.tuple_id, tuple(swapped), rec.label, rec.perm_set_digest)
        assert verify_record(bad, perm_set_100) is False

    def test_different_perm_set_raises_stale(self, perm_set_100):
        other, _ = generate_spatial(SamplerParams(n_perms=100, n_p=4, n_f=3, seed=14))
        patches = make_canonical_patches(substream(9, "p"))
        rec = build_record("t", patches, perm_set_100, seed=3)
        with pytest.raises(StalePermutationError):
            verify_record(rec, other)

    def test_round_trip_many(self, perm_set_100):
        rng = substream(10, "p")
        for i in range(200):
            patches = make_canonical_patches(rng)
            rec = build_record(f"tuple-{i}", patches, perm_set_100, seed=17)
            assert verify_record(rec, perm_set_100)
