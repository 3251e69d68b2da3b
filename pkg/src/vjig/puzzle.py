"""Puzzle record assembly: canonical patch order, shuffling, verification.

Canonical order concatenates frames in temporal order with cells row-major
inside each frame, so position j holds patch number j+1. A record stores the
patches rearranged by one row of the permutation set; the row index is the
training label. The shuffle convention is pinned as: output position i holds
the canonical patch numbered p[i].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TypeVar

from .errors import InvalidArgumentError, StalePermutationError
from .perm_core import Permutation, PermutationSet, perm_set_digest
from .pipeline import Patch
from .rng import substream

T = TypeVar("T")


@dataclass(eq=False)
class PuzzleRecord:
    """Shuffled patches plus the permutation-set row index that shuffled them."""

    tuple_id: str
    patches: tuple[Patch, ...]
    label: int
    perm_set_digest: str


def canonical_order(frames_patches: Sequence[Sequence[Patch]]) -> list[Patch]:
    """Concatenate per-frame patch lists into the canonical numbering.

    Every frame must contribute the same number of patches; patches are
    assumed to be in row-major cell order within each frame, as produced by
    sample_patches.
    """
    if not frames_patches:
        raise InvalidArgumentError("no frames given")
    n_p = len(frames_patches[0])
    for i, frame in enumerate(frames_patches):
        if len(frame) != n_p:
            raise InvalidArgumentError(f"ragged input: frame 0 has {n_p} patches, frame {i} has {len(frame)}")
    return [p for frame in frames_patches for p in frame]


def apply_permutation(items: Sequence[T], p: Permutation) -> list[T]:
    """Rearrange a sequence so output position i holds item number p[i]."""
    if len(items) != len(p):
        raise InvalidArgumentError(f"length mismatch: {len(items)} items vs permutation of {len(p)}")
    return [items[v - 1] for v in p.entries]


def invert_permutation(items: Sequence[T], p: Permutation) -> list[T]:
    """Undo apply_permutation: restore the canonical arrangement."""
    if len(items) != len(p):
        raise InvalidArgumentError(f"length mismatch: {len(items)} items vs permutation of {len(p)}")
    restored: list[T | None] = [None] * len(items)
    for position, value in enumerate(p.entries):
        restored[value - 1] = items[position]
    return restored  # type: ignore[return-value]


def build_record(
    tuple_id: str,
    canonical_patches: Sequence[Patch],
    perm_set: PermutationSet,
    seed: int,
    epoch: int = 0,
) -> PuzzleRecord:
    """Shuffle a tuple's canonical patches by a uniformly drawn set row.

    The label is deterministic in (seed, tuple_id, epoch); the epoch salt
    emulates per-epoch reshuffling without touching the patch pixels.
    """
    if len(canonical_patches) != perm_set.length:
        raise InvalidArgumentError(
            f"tuple has {len(canonical_patches)} patches, permutation set rows have {perm_set.length}"
        )
    rng = substream(seed, "label", tuple_id, epoch)
    label = int(rng.integers(0, perm_set.n_rows))
    shuffled = apply_permutation(list(canonical_patches), perm_set.rows[label])
    return PuzzleRecord(
        tuple_id=tuple_id,
        patches=tuple(shuffled),
        label=label,
        perm_set_digest=perm_set_digest(perm_set),
    )


def verify_record(record: PuzzleRecord, perm_set: PermutationSet) -> bool:
    """Check that a record's label and patch arrangement are consistent.

    Raises StalePermutationError when the record is bound to a different
    permutation set; otherwise returns True iff undoing the labeled row
    restores patch sources to canonical order (frames ascending in blocks,
    distinct cells row-major inside each frame).
    """
    expected_digest = perm_set_digest(perm_set)
    if record.perm_set_digest != expected_digest:
        raise StalePermutationError(
            f"record {record.tuple_id!r} is bound to permutation set {record.perm_set_digest[:12]}..., "
            f"checked against {expected_digest[:12]}..."
        )
    if not 0 <= record.label < perm_set.n_rows:
        return False
    row = perm_set.rows[record.label]
    if len(record.patches) != len(row):
        return False
    restored = invert_permutation(record.patches, row)
    n_p = perm_set.n_p
    for frame in range(perm_set.n_f):
        block = restored[frame * n_p : (frame + 1) * n_p]
        if any(p.source.frame != frame for p in block):
            return False
        cells = [(p.source.cell_row, p.source.cell_col) for p in block]
        if cells != sorted(cells) or len(set(cells)) != n_p:
            return False
    return True
