"""Permutation types, Hamming distance, and set-level diversity metrics.

Conventions used throughout the package: a permutation of length L is a
bijection on {1, ..., L} stored in one-line form (1-indexed values at
0-indexed positions). When a permutation is block-structured, position block
b of width n_p holds the values of exactly one source frame i, i.e. the set
{n_p*(i-1)+1, ..., n_p*i}.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import FormatError, InvalidArgumentError

SPATIAL_COHERENT = "spatial_coherent"
UNCONSTRAINED_EXACT = "unconstrained_exact"
UNCONSTRAINED_POOL = "unconstrained_pool"
MODES = (SPATIAL_COHERENT, UNCONSTRAINED_EXACT, UNCONSTRAINED_POOL)


@dataclass(frozen=True)
class Permutation:
    """A bijection on {1, ..., L} in one-line (value-at-position) form."""

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(v) for v in self.entries)
        object.__setattr__(self, "entries", entries)
        length = len(entries)
        if length < 1:
            raise InvalidArgumentError("permutation must have length >= 1")
        if sorted(entries) != list(range(1, length + 1)):
            raise InvalidArgumentError(f"entries are not a bijection on 1..{length}: {entries}")

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, position: int) -> int:
        return self.entries[position]

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def inverse(self) -> "Permutation":
        """The permutation q with q[p[i]-1] == i+1."""
        inv = [0] * len(self.entries)
        for position, value in enumerate(self.entries):
            inv[value - 1] = position + 1
        return Permutation(tuple(inv))


def hamming(a: Permutation, b: Permutation) -> int:
    """Number of positions at which two equal-length permutations disagree.

    Symmetric, zero iff the permutations are equal, at most their length.
    """
    if len(a) != len(b):
        raise InvalidArgumentError(f"length mismatch: {len(a)} vs {len(b)}")
    return sum(1 for x, y in zip(a.entries, b.entries) if x != y)


def is_block_coherent(p: Permutation, n_p: int, n_f: int) -> bool:
    """True iff each n_p-wide position block holds one whole frame value block.

    Block b (of n_f) must contain exactly the values {n_p*(i-1)+1, ..., n_p*i}
    of some source frame i, and the block-to-frame assignment must be a
    bijection. Within-block order is unconstrained.
    """
    if n_p < 1 or n_f < 1:
        raise InvalidArgumentError("n_p and n_f must be >= 1")
    if len(p) != n_p * n_f:
        raise InvalidArgumentError(f"length mismatch: permutation has {len(p)} entries, grid needs {n_p * n_f}")
    frames_used = set()
    for b in range(n_f):
        block = set(p.entries[b * n_p : (b + 1) * n_p])
        frame = (min(block) - 1) // n_p
        if block != set(range(n_p * frame + 1, n_p * (frame + 1) + 1)):
            return False
        frames_used.add(frame)
    return len(frames_used) == n_f


@dataclass(frozen=True)
class PermutationSet:
    """A set of distinct equal-length permutations plus generation provenance.

    ``rows`` is the permutation matrix: one permutation of 1..n_p*n_f per row.
    ``mode`` records which sampler produced it; spatially coherent sets are
    validated row-by-row for block coherence on construction.
    """

    rows: tuple[Permutation, ...]
    n_p: int
    n_f: int
    mode: str
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        if self.mode not in MODES:
            raise InvalidArgumentError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if self.n_p < 1 or self.n_f < 1:
            raise InvalidArgumentError("n_p and n_f must be >= 1")
        if not self.rows:
            raise InvalidArgumentError("permutation set must have at least one row")
        length = self.n_p * self.n_f
        for row in self.rows:
            if len(row) != length:
                raise InvalidArgumentError(f"row length {len(row)} does not match n_p*n_f = {length}")
        if len({row.entries for row in self.rows}) != len(self.rows):
            raise InvalidArgumentError("permutation set rows must be pairwise distinct")
        if self.mode == SPATIAL_COHERENT:
            for row in self.rows:
                if not is_block_coherent(row, self.n_p, self.n_f):
                    raise InvalidArgumentError(f"row {row.entries} is not block coherent for the declared mode")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def length(self) -> int:
        return self.n_p * self.n_f

    def to_array(self) -> np.ndarray:
        """Rows as an (N, L) integer array of 1-indexed values."""
        dtype = np.uint8 if self.length <= 255 else np.uint16
        return np.array([row.entries for row in self.rows], dtype=dtype)


@dataclass(frozen=True)
class DiversityStats:
    """Pairwise Hamming summary of a permutation set.

    ``histogram[d]`` counts unordered row pairs at distance d; it sums to
    N*(N-1)/2. ``mean_pairwise`` is exact (a Fraction), never a float.
    """

    min_pairwise: int
    mean_pairwise: Fraction
    histogram: tuple[int, ...]


def diversity(perm_set: PermutationSet) -> DiversityStats:
    """Min/mean/histogram of Hamming distance over all unordered row pairs."""
    n = perm_set.n_rows
    if n < 2:
        raise InvalidArgumentError("diversity needs at least 2 rows")
    arr = perm_set.to_array()
    length = perm_set.length
    hist = np.zeros(length + 1, dtype=np.int64)
    for i in range(n - 1):
        d = (arr[i + 1 :] != arr[i]).sum(axis=1)
        hist += np.bincount(d, minlength=length + 1)
    pairs = n * (n - 1) // 2
    total = int((hist * np.arange(length + 1)).sum())
    nonzero = np.flatnonzero(hist)
    return DiversityStats(
        min_pairwise=int(nonzero[0]),
        mean_pairwise=Fraction(total, pairs),
        histogram=tuple(int(c) for c in hist),
    )


def perm_set_to_text(perm_set: PermutationSet) -> str:
    """Canonical text form: header `n_p n_f N mode seed`, then one row per line.

    Values are 1-indexed, space separated, LF line endings. Readers and
    writers round-trip this form bit-exactly.
    """
    lines = [f"{perm_set.n_p} {perm_set.n_f} {perm_set.n_rows} {perm_set.mode} {perm_set.seed}"]
    lines.extend(" ".join(str(v) for v in row.entries) for row in perm_set.rows)
    return "\n".join(lines) + "\n"


def perm_set_from_text(text: str) -> PermutationSet:
    """Parse the canonical text form; raises FormatError on malformed input."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise FormatError("empty permutation file")
    header = lines[0].split(" ")
    if len(header) != 5:
        raise FormatError(f"bad header: expected 'n_p n_f N mode seed', got {lines[0]!r}")
    try:
        n_p, n_f, n_rows = int(header[0]), int(header[1]), int(header[2])
        mode = header[3]
        seed = int(header[4])
    except ValueError as exc:
        raise FormatError(f"bad header fields: {lines[0]!r}") from exc
    if mode not in MODES:
        raise FormatError(f"unknown mode {mode!r} in header")
    if len(lines) - 1 != n_rows:
        raise FormatError(f"header declares {n_rows} rows, file has {len(lines) - 1}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rows.append(Permutation(tuple(int(v) for v in line.split(" "))))
        except (ValueError, InvalidArgumentError) as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    try:
        return PermutationSet(rows=tuple(rows), n_p=n_p, n_f=n_f, mode=mode, seed=seed)
    except InvalidArgumentError as exc:
        raise FormatError(str(exc)) from exc


def perm_set_digest(perm_set: PermutationSet) -> str:
    """SHA-256 hex digest of the canonical text form.

    Binds puzzle records to the exact permutation matrix they were shuffled
    with; any change to rows, shape, mode, or seed changes the digest.
    """
    return hashlib.sha256(perm_set_to_text(perm_set).encode("utf-8")).hexdigest()
