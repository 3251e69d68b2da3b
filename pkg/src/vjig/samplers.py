"""Diverse permutation-set samplers.

Two families share one greedy scheme: after a random first row, each further
row is the candidate with maximal mean Hamming distance to the rows already
chosen. Comparisons use exact integer distance sums (the step divisor h-1 is
constant, so comparing sums equals comparing means with no float ambiguity);
ties resolve to the earliest candidate in enumeration order. Together with
counter-based seeding this makes every run a pure function of its parameters,
regardless of worker count.

The block-coherent sampler searches the structured space of (within-frame
shuffle per frame) x (frame order) combinations, of size (n_p!)^n_f * n_f!.
Only one within-frame shuffle table is ever stored; other frames reuse it by
offset addition. The unconstrained sampler searches all (n_p*n_f)!
permutations, either exactly (streamed in lexicographic chunks under a
per-step candidate budget) or over a seeded uniform candidate pool.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityError, InvalidArgumentError
from .perm_core import (
    MODES,
    SPATIAL_COHERENT,
    UNCONSTRAINED_EXACT,
    UNCONSTRAINED_POOL,
    Permutation,
    PermutationSet,
)
from .rng import substream

INT64_MAX = 2**63 - 1

# Candidates evaluated per greedy step in exact unconstrained mode must not
# exceed this unless the caller raises it explicitly.
DEFAULT_STEP_BUDGET = 10_000_000

# Largest lexicographic chunk materialized at once (10! rows).
CHUNK_ROWS = 3_628_800

# Dense distance-sum accumulators are kept for the whole candidate space;
# these caps bound their memory (8 resp. 4 bytes per candidate).
SPATIAL_EVAL_LIMIT = 16_000_000
EXACT_ACCUM_LIMIT = 600_000_000

ORACLE_SPACE_LIMIT = 1_000_000


def space_size_spatial(n_p: int, n_f: int) -> int:
    """Size of the block-coherent candidate space: (n_p!)^n_f * n_f!.

    Raises CapacityError when the result does not fit in a signed 64-bit
    integer.
    """
    if n_p < 1 or n_f < 1:
        raise InvalidArgumentError("n_p and n_f must be >= 1")
    size = math.factorial(n_p) ** n_f * math.factorial(n_f)
    if size > INT64_MAX:
        raise CapacityError(f"candidate space (n_p={n_p}, n_f={n_f}) overflows 64 bits: {size}")
    return size


@dataclass(frozen=True)
class SamplerParams:
    """Inputs identifying one sampler run: target set size, grid shape, seed, mode."""

    n_perms: int
    n_p: int
    n_f: int
    seed: int
    mode: str = SPATIAL_COHERENT
    pool_size: int | None = None
    budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if self.n_perms < 1:
            raise InvalidArgumentError("n_perms must be >= 1")
        if self.n_p < 1 or self.n_f < 1:
            raise InvalidArgumentError("n_p and n_f must be >= 1")
        if self.budget < 1:
            raise InvalidArgumentError("budget must be >= 1")
        if self.mode == UNCONSTRAINED_POOL:
            if self.pool_size is None:
                raise InvalidArgumentError("pool mode requires pool_size")
            if self.pool_size < self.n_perms:
                raise InvalidArgumentError(f"pool_size {self.pool_size} < n_perms {self.n_perms}")

    @property
    def length(self) -> int:
        return self.n_p * self.n_f


@dataclass(frozen=True)
class SamplerReport:
    """Cost and quality accounting for one sampler run.

    ``per_step_best_distance`` holds the chosen mean distance for steps
    2..N as exact Fractions (empty when N == 1). ``candidates_evaluated``
    counts every candidate scanned over all steps; in exact modes it equals
    (N-1) times the full space size. ``peak_candidate_memory_rows`` is the
    largest number of candidate rows materialized at any one time.
    """

    per_step_best_distance: tuple[Fraction, ...]
    candidates_evaluated: int
    wall_time_ns: int
    peak_candidate_memory_rows: int

    @property
    def candidates_per_step(self) -> int:
        steps = len(self.per_step_best_distance)
        return self.candidates_evaluated // steps if steps else 0

    def step_sums(self) -> tuple[int, ...]:
        """Integer distance sums per step (mean times h-1, exact)."""
        sums = []
        for step, mean in enumerate(self.per_step_best_distance, start=2):
            total = mean * (step - 1)
            sums.append(int(total))
        return tuple(sums)


def _row_dtype(length: int):
    return np.uint8 if length <= 255 else np.uint16


def perm_table(n: int) -> np.ndarray:
    """All permutations of range(n) in lexicographic order, shape (n!, n).

    Built bottom-up: the table for k symbols is, for each leading symbol in
    ascending order, that symbol followed by the relabeled table for k-1.
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if n > 255:
        raise InvalidArgumentError("permutation table limited to n <= 255")
    table = np.zeros((1, 0), dtype=np.uint8)
    for k in range(1, n + 1):
        m = table.shape[0]
        out = np.empty((m * k, k), dtype=np.uint8)
        values = np.arange(k, dtype=np.uint8)
        for first in range(k):
            rest = np.delete(values, first)
            block = out[first * m : (first + 1) * m]
            block[:, 0] = first
            if k > 1:
                block[:, 1:] = rest[table]
        table = out
    return table


class BlockCoherentSpace:
    """Enumeration machinery for the block-coherent candidate space.

    Candidates are indexed by g = f * (n_p!)^n_f + c where f selects a frame
    order (lexicographic over orders) and the combination counter c decodes
    into per-frame shuffle-table indices by mixed radix: digit j-1 of c in
    base n_p! selects frame j's within-block shuffle. Frame 1 occupies the
    fastest digit, so each run of n_p! consecutive candidates shares every
    frame's shuffle except the first's -- the subset structure `subset`
    exposes. One table of the n_p! shuffles is stored; frames j >= 2 reuse
    it with the value offset n_p*(j-1).
    """

    def __init__(self, n_p: int, n_f: int):
        self.n_p = n_p
        self.n_f = n_f
        self.length = n_p * n_f
        self.m = math.factorial(n_p)
        self.orders = tuple(itertools.permutations(range(1, n_f + 1)))
        self.size = self.m**n_f * len(self.orders)
        self.dtype = _row_dtype(self.length)
        self.table = (perm_table(n_p) + 1).astype(self.dtype)
        self._table_rank = {tuple(int(v) for v in row): k for k, row in enumerate(self.table)}
        self._order_rank = {order: f for f, order in enumerate(self.orders)}

    def counter_indices(self, c: int) -> tuple[int, ...]:
        """Per-frame table indices (k_1, ..., k_nf) decoded from counter c."""
        return tuple((c // self.m ** (j - 1)) % self.m for j in range(1, self.n_f + 1))

    def decode(self, g: int) -> np.ndarray:
        """Candidate row for global index g, as a 1-indexed value array."""
        f, c = divmod(g, self.m**self.n_f)
        order = self.orders[f]
        row = np.empty(self.length, dtype=self.dtype)
        for b, frame in enumerate(order):
            k = (c // self.m ** (frame - 1)) % self.m
            row[b * self.n_p : (b + 1) * self.n_p] = self.table[k] + self.n_p * (frame - 1)
        return row

    def rank(self, row: np.ndarray) -> int:
        """Global index of a block-coherent row (inverse of decode)."""
        order = []
        c = 0
        for b in range(self.n_f):
            block = row[b * self.n_p : (b + 1) * self.n_p]
            frame = (int(block.min()) - 1) // self.n_p + 1
            order.append(frame)
            k = self._table_rank[tuple(int(v) - self.n_p * (frame - 1) for v in block)]
            c += k * self.m ** (frame - 1)
        return self._order_rank[tuple(order)] * self.m**self.n_f + c

    def subset(self, order_index: int, combo_index: int) -> np.ndarray:
        """The n_p! candidate rows sharing one frame order and one setting of
        frames 2..n_f; the first frame's shuffle varies across rows.

        Row r equals decode(order_index * m^n_f + combo_index * m + r).
        """
        order = self.orders[order_index]
        out = np.empty((self.m, self.length), dtype=self.dtype)
        for b, frame in enumerate(order):
            offset = self.n_p * (frame - 1)
            sl = slice(b * self.n_p, (b + 1) * self.n_p)
            if frame == 1:
                out[:, sl] = self.table
            else:
                k = (combo_index // self.m ** (frame - 2)) % self.m
                out[:, sl] = self.table[k] + offset
        return out

    def random_row(self, rng: np.random.Generator) -> np.ndarray:
        """One within-block shuffle per frame, then a random frame order."""
        blocks = [rng.permutation(self.n_p) + 1 + self.n_p * i for i in range(self.n_f)]
        order = rng.permutation(self.n_f)
        return np.concatenate([blocks[f] for f in order]).astype(self.dtype)

    def accumulate_distances(self, sums: np.ndarray, row: np.ndarray) -> None:
        """Add each candidate's Hamming distance to `row` into `sums`.

        Distances decompose per output block, so for each frame order the
        full update is an outer sum of n_f per-frame mismatch vectors of
        length n_p!, broadcast over the counter digits.
        """
        mn = self.m**self.n_f
        for f, order in enumerate(self.orders):
            total = None
            for b, frame in enumerate(order):
                block = row[b * self.n_p : (b + 1) * self.n_p]
                mism = (self.table + self.n_p * (frame - 1) != block).sum(axis=1).astype(np.int64)
                shape = [1] * self.n_f
                shape[self.n_f - frame] = self.m
                mism = mism.reshape(shape)
                total = mism if total is None else total + mism
            sums[f * mn : (f + 1) * mn] += total.ravel()


def _argmax_earliest(values: np.ndarray, workers: int = 1, executor: ThreadPoolExecutor | None = None) -> tuple[int, int]:
    """(max value, first index attaining it).

    With workers > 1 the array is scanned in contiguous spans and reduced by
    (value desc, index asc); the result is identical for any partitioning.
    """
    n = len(values)
    if workers <= 1 or executor is None or n < 4 * workers:
        idx = int(np.argmax(values))
        return int(values[idx]), idx
    bounds = np.linspace(0, n, workers + 1, dtype=np.int64)
    spans = [(int(bounds[i]), int(bounds[i + 1])) for i in range(workers) if bounds[i] < bounds[i + 1]]

    def local(span):
        a, b = span
        i = int(np.argmax(values[a:b]))
        return int(values[a + i]), a + i

    best_val, best_idx = -(2**62), -1
    for val, idx in executor.map(local, spans):
        if val > best_val or (val == best_val and idx < best_idx):
            best_val, best_idx = val, idx
    return best_val, best_idx


def generate_spatial(params: SamplerParams, workers: int = 1) -> tuple[PermutationSet, SamplerReport]:
    """Greedy max-mean-Hamming sampling over the block-coherent space.

    The first row is drawn at random (one shuffle per frame, then a random
    frame order). Every later row is chosen by scanning the entire space;
    a running distance-sum accumulator makes each step cost one pass of
    per-frame mismatch updates instead of h-1 full re-evaluations, without
    changing any chosen row. Deterministic given the seed.
    """
    if params.mode != SPATIAL_COHERENT:
        raise InvalidArgumentError(f"generate_spatial requires mode {SPATIAL_COHERENT!r}")
    space = space_size_spatial(params.n_p, params.n_f)
    if params.n_perms > space:
        raise CapacityError(f"n_perms {params.n_perms} exceeds candidate space size {space}")
    if space > SPATIAL_EVAL_LIMIT:
        raise CapacityError(f"candidate space size {space} exceeds the dense evaluation limit {SPATIAL_EVAL_LIMIT}")

    t0 = time.perf_counter_ns()
    sp = BlockCoherentSpace(params.n_p, params.n_f)
    rng = substream(params.seed, "spatial", "first-row")
    first = sp.random_row(rng)

    rows = [first]
    chosen = [sp.rank(first)]
    step_sums: list[int] = []
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        if params.n_perms > 1:
            sums = np.zeros(space, dtype=np.int64)
            for _h in range(2, params.n_perms + 1):
                sp.accumulate_distances(sums, rows[-1])
                sums[chosen] = -1
                best_sum, best_idx = _argmax_earliest(sums, workers, executor)
                rows.append(sp.decode(best_idx))
                chosen.append(best_idx)
                step_sums.append(best_sum)
    finally:
        if executor is not None:
            executor.shutdown()

    perm_set = PermutationSet(
        rows=tuple(Permutation(tuple(int(v) for v in row)) for row in rows),
        n_p=params.n_p,
        n_f=params.n_f,
        mode=SPATIAL_COHERENT,
        seed=params.seed,
    )
    report = SamplerReport(
        per_step_best_distance=tuple(Fraction(s, h - 1) for h, s in enumerate(step_sums, start=2)),
        candidates_evaluated=(params.n_perms - 1) * space,
        wall_time_ns=time.perf_counter_ns() - t0,
        peak_candidate_memory_rows=sp.m,
    )
    return perm_set, report


def _lex_base_len(length: int, max_rows: int) -> int:
    b = 1
    while b < length and math.factorial(b + 1) <= max_rows:
        b += 1
    return b


def _iter_lex_chunks(length: int, base: np.ndarray, base_len: int) -> Iterator[tuple[int, np.ndarray]]:
    dtype = _row_dtype(length)
    if base_len == length:
        yield 0, (base + 1).astype(dtype)
        return
    chunk_rows = base.shape[0]
    prefix_len = length - base_len
    values = tuple(range(1, length + 1))
    for i, prefix in enumerate(itertools.permutations(values, prefix_len)):
        rest = np.array(sorted(set(values) - set(prefix)), dtype=dtype)
        rows = np.empty((chunk_rows, length), dtype=dtype)
        rows[:, :prefix_len] = np.array(prefix, dtype=dtype)
        rows[:, prefix_len:] = rest[base]
        yield i * chunk_rows, rows


def iter_lex_chunks(length: int, max_rows: int = CHUNK_ROWS) -> Iterator[tuple[int, np.ndarray]]:
    """Stream all length! permutations of 1..length in lexicographic order.

    Yields (start_rank, rows) with at most max_rows rows per chunk; rows are
    1-indexed value arrays. Chunk r of a yield equals the permutation of
    lexicographic rank start_rank + r.
    """
    if length < 1:
        raise InvalidArgumentError("length must be >= 1")
    base_len = _lex_base_len(length, max_rows)
    yield from _iter_lex_chunks(length, perm_table(base_len), base_len)


def unrank_lex(index: int, length: int) -> Permutation:
    """The index-th permutation of 1..length in lexicographic order."""
    if length < 1:
        raise InvalidArgumentError("length must be >= 1")
    if not 0 <= index < math.factorial(length):
        raise InvalidArgumentError(f"rank {index} out of range for length {length}")
    available = list(range(1, length + 1))
    out = []
    for position in range(length):
        f = math.factorial(length - 1 - position)
        digit, index = divmod(index, f)
        out.append(available.pop(digit))
    return Permutation(tuple(out))


def rank_lex(p: Permutation | Sequence[int]) -> int:
    """Lexicographic rank of a permutation of 1..L (inverse of unrank_lex)."""
    entries = tuple(int(v) for v in p)
    length = len(entries)
    available = list(range(1, length + 1))
    rank = 0
    for position, value in enumerate(entries):
        digit = available.index(value)
        rank += digit * math.factorial(length - 1 - position)
        available.pop(digit)
    return rank


def generate_unconstrained(params: SamplerParams, workers: int = 1) -> tuple[PermutationSet, SamplerReport]:
    """Greedy max-mean-Hamming sampling over all (n_p*n_f)! permutations.

    Exact mode scans the full factorial space each step, streamed as
    lexicographic chunks so candidate-row memory stays bounded; it refuses
    to run when the per-step candidate count exceeds the configured budget.
    Pool mode scans a fixed seeded uniform sample of pool_size candidates
    instead. Both are deterministic given the seed.
    """
    if params.mode not in (UNCONSTRAINED_EXACT, UNCONSTRAINED_POOL):
        raise InvalidArgumentError("generate_unconstrained requires an unconstrained mode")
    t0 = time.perf_counter_ns()
    length = params.length
    n_perms = params.n_perms
    rng = substream(params.seed, "unconstrained", "first-row")
    first = (rng.permutation(length) + 1).astype(_row_dtype(length))

    if params.mode == UNCONSTRAINED_POOL:
        rows, step_sums, peak = _greedy_over_pool(params, first, workers)
        per_step_candidates = params.pool_size
    else:
        rows, step_sums, peak = _greedy_exact(params, first, workers)
        per_step_candidates = math.factorial(length)

    perm_set = PermutationSet(
        rows=tuple(Permutation(tuple(int(v) for v in row)) for row in rows),
        n_p=params.n_p,
        n_f=params.n_f,
        mode=params.mode,
        seed=params.seed,
    )
    report = SamplerReport(
        per_step_best_distance=tuple(Fraction(s, h - 1) for h, s in enumerate(step_sums, start=2)),
        candidates_evaluated=(n_perms - 1) * per_step_candidates,
        wall_time_ns=time.perf_counter_ns() - t0,
        peak_candidate_memory_rows=peak,
    )
    return perm_set, report


def _greedy_over_pool(params: SamplerParams, first: np.ndarray, workers: int) -> tuple[list, list, int]:
    length = params.length
    rng = substream(params.seed, "unconstrained", "pool")
    base = np.tile(np.arange(1, length + 1, dtype=_row_dtype(length)), (params.pool_size, 1))
    pool = rng.permuted(base, axis=1)

    rows = [first]
    step_sums: list[int] = []
    excluded = (pool == first).all(axis=1)
    sums = np.zeros(params.pool_size, dtype=np.int64)
    executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for _h in range(2, params.n_perms + 1):
            sums += (pool != rows[-1]).sum(axis=1)
            sums[excluded] = -1
            best_sum, best_idx = _argmax_earliest(sums, workers, executor)
            if best_sum < 0:
                raise CapacityError("candidate pool exhausted before reaching n_perms distinct rows")
            row = pool[best_idx].copy()
            rows.append(row)
            step_sums.append(best_sum)
            excluded |= (pool == row).all(axis=1)
    finally:
        if executor is not None:
            executor.shutdown()
    return rows, step_sums, params.pool_size


def _greedy_exact(params: SamplerParams, first: np.ndarray, workers: int) -> tuple[list, list, int]:
    length = params.length
    total = math.factorial(length)
    if params.n_perms > total:
        raise CapacityError(f"n_perms {params.n_perms} exceeds candidate space size {total}")
    if total > params.budget:
        raise CapacityError(
            f"exact mode needs {total} candidate evaluations per step, over the budget of {params.budget}; "
            f"raise the budget or use pool mode"
        )

    materialized = total <= CHUNK_ROWS
    use_sums = params.n_perms > 2
    if use_sums and total > EXACT_ACCUM_LIMIT:
        raise CapacityError(f"distance accumulator for {total} candidates exceeds limit {EXACT_ACCUM_LIMIT}")
    sum_dtype = np.int64 if materialized else np.int32
    if use_sums and params.n_perms * length >= 2**31:
        sum_dtype = np.int64

    rows = [first]
    chosen_ranks = [rank_lex(first)]
    step_sums: list[int] = []

    if materialized:
        space_rows = (perm_table(length) + 1).astype(_row_dtype(length))
        sums = np.zeros(total, dtype=sum_dtype) if use_sums else None
        executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            for _h in range(2, params.n_perms + 1):
                d = (space_rows != rows[-1]).sum(axis=1)
                if use_sums:
                    sums += d
                    vals = sums
                else:
                    vals = d
                vals[chosen_ranks] = -1
                best_sum, best_idx = _argmax_earliest(vals, workers, executor)
                rows.append(space_rows[best_idx].copy())
                chosen_ranks.append(best_idx)
                step_sums.append(best_sum)
        finally:
            if executor is not None:
                executor.shutdown()
        return rows, step_sums, total

    base_len = _lex_base_len(length, CHUNK_ROWS)
    base = perm_table(base_len)
    chunk_rows = math.factorial(base_len)
    sums = np.zeros(total, dtype=sum_dtype) if use_sums else None
    for _h in range(2, params.n_perms + 1):
        best_sum = -1
        best_idx = -1
        for start, chunk in _iter_lex_chunks(length, base, base_len):
            d = (chunk != rows[-1]).sum(axis=1)
            if use_sums:
                seg = sums[start : start + len(d)]
                seg += d
                vals = seg
            else:
                vals = d
            for r in chosen_ranks:
                if start <= r < start + len(vals):
                    vals[r - start] = -1
            i = int(np.argmax(vals))
            val = int(vals[i])
            if val > best_sum:
                best_sum, best_idx = val, start + i
        rows.append(np.array(unrank_lex(best_idx, length).entries, dtype=_row_dtype(length)))
        chosen_ranks.append(best_idx)
        step_sums.append(best_sum)
    return rows, step_sums, chunk_rows


def generate(params: SamplerParams, workers: int = 1) -> tuple[PermutationSet, SamplerReport]:
    """Dispatch to the sampler selected by params.mode."""
    if params.mode == SPATIAL_COHERENT:
        return generate_spatial(params, workers=workers)
    return generate_unconstrained(params, workers=workers)


def oracle_spatial(params: SamplerParams, chosen_prefix) -> tuple[Fraction, frozenset[Permutation]]:
    """Exhaustive reference for one greedy step over the block-coherent space.

    Materializes every (within-frame shuffles, frame order) combination with
    plain itertools -- deliberately sharing no machinery with the sampler --
    and returns the maximal mean Hamming distance to the prefix rows together
    with ALL candidates attaining it, so tie-broken sampler output can be
    checked by membership. Candidates equal to a prefix row are not eligible,
    mirroring the sampler's duplicate skip.
    """
    if isinstance(chosen_prefix, PermutationSet):
        prefix_rows = [row.entries for row in chosen_prefix.rows]
    else:
        prefix_rows = [tuple(Permutation(tuple(r)).entries) if not isinstance(r, Permutation) else r.entries for r in chosen_prefix]
    if not prefix_rows:
        raise InvalidArgumentError("oracle needs a nonempty prefix (the greedy step starts at h = 2)")
    n_p, n_f = params.n_p, params.n_f
    space = space_size_spatial(n_p, n_f)
    if space > ORACLE_SPACE_LIMIT:
        raise CapacityError(f"oracle space {space} exceeds limit {ORACLE_SPACE_LIMIT}")

    value_blocks = [tuple(range(n_p * i + 1, n_p * (i + 1) + 1)) for i in range(n_f)]
    taken = set(prefix_rows)
    best_sum = -1
    best_rows: list[tuple[int, ...]] = []
    for order in itertools.permutations(range(n_f)):
        for combo in itertools.product(*(itertools.permutations(vb) for vb in value_blocks)):
            row = tuple(v for frame in order for v in combo[frame])
            if row in taken:
                continue
            total = 0
            for prev in prefix_rows:
                total += sum(1 for x, y in zip(row, prev) if x != y)
            if total > best_sum:
                best_sum = total
                best_rows = [row]
            elif total == best_sum:
                best_rows.append(row)
    return Fraction(best_sum, len(prefix_rows)), frozenset(Permutation(r) for r in best_rows)
