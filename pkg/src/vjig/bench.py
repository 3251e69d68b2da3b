"""Matched-cost comparison of the two sampler families.

Runs both samplers at the same target set size over a list of seeds and
tabulates wall time, candidates evaluated, peak candidate-row memory, and
pairwise-distance quality, plus the exact per-step candidate-count ratio
between the unconstrained factorial space and the block-coherent space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .perm_core import SPATIAL_COHERENT, UNCONSTRAINED_EXACT, UNCONSTRAINED_POOL, diversity
from .samplers import SamplerParams, generate, space_size_spatial


@dataclass(frozen=True)
class BenchRow:
    mode: str
    seed: int
    n_perms: int
    wall_time_ns: int
    candidates_evaluated: int
    candidates_per_step: int
    peak_rows: int
    min_pairwise: int
    mean_pairwise: Fraction


def run_bench(
    n_perms: int,
    n_p: int,
    n_f: int,
    seeds: Sequence[int],
    pool_size: int = 100_000,
    exact: bool = False,
    budget: int | None = None,
    workers: int = 1,
) -> list[BenchRow]:
    """One row per (seed, mode), spatial first within each seed."""
    rows = []
    for seed in seeds:
        configs = [SamplerParams(n_perms=n_perms, n_p=n_p, n_f=n_f, seed=seed, mode=SPATIAL_COHERENT)]
        if exact:
            kwargs = {"budget": budget} if budget else {}
            configs.append(
                SamplerParams(n_perms=n_perms, n_p=n_p, n_f=n_f, seed=seed, mode=UNCONSTRAINED_EXACT, **kwargs)
            )
        else:
            configs.append(
                SamplerParams(n_perms=n_perms, n_p=n_p, n_f=n_f, seed=seed, mode=UNCONSTRAINED_POOL, pool_size=pool_size)
            )
        for params in configs:
            perm_set, report = generate(params, workers=workers)
            stats = diversity(perm_set) if perm_set.n_rows >= 2 else None
            rows.append(
                BenchRow(
                    mode=params.mode,
                    seed=seed,
                    n_perms=n_perms,
                    wall_time_ns=report.wall_time_ns,
                    candidates_evaluated=report.candidates_evaluated,
                    candidates_per_step=report.candidates_per_step,
                    peak_rows=report.peak_candidate_memory_rows,
                    min_pairwise=stats.min_pairwise if stats else 0,
                    mean_pairwise=stats.mean_pairwise if stats else Fraction(0),
                )
            )
    return rows


def cost_summary(n_p: int, n_f: int) -> tuple[int, int, Fraction]:
    """(block-coherent space, factorial space, per-step candidate ratio)."""
    spatial = space_size_spatial(n_p, n_f)
    full = math.factorial(n_p * n_f)
    return spatial, full, Fraction(full, spatial)


def format_table(rows: Sequence[BenchRow]) -> str:
    header = f"{'mode':<20} {'seed':>6} {'n':>6} {'wall_ms':>10} {'cand/step':>12} {'candidates':>14} {'peak_rows':>10} {'min_d':>6} {'mean_d':>8}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.mode:<20} {r.seed:>6} {r.n_perms:>6} {r.wall_time_ns / 1e6:>10.1f} "
            f"{r.candidates_per_step:>12} {r.candidates_evaluated:>14} {r.peak_rows:>10} "
            f"{r.min_pairwise:>6} {float(r.mean_pairwise):>8.3f}"
        )
    return "\n".join(lines)
