"""Operator entry point.

Subcommands: `perms` generates a permutation file plus sampler report,
`stats` summarizes a permutation file's pairwise diversity, `build` turns a
tuple list, frame images, and a permutation file into shards + manifest,
`verify` re-checks a built dataset, and `bench` compares the samplers.

Every command that draws randomness requires an explicit --seed; all flags
are echoed into the manifest, so there is no hidden configuration. Exit
codes: 0 success, 2 usage, 3 capacity, 4 format, 5 verification, 6 skip
threshold exceeded, 1 other failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .bench import cost_summary, format_table, run_bench
from .build import BuildConfig, build_dataset, verify_dataset
from .dataset_io import ENC_NORM32, ENC_RAW8, read_perm_file, write_perm_file, write_report_file
from .errors import EXIT_QUALITY, InvalidArgumentError, VjigError
from .perm_core import SPATIAL_COHERENT, UNCONSTRAINED_EXACT, UNCONSTRAINED_POOL, diversity
from .pipeline import GRAY_SCOPES, GridSpec
from .samplers import SamplerParams, generate
from .tuples import FIXED_INDEX, QUADRUPLE_EXPAND


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        if "x" in text:
            rows, cols = (int(v) for v in text.lower().split("x"))
        else:
            rows = cols = int(text)
        return rows, cols
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS or a single integer, got {text!r}")


def _parse_indices(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _sampler_params(args) -> SamplerParams:
    if args.mode == "sp":
        if args.length is not None:
            raise InvalidArgumentError("--len applies to --mode orig only")
        return SamplerParams(n_perms=args.n, n_p=args.n_p, n_f=args.n_f, seed=args.seed, mode=SPATIAL_COHERENT)
    if args.length is not None:
        n_p, n_f = args.length, 1
    else:
        n_p, n_f = args.n_p, args.n_f
    if args.exact:
        kwargs = {"budget": args.budget} if args.budget else {}
        return SamplerParams(n_perms=args.n, n_p=n_p, n_f=n_f, seed=args.seed, mode=UNCONSTRAINED_EXACT, **kwargs)
    return SamplerParams(
        n_perms=args.n, n_p=n_p, n_f=n_f, seed=args.seed, mode=UNCONSTRAINED_POOL, pool_size=args.pool_size
    )


def cmd_perms(args) -> int:
    params = _sampler_params(args)
    perm_set, report = generate(params, workers=args.workers)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_perm_file(perm_set, out)
    report_path = out.with_name(out.name + ".report")
    write_report_file(report, report_path)
    per_step = report.candidates_per_step
    for h, total in enumerate(report.step_sums(), start=2):
        print(f"step {h}: best distance sum {total} (mean {total / (h - 1):.4f}) over {per_step} candidates")
    print(
        f"wrote {perm_set.n_rows} x {perm_set.length} rows to {out} "
        f"(mode {perm_set.mode}, seed {perm_set.seed}); report: {report_path}"
    )
    print(
        f"candidates evaluated: {report.candidates_evaluated}; peak candidate rows: "
        f"{report.peak_candidate_memory_rows}; wall time: {report.wall_time_ns / 1e9:.3f}s"
    )
    return 0


def cmd_stats(args) -> int:
    perm_set = read_perm_file(args.perm_file)
    print(f"{perm_set.n_rows} rows of length {perm_set.length} (mode {perm_set.mode}, seed {perm_set.seed})")
    stats = diversity(perm_set)
    print(f"min pairwise Hamming:  {stats.min_pairwise}")
    print(f"mean pairwise Hamming: {float(stats.mean_pairwise):.4f} ({stats.mean_pairwise})")
    print("distance histogram:")
    for d, count in enumerate(stats.histogram):
        if count:
            print(f"  {d:>3}: {count}")
    return 0


def cmd_build(args) -> int:
    rows, cols = args.grid
    config = BuildConfig(
        tuples_path=Path(args.tuples),
        frames_dir=Path(args.frames_dir),
        perm_path=Path(args.perm_file),
        out_dir=Path(args.out),
        seed=args.seed,
        grid=GridSpec(crop=args.crop, grid_rows=rows, grid_cols=cols, patch=args.patch),
        regime=QUADRUPLE_EXPAND if args.regime == "quadruple" else FIXED_INDEX,
        indices=args.indices,
        gray_prob=args.gray_prob,
        gray_scope=args.gray_scope,
        encoding=args.encoding,
        epoch=args.epoch,
        shard_size=args.shard_size,
        workers=args.workers,
        max_skip_frac=args.max_skip_frac,
        export_png=args.export_png,
        dataset_name=args.dataset_name,
    )
    result = build_dataset(config)
    print(
        f"built {result.built} records into {len(result.shard_files)} shard(s) under {args.out}; "
        f"skipped {result.skipped} ({result.skip_fraction:.1%})"
    )
    print(f"manifest: {result.manifest_path}")
    if result.over_skip_threshold:
        print(f"error: skip fraction {result.skip_fraction:.1%} exceeds threshold {config.max_skip_frac:.1%}", file=sys.stderr)
        return EXIT_QUALITY
    return 0


def cmd_verify(args) -> int:
    counts = verify_dataset(Path(args.out), Path(args.perm_file))
    print(
        f"verified {counts['records']} records in {counts['shards']} shard(s): "
        f"{counts['built']} built, {counts['skipped']} skipped -- all checks passed"
    )
    return 0


def cmd_bench(args) -> int:
    seeds = list(range(args.seed, args.seed + args.seeds))
    rows = run_bench(
        n_perms=args.n,
        n_p=args.n_p,
        n_f=args.n_f,
        seeds=seeds,
        pool_size=args.pool_size,
        exact=args.exact,
        budget=args.budget,
        workers=args.workers,
    )
    print(format_table(rows))
    spatial, full, ratio = cost_summary(args.n_p, args.n_f)
    print(
        f"\nblock-coherent space: {spatial} candidates/step; unconstrained space: {full} candidates/step; "
        f"ratio {float(ratio):.0f}x in favor of block-coherent"
    )
    sp_wall = [r.wall_time_ns for r in rows if r.mode == SPATIAL_COHERENT]
    other_wall = [r.wall_time_ns for r in rows if r.mode != SPATIAL_COHERENT]
    if sp_wall and other_wall:
        print(
            f"mean wall time: block-coherent {sum(sp_wall) / len(sp_wall) / 1e6:.1f} ms vs "
            f"unconstrained {sum(other_wall) / len(other_wall) / 1e6:.1f} ms"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vjig", description=__doc__)
    parser.add_argument("--version", action="version", version=f"vjig {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("perms", help="generate a permutation file and sampler report")
    p.add_argument("--mode", choices=["sp", "orig"], required=True, help="sp: block-coherent; orig: unconstrained")
    p.add_argument("--n", type=int, required=True, help="number of permutations")
    p.add_argument("--np", dest="n_p", type=int, default=4, help="patches per frame")
    p.add_argument("--nf", dest="n_f", type=int, default=3, help="frames per tuple")
    p.add_argument("--len", dest="length", type=int, help="total permutation length (orig mode shorthand)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--pool-size", type=int, default=100_000, help="candidate pool size (orig pool mode)")
    p.add_argument("--exact", action="store_true", help="orig mode: scan the full factorial space")
    p.add_argument("--budget", type=int, help="orig exact mode: per-step candidate budget")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output permutation file path")
    p.set_defaults(func=cmd_perms)

    p = sub.add_parser("stats", help="diversity statistics of a permutation file")
    p.add_argument("--perm-file", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("build", help="build puzzle shards from frames and a permutation file")
    p.add_argument("--tuples", required=True, help="tuple list file: video_id ref_1 ... ref_k per line")
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--perm-file", required=True)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--regime", choices=["quadruple", "fixed"], default="fixed")
    p.add_argument("--indices", type=_parse_indices, default=(1, 5, 10), help="1-based frame indices (fixed regime)")
    p.add_argument("--crop", type=int, default=224)
    p.add_argument("--grid", type=_parse_grid, default=(2, 2), help="grid shape, e.g. 2x2")
    p.add_argument("--patch", type=int, default=64)
    p.add_argument("--gray-prob", type=float, default=0.5)
    p.add_argument("--gray-scope", choices=list(GRAY_SCOPES), default="tuple")
    p.add_argument("--encoding", choices=[ENC_NORM32, ENC_RAW8], default=ENC_NORM32)
    p.add_argument("--epoch", type=int, default=0, help="label reshuffling salt")
    p.add_argument("--shard-size", type=int, default=512, help="records per shard")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-skip-frac", type=float, default=0.01, help="fail when more tuples are skipped")
    p.add_argument("--export-png", action="store_true", help="also dump raw patches as PNGs")
    p.add_argument("--dataset-name", default="dataset")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="verify shards + manifest against a permutation file")
    p.add_argument("--perm-file", required=True)
    p.add_argument("--out", required=True, help="dataset directory to verify")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="compare samplers at matched settings")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--np", dest="n_p", type=int, default=4)
    p.add_argument("--nf", dest="n_f", type=int, default=3)
    p.add_argument("--seed", type=int, default=0, help="first seed")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds")
    p.add_argument("--pool-size", type=int, default=100_000)
    p.add_argument("--exact", action="store_true", help="run the unconstrained sampler in exact mode")
    p.add_argument("--budget", type=int, help="per-step candidate budget for exact mode")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VjigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
