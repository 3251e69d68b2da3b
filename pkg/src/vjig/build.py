"""Dataset assembly and verification.

Build: tuple list + frame images + permutation file in; checksummed shards +
manifest out. Each tuple is processed on its own seeded substream, so worker
count and scheduling never change the output; records are sorted by tuple_id
before sharding and manifest entries by video then tuple, making reruns
byte-identical.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dataset_io import (
    ENC_NORM32,
    ENC_RAW8,
    Manifest,
    ManifestEntry,
    export_record_png,
    read_manifest,
    read_perm_file,
    shard_paths,
    write_manifest,
    write_shard,
    read_shard,
)
from .errors import InvalidArgumentError, StalePermutationError, VerificationError
from .perm_core import PermutationSet, perm_set_digest
from .pipeline import GRAY_SCOPE_FRAME, GRAY_SCOPE_TUPLE, GRAY_SCOPES, GridSpec, crop_frame, maybe_grayscale, normalize_patch, sample_patches
from .puzzle import PuzzleRecord, build_record, canonical_order, verify_record
from .rng import substream
from .tuples import DEFAULT_FIXED_INDICES, FIXED_INDEX, QUADRUPLE_EXPAND, FrameTuple, expand_quadruple, fixed_index_tuple, read_tuple_list

MANIFEST_NAME = "manifest.txt"


@dataclass
class BuildConfig:
    tuples_path: Path
    frames_dir: Path
    perm_path: Path
    out_dir: Path
    seed: int
    grid: GridSpec = field(default_factory=GridSpec)
    regime: str = FIXED_INDEX
    indices: tuple[int, ...] = DEFAULT_FIXED_INDICES
    gray_prob: float = 0.5
    gray_scope: str = GRAY_SCOPE_TUPLE
    encoding: str = ENC_NORM32
    epoch: int = 0
    shard_size: int = 512
    workers: int = 1
    max_skip_frac: float = 0.01
    export_png: bool = False
    dataset_name: str = "dataset"

    def __post_init__(self):
        if self.gray_scope not in GRAY_SCOPES:
            raise InvalidArgumentError(f"gray_scope must be one of {GRAY_SCOPES}")
        if self.encoding not in (ENC_RAW8, ENC_NORM32):
            raise InvalidArgumentError(f"encoding must be {ENC_RAW8!r} or {ENC_NORM32!r}")
        if self.shard_size < 1:
            raise InvalidArgumentError("shard_size must be >= 1")
        if self.workers < 1:
            raise InvalidArgumentError("workers must be >= 1")
        if not 0.0 <= self.max_skip_frac <= 1.0:
            raise InvalidArgumentError("max_skip_frac must be in [0, 1]")


@dataclass
class BuildResult:
    manifest_path: Path
    shard_files: list[Path]
    built: int
    skipped: int
    skip_fraction: float
    over_skip_threshold: bool


def _load_frame(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def list_tuples(config: BuildConfig) -> tuple[list[FrameTuple], list[ManifestEntry]]:
    """Expand the tuple list file into frame tuples plus pre-build skips."""
    tuples: list[FrameTuple] = []
    skipped: list[ManifestEntry] = []
    for video_id, refs, line_no in read_tuple_list(config.tuples_path):
        if config.regime == QUADRUPLE_EXPAND:
            tuples.extend(expand_quadruple(video_id, refs, line_no))
        else:
            tup, reason = fixed_index_tuple(video_id, refs, config.indices, line_no)
            if tup is None:
                skipped.append(ManifestEntry(f"{video_id}:{line_no}:0", video_id, "skipped", reason, refs))
            else:
                tuples.append(tup)
    return tuples, skipped


def _build_one(tup: FrameTuple, config: BuildConfig, perm_set: PermutationSet) -> tuple[PuzzleRecord | None, ManifestEntry]:
    rng = substream(config.seed, "pipeline", tup.tuple_id)
    frames_patches = []
    for frame_index, ref in enumerate(tup.frame_refs):
        path = config.frames_dir / ref
        try:
            image = _load_frame(path)
        except (OSError, ValueError) as exc:
            reason = f"unreadable frame {ref}: {exc}" if path.exists() else f"missing frame {ref}"
            return None, ManifestEntry(tup.tuple_id, tup.video_id, "skipped", reason, tup.frame_refs)
        try:
            crop = crop_frame(image, config.grid, rng)
        except InvalidArgumentError as exc:
            return None, ManifestEntry(tup.tuple_id, tup.video_id, "skipped", f"frame {ref}: {exc}", tup.frame_refs)
        patches = sample_patches(crop, config.grid, rng, frame=frame_index)
        if config.gray_scope == GRAY_SCOPE_FRAME:
            patches = maybe_grayscale(patches, config.gray_prob, rng)
        frames_patches.append(patches)
    if config.gray_scope == GRAY_SCOPE_TUPLE:
        flat = maybe_grayscale([p for frame in frames_patches for p in frame], config.gray_prob, rng)
        n_p = config.grid.n_patches
        frames_patches = [flat[i * n_p : (i + 1) * n_p] for i in range(len(frames_patches))]
    canonical = canonical_order(frames_patches)
    record = build_record(tup.tuple_id, canonical, perm_set, config.seed, config.epoch)
    return record, ManifestEntry(tup.tuple_id, tup.video_id, "built", "", tup.frame_refs)


def build_dataset(config: BuildConfig) -> BuildResult:
    try:
        perm_set = read_perm_file(config.perm_path)
    except FileNotFoundError:
        raise InvalidArgumentError(f"permutation file not found: {config.perm_path}")
    if not Path(config.tuples_path).exists():
        raise InvalidArgumentError(f"tuple list not found: {config.tuples_path}")
    if config.grid.n_patches != perm_set.n_p:
        raise InvalidArgumentError(
            f"grid {config.grid.grid_rows}x{config.grid.grid_cols} has {config.grid.n_patches} patches per frame, "
            f"permutation set expects {perm_set.n_p}"
        )
    tuples, entries = list_tuples(config)
    for tup in tuples:
        if tup.n_frames != perm_set.n_f:
            raise InvalidArgumentError(
                f"tuple {tup.tuple_id} has {tup.n_frames} frames, permutation set expects {perm_set.n_f}"
            )

    records: list[PuzzleRecord] = []
    if config.workers > 1 and len(tuples) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(lambda t: _build_one(t, config, perm_set), tuples))
    else:
        results = [_build_one(t, config, perm_set) for t in tuples]
    for record, entry in results:
        entries.append(entry)
        if record is not None:
            records.append(record)
    records.sort(key=lambda r: r.tuple_id)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if config.export_png:
        for record in records:
            export_record_png(record, out_dir / "png")

    if config.encoding == ENC_NORM32:
        records = [
            PuzzleRecord(r.tuple_id, tuple(normalize_patch(p) for p in r.patches), r.label, r.perm_set_digest)
            for r in records
        ]

    shard_files = []
    for i in range(0, len(records), config.shard_size):
        path = out_dir / f"shard-{i // config.shard_size:05d}.vjz"
        write_shard(records[i : i + config.shard_size], path)
        shard_files.append(path)

    manifest = Manifest(
        dataset_name=config.dataset_name,
        regime=config.regime,
        n_f=perm_set.n_f,
        grid=config.grid,
        gray_prob=config.gray_prob,
        gray_scope=config.gray_scope,
        encoding=config.encoding,
        seed=config.seed,
        epoch=config.epoch,
        perm_set_digest=perm_set_digest(perm_set),
        tool_version=__version__,
        entries=tuple(entries),
    )
    manifest_path = out_dir / MANIFEST_NAME
    write_manifest(manifest, manifest_path)

    built = len(records)
    skipped = sum(1 for e in entries if e.status == "skipped")
    total = built + skipped
    skip_fraction = skipped / total if total else 0.0
    return BuildResult(
        manifest_path=manifest_path,
        shard_files=shard_files,
        built=built,
        skipped=skipped,
        skip_fraction=skip_fraction,
        over_skip_threshold=skip_fraction > config.max_skip_frac,
    )


def verify_dataset(out_dir: str | Path, perm_path: str | Path) -> dict:
    """Check a built dataset end to end against its permutation file.

    Raises StalePermutationError on digest mismatch, VerificationError on any
    failed record or manifest/shard inconsistency, and format/checksum errors
    on corrupted files. Returns summary counts on success.
    """
    out_dir = Path(out_dir)
    manifest = read_manifest(out_dir / MANIFEST_NAME)
    perm_set = read_perm_file(perm_path)
    digest = perm_set_digest(perm_set)
    if manifest.perm_set_digest != digest:
        raise StalePermutationError(
            f"manifest is bound to permutation set {manifest.perm_set_digest[:12]}..., "
            f"given file has {digest[:12]}..."
        )

    seen_ids: list[str] = []
    n_records = 0
    files = shard_paths(out_dir)
    for path in files:
        for record in read_shard(path):
            if record.perm_set_digest != digest:
                raise StalePermutationError(f"{path}: shard bound to a different permutation set")
            if not verify_record(record, perm_set):
                raise VerificationError(f"{path}: record {record.tuple_id!r} failed verification")
            seen_ids.append(record.tuple_id)
            n_records += 1

    built = sorted(manifest.built_ids())
    if sorted(seen_ids) != built:
        missing = set(built) - set(seen_ids)
        extra = set(seen_ids) - set(built)
        dupes = len(seen_ids) != len(set(seen_ids))
        raise VerificationError(
            f"shard records disagree with manifest (missing={sorted(missing)[:3]}, "
            f"extra={sorted(extra)[:3]}, duplicates={dupes})"
        )
    return {
        "shards": len(files),
        "records": n_records,
        "built": len(built),
        "skipped": len(manifest.skipped()),
    }
