"""Bit-exact on-disk formats: permutation files, sampler reports, manifests,
and binary puzzle shards.

All binary payloads are little-endian with no timestamps, so identical inputs
produce byte-identical files on any platform. Shards are length-prefixed
records under a fixed header, closed by a whole-file CRC32 that turns any
corruption or truncation into a hard error instead of a partial read.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    BadVersionError,
    ChecksumError,
    FormatError,
    InvalidArgumentError,
)
from .perm_core import PermutationSet, perm_set_from_text, perm_set_to_text
from .pipeline import GridSpec, Patch, PatchSource
from .puzzle import PuzzleRecord
from .samplers import SamplerReport

SHARD_MAGIC = b"VJZ1"
SHARD_VERSION = 1
SHARD_BOM = 0xFEFF
_HEADER = struct.Struct("<4sHHBBHHHHQ32s")

ENC_RAW8 = "raw8"
ENC_NORM32 = "norm32"
_ENC_CODES = {ENC_RAW8: 0, ENC_NORM32: 1}
_ENC_NAMES = {v: k for k, v in _ENC_CODES.items()}

MANIFEST_MAGIC = "vjig-manifest 1"


# ---------------------------------------------------------------------------
# permutation files


def write_perm_file(perm_set: PermutationSet, path: str | Path) -> None:
    Path(path).write_bytes(perm_set_to_text(perm_set).encode("utf-8"))


def read_perm_file(path: str | Path) -> PermutationSet:
    return perm_set_from_text(Path(path).read_bytes().decode("utf-8"))


# ---------------------------------------------------------------------------
# sampler reports


def report_to_text(report: SamplerReport) -> str:
    """One `h sum candidates` line per greedy step, then a totals line."""
    lines = []
    per_step = report.candidates_per_step
    for h, total in enumerate(report.step_sums(), start=2):
        lines.append(f"{h} {total} {per_step}")
    lines.append(
        f"totals {report.candidates_evaluated} {report.wall_time_ns} {report.peak_candidate_memory_rows}"
    )
    return "\n".join(lines) + "\n"


def report_from_text(text: str) -> SamplerReport:
    lines = [line for line in text.split("\n") if line]
    if not lines or not lines[-1].startswith("totals "):
        raise FormatError("report missing totals line")
    try:
        _, cand, wall, peak = lines[-1].split(" ")
        candidates, wall_ns, peak_rows = int(cand), int(wall), int(peak)
    except ValueError as exc:
        raise FormatError(f"bad totals line: {lines[-1]!r}") from exc
    per_step = []
    for expected_h, line in enumerate(lines[:-1], start=2):
        try:
            h, total, _cands = (int(v) for v in line.split(" "))
        except ValueError as exc:
            raise FormatError(f"bad step line: {line!r}") from exc
        if h != expected_h:
            raise FormatError(f"step lines out of order: expected step {expected_h}, got {h}")
        per_step.append(Fraction(total, h - 1))
    return SamplerReport(
        per_step_best_distance=tuple(per_step),
        candidates_evaluated=candidates,
        wall_time_ns=wall_ns,
        peak_candidate_memory_rows=peak_rows,
    )


def write_report_file(report: SamplerReport, path: str | Path) -> None:
    Path(path).write_bytes(report_to_text(report).encode("utf-8"))


def read_report_file(path: str | Path) -> SamplerReport:
    return report_from_text(Path(path).read_bytes().decode("utf-8"))


# ---------------------------------------------------------------------------
# puzzle shards


@dataclass(frozen=True)
class ShardHeader:
    """Self-description of one shard file."""

    encoding: str
    patch_h: int
    patch_w: int
    channels: int
    patches_per_record: int
    record_count: int
    perm_set_digest: str


def _record_encoding(records) -> str:
    dtypes = {p.pixels.dtype for rec in records for p in rec.patches}
    if dtypes == {np.dtype(np.uint8)}:
        return ENC_RAW8
    if dtypes == {np.dtype(np.float32)}:
        return ENC_NORM32
    raise InvalidArgumentError(f"records mix pixel dtypes {sorted(str(d) for d in dtypes)}; shards are homogeneous")


def write_shard(records, path: str | Path) -> ShardHeader:
    """Serialize records into one shard file and return its header.

    Records must be nonempty and homogeneous in patch shape, pixel dtype,
    patch count, and permutation digest.
    """
    records = list(records)
    if not records:
        raise InvalidArgumentError("cannot write an empty shard")
    first = records[0].patches[0]
    shape = first.pixels.shape
    if len(shape) != 3:
        raise InvalidArgumentError("patch pixels must be HxWxC")
    ppr = len(records[0].patches)
    digest = records[0].perm_set_digest
    for rec in records:
        if len(rec.patches) != ppr:
            raise InvalidArgumentError("records disagree on patches per record")
        if rec.perm_set_digest != digest:
            raise InvalidArgumentError("records are bound to different permutation sets")
        for p in rec.patches:
            if p.pixels.shape != shape:
                raise InvalidArgumentError(f"patch shape {p.pixels.shape} != {shape}; shards are homogeneous")
    encoding = _record_encoding(records)

    buf = bytearray()
    buf += _HEADER.pack(
        SHARD_MAGIC,
        SHARD_VERSION,
        SHARD_BOM,
        _ENC_CODES[encoding],
        0,
        shape[0],
        shape[1],
        shape[2],
        ppr,
        len(records),
        bytes.fromhex(digest),
    )
    for rec in records:
        payload = bytearray()
        tid = rec.tuple_id.encode("utf-8")
        payload += struct.pack("<H", len(tid)) + tid
        payload += struct.pack("<I", rec.label)
        for p in rec.patches:
            s = p.source
            payload += struct.pack("<HHHHH", s.frame, s.cell_row, s.cell_col, s.jitter_y, s.jitter_x)
            pixels = np.ascontiguousarray(p.pixels)
            if encoding == ENC_NORM32:
                pixels = pixels.astype("<f4", copy=False)
            payload += pixels.tobytes()
        buf += struct.pack("<I", len(payload)) + payload
    buf += struct.pack("<I", zlib.crc32(bytes(buf)))
    Path(path).write_bytes(bytes(buf))
    return ShardHeader(
        encoding=encoding,
        patch_h=shape[0],
        patch_w=shape[1],
        channels=shape[2],
        patches_per_record=ppr,
        record_count=len(records),
        perm_set_digest=digest,
    )


def _parse_header(data: bytes, path) -> ShardHeader:
    if len(data) < _HEADER.size + 4:
        raise ChecksumError(f"{path}: file truncated ({len(data)} bytes)")
    magic, version, bom, enc_code, _pad, h, w, c, ppr, count, digest = _HEADER.unpack_from(data)
    if magic != SHARD_MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != SHARD_VERSION:
        raise BadVersionError(f"{path}: unsupported shard version {version}")
    if bom != SHARD_BOM:
        raise FormatError(f"{path}: byte-order mark mismatch (0x{bom:04X})")
    if enc_code not in _ENC_NAMES:
        raise FormatError(f"{path}: unknown pixel encoding code {enc_code}")
    return ShardHeader(
        encoding=_ENC_NAMES[enc_code],
        patch_h=h,
        patch_w=w,
        channels=c,
        patches_per_record=ppr,
        record_count=count,
        perm_set_digest=digest.hex(),
    )


def read_shard_header(path: str | Path) -> ShardHeader:
    with open(path, "rb") as fh:
        data = fh.read(_HEADER.size + 4)
    return _parse_header(data, path)


def read_shard(path: str | Path) -> list[PuzzleRecord]:
    """Exact inverse of write_shard.

    The whole-file checksum is verified before any record is decoded, so a
    corrupted or truncated shard fails closed rather than yielding partial
    or silently wrong records.
    """
    data = Path(path).read_bytes()
    header = _parse_header(data, path)
    stored_crc = struct.unpack_from("<I", data, len(data) - 4)[0]
    if zlib.crc32(data[:-4]) != stored_crc:
        raise ChecksumError(f"{path}: checksum mismatch")

    pixel_itemsize = 1 if header.encoding == ENC_RAW8 else 4
    pixel_dtype = np.uint8 if header.encoding == ENC_RAW8 else np.dtype("<f4")
    patch_bytes = header.patch_h * header.patch_w * header.channels * pixel_itemsize
    records = []
    offset = _HEADER.size
    end = len(data) - 4
    for _ in range(header.record_count):
        if offset + 4 > end:
            raise FormatError(f"{path}: record table overruns file")
        (payload_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        payload_end = offset + payload_len
        if payload_end > end:
            raise FormatError(f"{path}: record payload overruns file")
        (tid_len,) = struct.unpack_from("<H", data, offset)
        tid = data[offset + 2 : offset + 2 + tid_len].decode("utf-8")
        pos = offset + 2 + tid_len
        (label,) = struct.unpack_from("<I", data, pos)
        pos += 4
        patches = []
        for _p in range(header.patches_per_record):
            frame, cell_row, cell_col, jy, jx = struct.unpack_from("<HHHHH", data, pos)
            pos += 10
            pixels = np.frombuffer(data, dtype=pixel_dtype, count=patch_bytes // pixel_itemsize, offset=pos)
            pixels = pixels.reshape(header.patch_h, header.patch_w, header.channels)
            if header.encoding == ENC_NORM32:
                pixels = pixels.astype(np.float32)
            else:
                pixels = pixels.copy()
            pos += patch_bytes
            patches.append(Patch(pixels, PatchSource(frame, cell_row, cell_col, jy, jx)))
        if pos != payload_end:
            raise FormatError(f"{path}: record for {tid!r} has {payload_end - pos} stray bytes")
        records.append(
            PuzzleRecord(tuple_id=tid, patches=tuple(patches), label=label, perm_set_digest=header.perm_set_digest)
        )
        offset = payload_end
    if offset != end:
        raise FormatError(f"{path}: {end - offset} trailing bytes after declared records")
    return records


def shard_paths(directory: str | Path) -> list[Path]:
    return sorted(Path(directory).glob("shard-*.vjz"))


# ---------------------------------------------------------------------------
# manifests


@dataclass(frozen=True)
class ManifestEntry:
    tuple_id: str
    video_id: str
    status: str  # "built" or "skipped"
    reason: str  # empty for built entries
    frame_refs: tuple[str, ...]


@dataclass(frozen=True)
class Manifest:
    """Human-readable build provenance: geometry, seeds, and per-tuple status."""

    dataset_name: str
    regime: str
    n_f: int
    grid: GridSpec
    gray_prob: float
    gray_scope: str
    encoding: str
    seed: int
    epoch: int
    perm_set_digest: str
    tool_version: str
    entries: tuple[ManifestEntry, ...]

    def built_ids(self) -> list[str]:
        return [e.tuple_id for e in self.entries if e.status == "built"]

    def skipped(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.status == "skipped"]


def manifest_to_text(manifest: Manifest) -> str:
    entries = sorted(manifest.entries, key=lambda e: (e.video_id, e.tuple_id))
    lines = [
        MANIFEST_MAGIC,
        f"dataset_name: {manifest.dataset_name}",
        f"regime: {manifest.regime}",
        f"n_f: {manifest.n_f}",
        f"crop: {manifest.grid.crop}",
        f"grid_rows: {manifest.grid.grid_rows}",
        f"grid_cols: {manifest.grid.grid_cols}",
        f"patch: {manifest.grid.patch}",
        f"gray_prob: {manifest.gray_prob!r}",
        f"gray_scope: {manifest.gray_scope}",
        f"encoding: {manifest.encoding}",
        f"seed: {manifest.seed}",
        f"epoch: {manifest.epoch}",
        f"perm_set_digest: {manifest.perm_set_digest}",
        f"tool_version: {manifest.tool_version}",
        f"entries: {len(entries)}",
    ]
    for e in entries:
        reason = e.reason.replace("\t", " ").replace("\n", " ")
        lines.append("\t".join([e.tuple_id, e.video_id, e.status, reason, *e.frame_refs]))
    return "\n".join(lines) + "\n"


def _header_value(lines: list[str], index: int, key: str) -> str:
    prefix = f"{key}: "
    if index >= len(lines) or not lines[index].startswith(prefix):
        raise FormatError(f"manifest line {index + 1}: expected {key!r} field")
    return lines[index][len(prefix) :]


def manifest_from_text(text: str) -> Manifest:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != MANIFEST_MAGIC:
        raise FormatError("not a manifest file")
    try:
        grid = GridSpec(
            crop=int(_header_value(lines, 4, "crop")),
            grid_rows=int(_header_value(lines, 5, "grid_rows")),
            grid_cols=int(_header_value(lines, 6, "grid_cols")),
            patch=int(_header_value(lines, 7, "patch")),
        )
        manifest = Manifest(
            dataset_name=_header_value(lines, 1, "dataset_name"),
            regime=_header_value(lines, 2, "regime"),
            n_f=int(_header_value(lines, 3, "n_f")),
            grid=grid,
            gray_prob=float(_header_value(lines, 8, "gray_prob")),
            gray_scope=_header_value(lines, 9, "gray_scope"),
            encoding=_header_value(lines, 10, "encoding"),
            seed=int(_header_value(lines, 11, "seed")),
            epoch=int(_header_value(lines, 12, "epoch")),
            perm_set_digest=_header_value(lines, 13, "perm_set_digest"),
            tool_version=_header_value(lines, 14, "tool_version"),
            entries=(),
        )
        n_entries = int(_header_value(lines, 15, "entries"))
    except (ValueError, InvalidArgumentError) as exc:
        raise FormatError(f"bad manifest header: {exc}") from exc
    body = lines[16:]
    if len(body) != n_entries:
        raise FormatError(f"manifest declares {n_entries} entries, found {len(body)}")
    entries = []
    for line in body:
        fields = line.split("\t")
        if len(fields) < 5:
            raise FormatError(f"bad manifest entry: {line!r}")
        tuple_id, video_id, status, reason, *refs = fields
        if status not in ("built", "skipped"):
            raise FormatError(f"bad entry status {status!r}")
        entries.append(ManifestEntry(tuple_id, video_id, status, reason, tuple(refs)))
    ids = [e.tuple_id for e in entries]
    if len(set(ids)) != len(ids):
        raise FormatError("duplicate tuple_id in manifest")
    return Manifest(**{**manifest.__dict__, "entries": tuple(entries)})


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    Path(path).write_bytes(manifest_to_text(manifest).encode("utf-8"))


def read_manifest(path: str | Path) -> Manifest:
    return manifest_from_text(Path(path).read_bytes().decode("utf-8"))


# ---------------------------------------------------------------------------
# debug export


def export_record_png(record: PuzzleRecord, directory: str | Path) -> list[Path]:
    """Write a record's raw patches as PNGs (shuffled order) for inspection."""
    from PIL import Image

    out_dir = Path(directory) / record.tuple_id.replace("/", "_").replace(":", "_")
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, p in enumerate(record.patches):
        if p.pixels.dtype != np.uint8:
            raise InvalidArgumentError("PNG export needs raw uint8 patches")
        pixels = p.pixels[:, :, 0] if p.pixels.shape[2] == 1 else p.pixels
        path = out_dir / f"{i:02d}.png"
        Image.fromarray(pixels).save(path)
        paths.append(path)
    return paths
