"""Frame tuple construction from per-video frame listings.

Two regimes: expanding pre-listed 4-frame tuples into their four ordered
triples, and picking fixed frame indices (1st, 5th, 10th by default) from
each video's frame sequence. Videos too short for the requested indices are
skipped with a recorded reason, never padded.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import FormatError, InvalidArgumentError

QUADRUPLE_EXPAND = "quadruple_expand"
FIXED_INDEX = "fixed_index"
REGIMES = (QUADRUPLE_EXPAND, FIXED_INDEX)

DEFAULT_FIXED_INDICES = (1, 5, 10)

# The four ordered triples taken from a 4-frame tuple (positions, 0-based).
QUADRUPLE_TRIPLES = ((0, 1, 2), (1, 2, 3), (0, 2, 3), (0, 1, 3))


@dataclass(frozen=True)
class FrameTuple:
    """An ordered selection of frames from one video."""

    tuple_id: str
    video_id: str
    frame_refs: tuple[str, ...]
    regime: str

    def __post_init__(self):
        object.__setattr__(self, "frame_refs", tuple(str(r) for r in self.frame_refs))
        if self.regime not in REGIMES:
            raise InvalidArgumentError(f"unknown regime {self.regime!r}")
        if len(self.frame_refs) < 1:
            raise InvalidArgumentError("frame tuple needs at least one frame")
        if all(r.isdigit() for r in self.frame_refs):
            indices = [int(r) for r in self.frame_refs]
            if any(b <= a for a, b in zip(indices, indices[1:])):
                raise InvalidArgumentError(f"numeric frame refs must be strictly increasing: {indices}")

    @property
    def n_frames(self) -> int:
        return len(self.frame_refs)


def expand_quadruple(video_id: str, refs: Sequence[str], line_no: int = 0) -> list[FrameTuple]:
    """The four ordered triples of a 4-frame tuple.

    For frames (a, b, c, d) the output is exactly
    [(a, b, c), (b, c, d), (a, c, d), (a, b, d)], in that order.
    """
    if len(refs) != 4:
        raise InvalidArgumentError(f"quadruple expansion needs exactly 4 frame refs, got {len(refs)}")
    out = []
    for k, picks in enumerate(QUADRUPLE_TRIPLES):
        out.append(
            FrameTuple(
                tuple_id=f"{video_id}:{line_no}:{k}",
                video_id=video_id,
                frame_refs=tuple(refs[i] for i in picks),
                regime=QUADRUPLE_EXPAND,
            )
        )
    return out


def fixed_index_tuple(
    video_id: str,
    frames: Sequence[str],
    indices: Sequence[int] = DEFAULT_FIXED_INDICES,
    line_no: int = 0,
) -> tuple[FrameTuple | None, str | None]:
    """One tuple per video at the given 1-based frame indices.

    Returns (tuple, None) on success, or (None, reason) when the video is too
    short for the requested indices; short videos exist in the wild and must
    not abort a build.
    """
    indices = tuple(int(i) for i in indices)
    if any(i < 1 for i in indices):
        raise InvalidArgumentError(f"frame indices are 1-based, got {indices}")
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise InvalidArgumentError(f"frame indices must be strictly increasing: {indices}")
    if max(indices) > len(frames):
        return None, f"frame index {max(indices)} out of range ({len(frames)} frames)"
    tup = FrameTuple(
        tuple_id=f"{video_id}:{line_no}:0",
        video_id=video_id,
        frame_refs=tuple(frames[i - 1] for i in indices),
        regime=FIXED_INDEX,
    )
    return tup, None


def read_tuple_list(path: str | Path) -> list[tuple[str, tuple[str, ...], int]]:
    """Parse a tuple list file: one `video_id ref_1 ... ref_k` entry per line.

    Blank lines and `#` comments are ignored. Returns (video_id, refs,
    line_no) triples in file order.
    """
    entries = []
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 2:
            raise FormatError(f"{path}:{line_no}: expected 'video_id ref_1 ...', got {line!r}")
        entries.append((fields[0], tuple(fields[1:]), line_no))
    return entries
