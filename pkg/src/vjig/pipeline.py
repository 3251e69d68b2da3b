"""Deterministic frame geometry and patch preprocessing.

A frame is cropped to a square window, split into a grid of equal cells, and
one patch is jitter-sampled from inside each cell. Whole patch tuples may be
projected to grayscale, and each patch is normalized independently of all
others. Stage order is fixed: crop -> grid/jitter -> grayscale -> normalize;
the grayscale projection refuses already-normalized input so the order cannot
silently flip.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

# Rec. 601 luma weights, fixed for reproducibility.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# Patches with standard deviation below this (on the 0..255 scale) are
# treated as constant and normalize to all zeros.
CONSTANT_STD_GUARD = 1e-6

GRAY_SCOPE_TUPLE = "tuple"
GRAY_SCOPE_FRAME = "frame"
GRAY_SCOPES = (GRAY_SCOPE_TUPLE, GRAY_SCOPE_FRAME)


@dataclass(frozen=True)
class GridSpec:
    """Crop / grid / patch geometry.

    The crop must divide evenly into grid_rows x grid_cols square cells of a
    single size; patches are at most one cell. Non-divisible combinations are
    rejected here rather than rounded.
    """

    crop: int = 224
    grid_rows: int = 2
    grid_cols: int = 2
    patch: int = 64

    def __post_init__(self):
        if self.crop < 1 or self.grid_rows < 1 or self.grid_cols < 1 or self.patch < 1:
            raise InvalidArgumentError("crop, grid dimensions, and patch must be >= 1")
        if self.crop % self.grid_rows or self.crop % self.grid_cols:
            raise InvalidArgumentError(f"crop {self.crop} is not divisible by grid {self.grid_rows}x{self.grid_cols}")
        if self.crop // self.grid_rows != self.crop // self.grid_cols:
            raise InvalidArgumentError(f"grid {self.grid_rows}x{self.grid_cols} would make non-square cells")
        if self.patch > self.crop // self.grid_rows:
            raise InvalidArgumentError(f"patch {self.patch} exceeds cell size {self.crop // self.grid_rows}")

    @property
    def cell(self) -> int:
        return self.crop // self.grid_rows

    @property
    def jitter_span(self) -> int:
        """Largest jitter offset per axis; offsets are uniform on [0, span]."""
        return self.cell - self.patch

    @property
    def n_patches(self) -> int:
        return self.grid_rows * self.grid_cols


@dataclass(frozen=True)
class PatchSource:
    """Where a patch came from: frame slot in the tuple, grid cell, jitter."""

    frame: int
    cell_row: int
    cell_col: int
    jitter_y: int
    jitter_x: int


@dataclass(eq=False)
class Patch:
    """Pixel block plus provenance. Raw patches are uint8; normalized float32."""

    pixels: np.ndarray
    source: PatchSource


def crop_frame(image: np.ndarray, spec: GridSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Cut a crop x crop window out of an image.

    The window position is uniform over all valid offsets when an rng is
    given (build mode) and centered when it is None (verify mode).
    """
    if image.ndim < 2:
        raise InvalidArgumentError("image must be at least 2-dimensional")
    h, w = image.shape[:2]
    if h < spec.crop or w < spec.crop:
        raise InvalidArgumentError(f"image {h}x{w} smaller than crop {spec.crop}")
    if rng is None:
        y = (h - spec.crop) // 2
        x = (w - spec.crop) // 2
    else:
        y = int(rng.integers(0, h - spec.crop + 1))
        x = int(rng.integers(0, w - spec.crop + 1))
    return image[y : y + spec.crop, x : x + spec.crop].copy()


def sample_patches(
    crop: np.ndarray,
    spec: GridSpec,
    rng: np.random.Generator | None = None,
    frame: int = 0,
) -> list[Patch]:
    """One jittered patch per grid cell, in row-major cell order.

    Jitter offsets are drawn uniformly from [0, cell - patch] per axis, so
    every patch lies fully inside its own cell; with patch == cell the offsets
    are forced to zero and the patches tile the crop exactly. Without an rng
    the jitter is centered, matching the deterministic verify-mode crop.
    """
    if crop.shape[0] != spec.crop or crop.shape[1] != spec.crop:
        raise InvalidArgumentError(f"expected a {spec.crop}x{spec.crop} crop, got {crop.shape[0]}x{crop.shape[1]}")
    span = spec.jitter_span
    patches = []
    for r in range(spec.grid_rows):
        for c in range(spec.grid_cols):
            if rng is None:
                jy = jx = span // 2
            else:
                jy = int(rng.integers(0, span + 1))
                jx = int(rng.integers(0, span + 1))
            y0 = r * spec.cell + jy
            x0 = c * spec.cell + jx
            pixels = crop[y0 : y0 + spec.patch, x0 : x0 + spec.patch].copy()
            patches.append(Patch(pixels, PatchSource(frame, r, c, jy, jx)))
    return patches


def _to_luma(pixels: np.ndarray) -> np.ndarray:
    if pixels.dtype != np.uint8:
        raise InvalidArgumentError("grayscale projection runs before normalization (raw uint8 input required)")
    if pixels.ndim != 3:
        raise InvalidArgumentError("expected HxWxC pixels")
    channels = pixels.shape[2]
    if channels == 1:
        return pixels.copy()
    if channels != 3:
        raise InvalidArgumentError(f"grayscale projection expects 1 or 3 channels, got {channels}")
    w = np.array(LUMA_WEIGHTS, dtype=np.float64)
    luma = np.rint(pixels.astype(np.float64) @ w).clip(0, 255).astype(np.uint8)
    return np.repeat(luma[:, :, None], channels, axis=2)


def maybe_grayscale(patches: Sequence[Patch], probability: float, rng: np.random.Generator) -> list[Patch]:
    """With the given probability, project ALL patches of the group to luma.

    One decision is drawn per call: callers choose the scope (whole tuple or
    one frame) by what they pass in. Equal input channels are preserved
    exactly, since the luma weights sum to one.
    """
    if not 0.0 <= probability <= 1.0:
        raise InvalidArgumentError(f"probability must be in [0, 1], got {probability}")
    if rng.random() >= probability:
        return list(patches)
    return [Patch(_to_luma(p.pixels), p.source) for p in patches]


def normalize_patch(patch: Patch) -> Patch:
    """Standardize a patch to zero mean and unit standard deviation.

    Statistics are taken jointly over all pixels and channels. Constant
    patches (std below the guard) become all zeros instead of dividing by
    almost-zero. Output is float32; renormalizing an already-normalized patch
    is a no-op up to float rounding.
    """
    x = patch.pixels.astype(np.float64)
    std = float(x.std())
    if std < CONSTANT_STD_GUARD:
        out = np.zeros_like(x, dtype=np.float32)
    else:
        out = ((x - x.mean()) / std).astype(np.float32)
    return Patch(out, patch.source)
