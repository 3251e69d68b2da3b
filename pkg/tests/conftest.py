import numpy as np
import pytest

from vjig.pipeline import GridSpec, Patch, PatchSource


@pytest.fixture(scope="session")
def tiny_grid():
    """A fast geometry for record-level tests: 8px crop, 2x2 cells of 4, 2px patches."""
    return GridSpec(crop=8, grid_rows=2, grid_cols=2, patch=2)


def make_canonical_patches(rng, n_p=4, n_f=3, grid_rows=2, grid_cols=2, size=2, channels=3):
    """Synthetic canonical-order patches with consistent sources."""
    patches = []
    for frame in range(n_f):
        for r in range(grid_rows):
            for c in range(grid_cols):
                pixels = rng.integers(0, 256, (size, size, channels), dtype=np.uint8)
                patches.append(Patch(pixels, PatchSource(frame, r, c, 0, 0)))
    assert len(patches) == n_p * n_f
    return patches
