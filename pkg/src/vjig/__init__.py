"""vjig: video-frame jigsaw puzzle dataset generation.

Builds pretext-task training data from pre-extracted video frames: samples
diverse permutation sets over patch indices, cuts jittered patch grids out of
frame tuples, shuffles them, and exports the result as checksummed binary
shards plus a human-readable manifest.
"""

__version__ = "0.1.0"

from .errors import (
    CapacityError,
    ChecksumError,
    FormatError,
    InvalidArgumentError,
    StalePermutationError,
    VerificationError,
    VjigError,
)
from .perm_core import DiversityStats, Permutation, PermutationSet, diversity, hamming, is_block_coherent

__all__ = [
    "CapacityError",
    "ChecksumError",
    "DiversityStats",
    "FormatError",
    "InvalidArgumentError",
    "Permutation",
    "PermutationSet",
    "StalePermutationError",
    "VerificationError",
    "VjigError",
    "diversity",
    "hamming",
    "is_block_coherent",
    "__version__",
]
