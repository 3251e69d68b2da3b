"""Deterministic random substreams.

Every random decision in the package flows through a counter-based Philox
generator keyed by a 64-bit seed plus an arbitrary stream label. Substreams
are independent of each other and of scheduling order, so serial and parallel
runs draw identical values for the same (seed, label) pair.
"""

import hashlib
import struct

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


def substream(seed: int, *stream) -> np.random.Generator:
    """Generator for the substream identified by (seed, *stream).

    Stream labels may be ints or strings; they are hashed into the 128-bit
    Philox key, so any two distinct labels yield unrelated streams while the
    same label always reproduces the same sequence on any platform.
    """
    h = hashlib.blake2b(digest_size=16)
    h.update(struct.pack("<Q", int(seed) & _MASK64))
    for part in stream:
        if isinstance(part, (int, np.integer)):
            h.update(b"i" + struct.pack("<Q", int(part) & _MASK64))
        elif isinstance(part, str):
            h.update(b"s" + part.encode("utf-8") + b"\x00")
        else:
            raise TypeError(f"stream labels must be int or str, got {type(part).__name__}")
    key = np.frombuffer(h.digest(), dtype="<u8").astype(np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
