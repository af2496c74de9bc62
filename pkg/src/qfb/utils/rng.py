"""
Counter-based random streams.

Every Monte-Carlo stage draws from a stream keyed by (master seed, stage tag,
batch index). Streams are Philox generators seeded from a SeedSequence whose
spawn key encodes the tag and index, so a given batch always sees the same
numbers no matter which worker thread runs it.
"""

import zlib

import numpy as np

MAX_SEED = 2**64 - 1


def tag_key(tag: str) -> int:
    """Stable 32-bit key for a stage tag."""
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """
    Return the generator for one (seed, tag, index) cell.

    Args:
        seed: Master seed, 0 <= seed < 2**64
        tag: Stage name, e.g. "reset-sweep/theta=3"
        index: Batch (or shot) index within the stage

    Raises:
        ValueError: If seed or index is out of range
    """
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if index < 0:
        raise ValueError(f"index must be non-negative, got {index}")

    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(tag_key(tag), index))
    return np.random.Generator(np.random.Philox(sequence))
