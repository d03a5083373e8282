"""Seeded RNG substreams.

One master seed per experiment; every (trial, grid point, consumer) gets an
independent substream so that adding or reordering consumers never perturbs
the draws seen by the others.
"""

import zlib

import numpy as np


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    return zlib.crc32(str(tag).encode("utf-8"))


def substream(master_seed: int, *tags) -> np.random.Generator:
    """Derive an independent generator from a master seed and a tag path."""
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_to_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))
