"""
Seeded random streams for reproducible simulations.

One root seed fans out into independent per-purpose streams, so adding a new
consumer never shifts the draws of an existing one.
"""
from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """
    Purposes that own a random stream.
    """
    DISTANCES = 0
    NOISE = 1
    SUBSAMPLING = 2
    CANDIDATES = 3
    SPLIT = 4
    CALIBRATION = 5


def derive_rng(seed, stream, index=0):
    """
    Build the generator for one purpose (and optional sub-index) of a run.

    Args:
        seed (int): Root seed of the run
        stream (Stream): Purpose of the draws
        index (int): Sub-stream, e.g. a sweep point

    Returns:
        numpy.random.Generator: Independent, deterministic generator
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index)))
    return np.random.default_rng(sequence)
