# services/protocol/randomness.py

from enum import IntEnum

import numpy as np

GENERATOR_NAME = "numpy.random.Philox via SeedSequence(seed, spawn_key=(purpose, block, chunk))"
SEED_MASK = (1 << 64) - 1


class StreamPurpose(IntEnum):
    """
    Independent random streams derived from one 64-bit seed.
    """
    CYCLES = 1
    THINNING = 2
    SAMPLING = 3
    SHUFFLE = 4
    HASH = 5
    FINGERPRINT = 6
    TEST_ERRORS = 7
    BLOCK = 8


def derive_generator(seed, purpose, *keys):
    """
    Counter-based generator for (seed, purpose, *keys); identical inputs give
    identical streams, distinct inputs give independent ones.
    """
    sequence = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=(int(purpose), *map(int, keys)))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed, purpose, *keys):
    """
    A 64-bit integer seed, for values that travel in messages (shuffle and hash seeds).
    """
    sequence = np.random.SeedSequence(int(seed) & SEED_MASK, spawn_key=(int(purpose), *map(int, keys)))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
