# services/distill/verify.py

import numpy as np

from services.distill.key_buffer import KeyBuffer
from services.distill.privacy import toeplitz_hash
from services.errors import DistillError
from services.protocol.randomness import StreamPurpose, derive_generator

FINGERPRINT_BITS = 64


def fingerprint(key, seed):
    """
    64-bit Toeplitz fingerprint; two distinct keys of equal length collide with
    probability 2^-64 over the choice of seed.
    """
    bits = key.to_bits()
    if len(bits) < FINGERPRINT_BITS:
        bits = np.concatenate([bits, np.zeros(FINGERPRINT_BITS - len(bits), dtype=np.uint8)])
    rng = derive_generator(seed, StreamPurpose.FINGERPRINT)
    matrix_seed = rng.integers(0, 2, size=len(bits) + FINGERPRINT_BITS - 1, dtype=np.uint8)
    digest = toeplitz_hash(KeyBuffer.from_bits(bits), matrix_seed, FINGERPRINT_BITS)
    return int(digest.words[0])


def verify_keys(a, b, seed=0):
    """
    True iff the keys are bit-identical. Compares the exchanged fingerprints and,
    since both keys are local in simulation, the full keys as well.
    """
    if a.stage != b.stage:
        raise DistillError(f"Cannot compare keys at stages {a.stage.name} and {b.stage.name}")
    if len(a) != len(b):
        return False
    if not len(a):
        return True
    return fingerprint(a, seed) == fingerprint(b, seed) and a == b
