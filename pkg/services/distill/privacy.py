# services/distill/privacy.py

import logging
import math

import numpy as np

from services.distill.entropy import binary_entropy
from services.distill.key_buffer import KeyBuffer, KeyStage
from services.errors import DistillError
from services.protocol.randomness import StreamPurpose, derive_generator

logger = logging.getLogger('PrivacyAmplification')  # pylint: disable=no-member


def pa_overhead_bits(epsilon_pa):
    return 2.0 * math.log2(1.0 / epsilon_pa)


def secret_length(n_remaining, q_est, leaked_bits, params):
    """
    floor(n * (1 - h2(q)) - leaked - 2 * log2(1 / epsilon_pa)), clamped to [0, n].
    """
    if n_remaining < 0:
        raise DistillError(f"n_remaining must be >= 0, got {n_remaining}")
    if n_remaining == 0:
        return 0
    length = math.floor(n_remaining * (1.0 - binary_entropy(q_est)) - leaked_bits
                        - pa_overhead_bits(params.epsilon_pa))
    return max(0, min(n_remaining, length))


def hash_seed_bits(n, out_len, seed):
    """
    The n + out_len - 1 random bits that define the Toeplitz matrix.
    """
    rng = derive_generator(seed, StreamPurpose.HASH)
    return rng.integers(0, 2, size=max(0, n + out_len - 1), dtype=np.uint8)


def toeplitz_hash(key, hash_seed, out_len):
    """
    Output bit i is the GF(2) product of row i of the Toeplitz matrix
    M[i][j] = hash_seed[i - j + n - 1] with the key.

    The product is a convolution, computed with a real FFT and rounded back
    to integers before reducing mod 2.
    """
    n = len(key)
    if out_len == 0:
        return KeyBuffer.empty(KeyStage.SECRET)
    if out_len < 0 or out_len > n:
        raise DistillError(f"Output length {out_len} must be in [0, {n}]")
    seed_bits = hash_seed.to_bits() if isinstance(hash_seed, KeyBuffer) else np.asarray(hash_seed, dtype=np.uint8)
    if len(seed_bits) != n + out_len - 1:
        raise DistillError(f"Toeplitz seed needs {n + out_len - 1} bits, got {len(seed_bits)}")

    size = 1 << (len(seed_bits) + n - 1).bit_length()
    spectrum = np.fft.rfft(seed_bits.astype(np.float64), n=size) * np.fft.rfft(key.to_bits().astype(np.float64), n=size)
    convolution = np.fft.irfft(spectrum, n=size)
    window = np.rint(convolution[n - 1:n - 1 + out_len]).astype(np.int64)
    out = (window & 1).astype(np.uint8)
    logger.debug(f"Toeplitz hash {n} -> {out_len} bits.")
    return KeyBuffer.from_bits(out, KeyStage.SECRET)
