# services/distill/estimation.py

import logging
import math
from typing import NamedTuple

import numpy as np

from services.distill.key_buffer import KeyStage
from services.errors import DistillError, QberAbortError
from services.protocol.randomness import StreamPurpose, derive_generator

logger = logging.getLogger('QberEstimation')  # pylint: disable=no-member


class SampleEstimate(NamedTuple):
    q_est: float
    a_remainder: object
    b_remainder: object


def sample_size(n, sample_fraction):
    return math.ceil(sample_fraction * n)


def sample_positions(n, sample_fraction, seed):
    """
    Sorted sample positions both parties derive from the shared seed.
    """
    size = sample_size(n, sample_fraction)
    if n < 2 or size < 1 or size >= n:
        raise DistillError(f"Key of {n} bits is too short to sample a fraction of {sample_fraction}")
    rng = derive_generator(seed, StreamPurpose.SAMPLING)
    return np.sort(rng.choice(n, size=size, replace=False))


def check_abort(q_est, params):
    if q_est > params.qber_abort:
        raise QberAbortError(q_est, params.qber_abort)


def estimate_qber_sampled(a, b, params, seed):
    """
    Discloses a random sample of both keys, returns the mismatch fraction over the
    sample and the keys with the sample removed.
    """
    if len(a) != len(b):
        raise DistillError(f"Key lengths differ: {len(a)} != {len(b)}")
    positions = sample_positions(len(a), params.sample_fraction, seed)
    mismatches = a.take(positions).hamming_distance(b.take(positions))
    q_est = mismatches / len(positions)
    logger.debug(f"Sampled {len(positions)} of {len(a)} bits, {mismatches} mismatches, q_est={q_est:.4f}")
    check_abort(q_est, params)
    a_rest = a.drop(positions).with_stage(KeyStage.ESTIMATED)
    b_rest = b.drop(positions).with_stage(KeyStage.ESTIMATED)
    return SampleEstimate(q_est, a_rest, b_rest)
