# services/protocol/sifting.py

import logging
from dataclasses import dataclass

import numpy as np

from services.distill.key_buffer import KeyBuffer, KeyStage
from services.errors import ProtocolError

logger = logging.getLogger('Sifting')  # pylint: disable=no-member


@dataclass(frozen=True)
class SiftResult:
    alice_key: KeyBuffer
    bob_key: KeyBuffer
    kept_indices: np.ndarray

    def __post_init__(self):
        if not len(self.alice_key) == len(self.bob_key) == len(self.kept_indices):
            raise ProtocolError("Sifted keys and kept indices must have equal length")


def matching_bases(alice_bases, bob_bases):
    """
    Positions (into the announced click list) where both parties used the same basis.
    """
    return np.flatnonzero(np.asarray(alice_bases) == np.asarray(bob_bases))


def sift(log):
    """
    Keeps clicks where the bases match; Alice's bit is the one she encoded,
    Bob's bit is the bit of his modulator setting.
    """
    kept = matching_bases(log.alice_bases, log.bob_bases)
    alice_key = KeyBuffer.from_bits(log.alice_bits[kept], KeyStage.SIFTED)
    bob_key = KeyBuffer.from_bits(log.bob_bits[kept], KeyStage.SIFTED)
    logger.debug(f"Sifted {len(kept)} of {len(log)} clicks.")
    return SiftResult(alice_key, bob_key, log.cycle_index[kept])


def measured_qber(a, b):
    if len(a) != len(b):
        raise ProtocolError(f"Key lengths differ: {len(a)} != {len(b)}")
    if not len(a):
        raise ProtocolError("QBER of empty keys is undefined")
    return a.hamming_distance(b) / len(a)
