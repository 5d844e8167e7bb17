# services/distill/entropy.py

import math

from services.errors import DistillError


def binary_entropy(q):
    """
    Shannon binary entropy h2(q) in bits, with h2(0) = h2(1) = 0.
    """
    if not 0.0 <= q <= 1.0:
        raise DistillError(f"binary_entropy expects q in [0, 1], got {q}")
    if q == 0.0 or q == 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)
