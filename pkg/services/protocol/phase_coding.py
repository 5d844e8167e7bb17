# services/protocol/phase_coding.py

import math
from dataclasses import dataclass

from services.errors import ProtocolError


@dataclass(frozen=True)
class PhaseSymbol:
    """
    One of the four subcarrier phase states: basis * pi/2 + bit * pi.
    """
    basis: int
    bit: int

    def __post_init__(self):
        if self.basis not in (0, 1) or self.bit not in (0, 1):
            raise ProtocolError(f"basis and bit must be 0 or 1, got ({self.basis}, {self.bit})")

    @property
    def index(self):
        # 0..3, the phase in units of pi/2
        return self.basis + 2 * self.bit

    @classmethod
    def from_index(cls, index):
        return cls(basis=int(index) % 2, bit=int(index) // 2)


def encode_phase(symbol):
    return symbol.basis * (math.pi / 2.0) + symbol.bit * math.pi


# All four states in index order.
PHASE_STATES = tuple(PhaseSymbol.from_index(i) for i in range(4))
