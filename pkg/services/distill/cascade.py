# services/distill/cascade.py

import logging
import math
from dataclasses import dataclass, field
from typing import List, Protocol, Sequence, Tuple, runtime_checkable

import numpy as np

from services.distill.key_buffer import KeyBuffer, KeyStage
from services.errors import DistillError
from services.protocol.randomness import StreamPurpose, derive_generator

CASCADE_PASSES = 4
MIN_KEY_BITS = 8

# (pass, start, end): a half-open range of positions in that pass's shuffled order.
ParityRange = Tuple[int, int, int]


def initial_block_size(q_est, n):
    if q_est <= 0.0:
        return n
    return min(n, max(MIN_KEY_BITS, int(math.floor(0.73 / q_est + 0.5))))


@runtime_checkable
class ParityOracle(Protocol):
    """
    Answers parity requests over the other party's key, in request order.
    """
    def parities(self, ranges: Sequence[ParityRange]) -> List[int]:
        ...


@dataclass
class ReconciliationReport:
    leaked_bits: int = 0
    passes: int = 0
    corrected_positions: List[int] = field(default_factory=list)
    block_sizes: List[int] = field(default_factory=list)


class CascadeLayout:
    """
    Block sizes and shuffles both parties derive from (n, q, shuffle_seed).

    Pass 0 keeps the natural order; later passes use seeded permutations.
    Block size doubles every pass and is capped at the key length.
    """
    def __init__(self, n, q_est, shuffle_seed, passes=CASCADE_PASSES, first_block_size=None):
        self.n = int(n)
        self.passes = int(passes)
        first = initial_block_size(q_est, self.n) if first_block_size is None else int(first_block_size)
        if not 1 <= first <= self.n:
            raise DistillError(f"First block size {first} must be in [1, {self.n}]")
        self.block_sizes = [min(self.n, first * 2 ** p) for p in range(self.passes)]
        self.permutations = [np.arange(self.n, dtype=np.int64)]
        for p in range(1, self.passes):
            rng = derive_generator(shuffle_seed, StreamPurpose.SHUFFLE, p)
            self.permutations.append(rng.permutation(self.n).astype(np.int64))
        self.positions = []
        for perm in self.permutations:
            inverse = np.empty(self.n, dtype=np.int64)
            inverse[perm] = np.arange(self.n, dtype=np.int64)
            self.positions.append(inverse)

    def block_count(self, pass_index):
        return -(-self.n // self.block_sizes[pass_index])

    def block_range(self, pass_index, block):
        k = self.block_sizes[pass_index]
        return block * k, min(self.n, (block + 1) * k)

    def block_of(self, pass_index, key_index):
        return int(self.positions[pass_index][key_index]) // self.block_sizes[pass_index]

    def top_level_ranges(self, pass_index):
        return [(pass_index, *self.block_range(pass_index, b)) for b in range(self.block_count(pass_index))]

    def range_parity(self, bits, pass_index, start, end):
        return int(bits[self.permutations[pass_index][start:end]].sum()) & 1

    def block_parities(self, bits, pass_index):
        shuffled = bits[self.permutations[pass_index]].astype(np.int64)
        starts = np.arange(0, self.n, self.block_sizes[pass_index])
        return (np.add.reduceat(shuffled, starts) & 1).astype(np.uint8)


class ParityResponder:
    """
    Alice's side: answers parity requests over her key and counts what she disclosed.
    """
    def __init__(self, bits, layout):
        self.bits = np.asarray(bits, dtype=np.uint8)
        self.layout = layout
        self.disclosed = 0

    def parities(self, ranges):
        answers = [self.layout.range_parity(self.bits, p, start, end) for p, start, end in ranges]
        self.disclosed += len(answers)
        return answers


class CascadeReconciler:
    """
    Bob's side of Cascade: asks for block parities, binary-searches odd blocks and
    re-checks earlier passes after every flip.
    """
    def __init__(self, bits, layout: CascadeLayout, oracle: ParityOracle):
        self.bits = np.array(bits, dtype=np.uint8)
        self.layout = layout
        self.oracle = oracle
        self.report = ReconciliationReport(block_sizes=list(layout.block_sizes))
        self.logger = logging.getLogger('CascadeReconciler')  # pylint: disable=no-member

    def run(self):
        error_parity = []
        for p in range(self.layout.passes):
            ranges = self.layout.top_level_ranges(p)
            alice = np.asarray(self.oracle.parities(ranges), dtype=np.uint8)
            self.report.leaked_bits += len(ranges)
            error_parity.append(alice ^ self.layout.block_parities(self.bits, p))
            self._correct_odd_blocks(error_parity)
            self.report.passes += 1
            self.logger.debug(
                f"Pass {p + 1}: block size {self.layout.block_sizes[p]}, "
                f"{len(self.report.corrected_positions)} corrections so far, leaked {self.report.leaked_bits}"
            )
        return self.bits, self.report

    def _next_odd_block(self, error_parity):
        # Earlier passes have the smallest blocks; take the first odd one found.
        for p, parity in enumerate(error_parity):
            odd = np.flatnonzero(parity)
            if len(odd):
                return p, int(odd[0])
        return None

    def _correct_odd_blocks(self, error_parity):
        while True:
            target = self._next_odd_block(error_parity)
            if target is None:
                return
            p, block = target
            position = self._binary_search(p, *self.layout.block_range(p, block))
            self.bits[position] ^= 1
            self.report.corrected_positions.append(int(position))
            for q, parity in enumerate(error_parity):
                parity[self.layout.block_of(q, position)] ^= 1

    def _binary_search(self, pass_index, start, end):
        while end - start > 1:
            mid = (start + end) // 2
            alice = self.oracle.parities([(pass_index, start, mid)])[0]
            self.report.leaked_bits += 1
            if alice != self.layout.range_parity(self.bits, pass_index, start, mid):
                end = mid
            else:
                start = mid
        return int(self.layout.permutations[pass_index][start])


def validate_cascade_inputs(n_a, n_b, q_est):
    if n_a != n_b:
        raise DistillError(f"Key lengths differ: {n_a} != {n_b}")
    if n_a < MIN_KEY_BITS:
        raise DistillError(f"Cascade needs at least {MIN_KEY_BITS} bits, got {n_a}")
    if not 0.0 <= q_est <= 0.25:
        raise DistillError(f"q_est must be in [0, 0.25], got {q_est}")


def cascade_correct(a, b, q_est, seed, passes=CASCADE_PASSES):
    """
    Reconciles Bob's key b against Alice's key a. Alice's key is never modified.
    Returns (b_corrected, ReconciliationReport).
    """
    validate_cascade_inputs(len(a), len(b), q_est)
    layout = CascadeLayout(len(a), q_est, seed, passes)
    responder = ParityResponder(a.to_bits(), layout)
    bits, report = CascadeReconciler(b.to_bits(), layout, responder).run()
    if responder.disclosed != report.leaked_bits:
        raise DistillError(f"Parity accounting mismatch: {responder.disclosed} != {report.leaked_bits}")
    return KeyBuffer.from_bits(bits, KeyStage.RECONCILED), report
