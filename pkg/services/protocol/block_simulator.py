# services/protocol/block_simulator.py

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from services.errors import ProtocolError
from services.linkmodel.link_model import click_probability
from services.protocol.phase_coding import PhaseSymbol
from services.protocol.randomness import StreamPurpose, derive_generator

logger = logging.getLogger('BlockSimulator')  # pylint: disable=no-member

CHUNK_CYCLES = 1 << 26


@dataclass(frozen=True)
class DetectionLog:
    """
    Sparse record of the cycles in which Bob's detector clicked.

    alice_states / bob_states hold PhaseSymbol indices (basis + 2 * bit).
    """
    n_cycles: int
    cycle_index: np.ndarray
    alice_states: np.ndarray
    bob_states: np.ndarray

    def __post_init__(self):
        if not len(self.cycle_index) == len(self.alice_states) == len(self.bob_states):
            raise ProtocolError("Detection log arrays must have equal length")
        if len(self.cycle_index):
            if np.any(np.diff(self.cycle_index) <= 0):
                raise ProtocolError("Detection log cycle indices must be strictly increasing")
            if self.cycle_index[0] < 0 or self.cycle_index[-1] >= self.n_cycles:
                raise ProtocolError(f"Detection log cycle indices must lie in [0, {self.n_cycles})")

    def __len__(self):
        return len(self.cycle_index)

    @property
    def clicks(self):
        """
        (cycle_index, alice_symbol, bob_symbol) tuples in cycle order.
        """
        return [
            (int(c), PhaseSymbol.from_index(a), PhaseSymbol.from_index(b))
            for c, a, b in zip(self.cycle_index, self.alice_states, self.bob_states)
        ]

    @property
    def alice_bases(self):
        return self.alice_states % 2

    @property
    def alice_bits(self):
        return self.alice_states // 2

    @property
    def bob_bases(self):
        return self.bob_states % 2

    @property
    def bob_bits(self):
        return self.bob_states // 2

    @classmethod
    def empty(cls, n_cycles):
        return cls(n_cycles, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.uint8), np.zeros(0, dtype=np.uint8))

    @classmethod
    def from_clicks(cls, n_cycles, clicks):
        """
        Builds a log from (cycle_index, alice_symbol, bob_symbol) tuples.
        """
        if not clicks:
            return cls.empty(n_cycles)
        cycles, alice, bob = zip(*clicks)
        return cls(
            n_cycles,
            np.asarray(cycles, dtype=np.int64),
            np.asarray([s.index for s in alice], dtype=np.uint8),
            np.asarray([s.index for s in bob], dtype=np.uint8),
        )

    def thinned(self, fraction, rng):
        """
        Keeps each click independently with probability `fraction`.
        """
        if fraction >= 1.0 or not len(self):
            return self
        keep = rng.random(len(self)) < fraction
        return DetectionLog(self.n_cycles, self.cycle_index[keep], self.alice_states[keep], self.bob_states[keep])


def state_click_table(budget):
    """
    4x4 click probabilities indexed by (alice_state, bob_state).
    """
    table = np.empty((4, 4), dtype=np.float64)
    for a in range(4):
        for b in range(4):
            table[a, b] = click_probability(budget, (a - b) * math.pi / 2.0)
    return table


def _sample_positions(rng, length, count):
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    if count == length:
        return np.arange(length, dtype=np.int64)
    if 2 * count > length:
        # Sample the complement when most cycles click.
        skipped = rng.choice(length, size=length - count, replace=False)
        mask = np.ones(length, dtype=bool)
        mask[skipped] = False
        return np.flatnonzero(mask).astype(np.int64)
    return np.sort(rng.choice(length, size=count, replace=False)).astype(np.int64)


def _simulate_chunk(weights, p_click, seed, block, chunk, start, length):
    rng = derive_generator(seed, StreamPurpose.CYCLES, block, chunk)
    count = int(rng.binomial(length, p_click)) if p_click > 0 else 0
    positions = _sample_positions(rng, length, count) + start
    states = rng.choice(16, size=count, p=weights) if count else np.zeros(0, dtype=np.int64)
    return positions, (states // 4).astype(np.uint8), (states % 4).astype(np.uint8)


def simulate_block(budget, n_cycles, seed, block=0, workers=1, chunk_cycles=CHUNK_CYCLES):
    """
    Monte Carlo of n_cycles modulation cycles with uniformly random states at both ends.

    Each cycle clicks with probability click_probability(budget, phi_A - phi_B).
    Cycles are cut into fixed chunks with their own derived streams; the clicks of a
    chunk are drawn exactly as a binomial count, uniform distinct positions and
    state pairs weighted by their click probability, so the log is identical for any
    number of workers.
    """
    n_cycles = int(n_cycles)
    if n_cycles < 1:
        raise ProtocolError(f"n_cycles must be >= 1, got {n_cycles}")

    table = state_click_table(budget).ravel()
    p_click = float(table.mean())
    if p_click <= 0.0:
        logger.debug(f"Block {block}: zero click probability, empty log.")
        return DetectionLog.empty(n_cycles)
    weights = table / table.sum()

    n_chunks = math.ceil(n_cycles / chunk_cycles)
    jobs = [(c, c * chunk_cycles, min(chunk_cycles, n_cycles - c * chunk_cycles)) for c in range(n_chunks)]

    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _simulate_chunk(weights, p_click, seed, block, *job), jobs))
    else:
        parts = [_simulate_chunk(weights, p_click, seed, block, *job) for job in jobs]

    log = DetectionLog(
        n_cycles,
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
    )
    logger.debug(f"Block {block}: {len(log)} clicks in {n_cycles} cycles ({n_chunks} chunks).")
    return log
