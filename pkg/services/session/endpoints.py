# services/session/endpoints.py

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from services.distill.cascade import CascadeLayout, CascadeReconciler, ParityResponder, initial_block_size
from services.distill.estimation import sample_positions
from services.distill.key_buffer import KeyBuffer, KeyStage
from services.distill.privacy import hash_seed_bits, secret_length, toeplitz_hash
from services.distill.verify import fingerprint
from services.errors import ChannelError, ProtocolError
from services.protocol.randomness import StreamPurpose, derive_seed
from services.session.messages import Message

MAX_SIZING_QBER = 0.25


@dataclass(frozen=True)
class PartyView:
    """
    What one party holds after a block: the clicked cycles and its own states there.
    """
    n_cycles: int
    cycle_index: np.ndarray
    states: np.ndarray

    def states_at(self, cycles):
        cycles = np.asarray(cycles, dtype=np.int64)
        idx = np.searchsorted(self.cycle_index, cycles)
        if np.any(idx >= len(self.cycle_index)) or np.any(self.cycle_index[idx] != cycles):
            raise ProtocolError("Announced cycles are not part of this block")
        return self.states[idx]


def split_log(log):
    """
    Alice's and Bob's views of a detection log.
    """
    return (
        PartyView(log.n_cycles, log.cycle_index, log.alice_states),
        PartyView(log.n_cycles, log.cycle_index, log.bob_states),
    )


@dataclass
class PartyBlockOutcome:
    sifted_bits: int = 0
    distilled_bits: int = 0
    carried_bits: int = 0
    sampled_bits: int = 0
    sample_errors: int = 0
    q_est: Optional[float] = None
    measured_qber: Optional[float] = None
    leaked_bits: int = 0
    corrected_bits: int = 0
    secret: KeyBuffer = field(default_factory=lambda: KeyBuffer.empty(KeyStage.SECRET))
    fingerprint_match: bool = False
    aborted: bool = False


def _sift(own_states, other_bases):
    kept = (own_states % 2) == np.asarray(other_bases, dtype=np.uint8)
    return KeyBuffer.from_bits(own_states[kept] // 2, KeyStage.SIFTED)


class AliceEndpoint:
    """
    Alice reacts to Bob's messages. Everything she learns about Bob's side arrives
    through the channel.
    """
    def __init__(self, port, params, min_block_bits):
        self.port = port
        self.params = params
        self.min_block_bits = min_block_bits
        self.logger = logging.getLogger(self.__class__.__name__)  # pylint: disable=no-member
        self.outcomes = {}
        self.error = None
        self._views = {}
        self._pending = KeyBuffer.empty(KeyStage.SIFTED)
        self._work = {}
        self._handlers = {
            'basis_announce': self._on_basis_announce,
            'sample_indices': self._on_sample_indices,
            'abort': self._on_abort,
            'shuffle_seed': self._on_shuffle_seed,
            'parity_request': self._on_parity_request,
            'hash_seed': self._on_hash_seed,
            'fingerprint': self._on_fingerprint,
        }

    def load_block(self, block, view):
        self._views[block] = view

    def handle(self, message):
        handler = self._handlers.get(message.type)
        if handler is None:
            raise ProtocolError(f"Alice cannot handle '{message.type}'")
        handler(message)

    def serve_pending(self):
        """
        Handles every message already queued for Alice (interleaved schedule).
        """
        for message in self.port.pending():
            self.handle(message)

    def serve_forever(self):
        """
        Handles messages until the channel closes (concurrent schedule).
        """
        while True:
            try:
                message = self.port.receive(timeout=None)
            except ChannelError:
                return
            try:
                self.handle(message)
            except Exception as e:  # pylint: disable=broad-except
                self.logger.error(f"Alice failed on '{message.type}' of block {message.block}: {e}")
                self.error = e
                self.port.close()
                return

    def _on_basis_announce(self, message):
        view = self._views.pop(message.block)
        states = view.states_at(message.get('cycles'))
        sifted = _sift(states, message.get('bases'))
        self._pending = self._pending.concat(sifted)
        outcome = PartyBlockOutcome(sifted_bits=len(sifted))
        if len(self._pending) < self.min_block_bits:
            outcome.carried_bits = len(self._pending)
            self.outcomes[message.block] = outcome
        else:
            self._work[message.block] = {'outcome': outcome}
        self.port.send(Message.make('basis_announce', message.block, bases=states % 2))

    def _on_sample_indices(self, message):
        work = self._work[message.block]
        positions = np.asarray(message.get('indices'), dtype=np.int64)
        own = self._pending.take(positions)
        errors = own.hamming_distance(KeyBuffer.from_bits(message.get('bits'), KeyStage.SIFTED))
        outcome = work['outcome']
        outcome.distilled_bits = len(self._pending)
        outcome.sampled_bits = len(positions)
        outcome.sample_errors = errors
        outcome.q_est = errors / len(positions)
        work['remainder'] = self._pending.drop(positions).with_stage(KeyStage.ESTIMATED)
        self._pending = KeyBuffer.empty(KeyStage.SIFTED)
        self.port.send(Message.make('sample_bits', message.block, bits=own.to_bits()))

    def _on_abort(self, message):
        outcome = self._work.pop(message.block)['outcome']
        outcome.aborted = True
        outcome.measured_qber = outcome.q_est
        self.outcomes[message.block] = outcome
        self.port.send(Message.make('abort', message.block))

    def _on_shuffle_seed(self, message):
        work = self._work[message.block]
        remainder = work['remainder']
        layout = CascadeLayout(
            len(remainder), 0.0, message.get('seed')[0],
            passes=message.get('passes')[0], first_block_size=message.get('block_size')[0],
        )
        work['responder'] = ParityResponder(remainder.to_bits(), layout)

    def _on_parity_request(self, message):
        responder = self._work[message.block]['responder']
        ranges = list(zip(message.get('pass'), message.get('start'), message.get('end')))
        parities = responder.parities(ranges)
        self.port.send(Message.make('parity_response', message.block, parities=parities))

    def _on_hash_seed(self, message):
        work = self._work[message.block]
        remainder, outcome = work['remainder'], work['outcome']
        leaked = work['responder'].disclosed
        length = secret_length(len(remainder), outcome.q_est, leaked, self.params)
        if length != message.get('length')[0]:
            raise ProtocolError(f"Block {message.block}: secret length {length} != announced {message.get('length')[0]}")
        seed_bits = hash_seed_bits(len(remainder), length, message.get('seed')[0])
        outcome.leaked_bits = leaked
        outcome.secret = toeplitz_hash(remainder.with_stage(KeyStage.RECONCILED), seed_bits, length)

    def _on_fingerprint(self, message):
        outcome = self._work.pop(message.block)['outcome']
        value = fingerprint(outcome.secret, message.get('seed')[0])
        outcome.fingerprint_match = value == message.get('value')[0]
        self.outcomes[message.block] = outcome
        self.port.send(Message.make('fingerprint', message.block, value=[value]))


class RemoteParityOracle:
    """
    Bob's view of Alice's parities: one parity_request / parity_response round trip per call.
    """
    def __init__(self, bob, block):
        self.bob = bob
        self.block = block

    def parities(self, ranges):
        passes, starts, ends = zip(*ranges)
        self.bob.port.send(Message.make('parity_request', self.block, **{'pass': passes, 'start': starts, 'end': ends}))
        answers = self.bob.expect('parity_response', self.block).get('parities')
        if len(answers) != len(ranges):
            raise ProtocolError(f"Asked for {len(ranges)} parities, got {len(answers)}")
        return list(answers)


class BobEndpoint:
    """
    Bob drives every block: basis announcement, sampling, Cascade, hashing and the
    fingerprint exchange.
    """
    def __init__(self, port, params, min_block_bits, seed):
        self.port = port
        self.params = params
        self.min_block_bits = min_block_bits
        self.seed = seed
        self.logger = logging.getLogger(self.__class__.__name__)  # pylint: disable=no-member
        self._pending = KeyBuffer.empty(KeyStage.SIFTED)

    def expect(self, type_, block):
        message = self.port.receive()
        if message.type != type_ or message.block != block:
            raise ProtocolError(f"Expected '{type_}' for block {block}, got '{message.type}' for block {message.block}")
        return message

    def sizing_qber(self, q_est, sampled_bits, tracked_qber):
        """
        QBER used to size Cascade's first pass: the running session mean when there
        is one, else the sample estimate, else the rule-of-three bound 3 / sample size.
        Only block sizes follow it; abort and secret length always use this block's q_est.
        """
        if tracked_qber is not None and tracked_qber > 0.0:
            q = tracked_qber
        elif q_est > 0.0:
            q = q_est
        else:
            q = 3.0 / sampled_bits
        return min(q, MAX_SIZING_QBER)

    def run_block(self, block, view, tracked_qber=None):
        outcome = PartyBlockOutcome()
        self.port.send(Message.make('basis_announce', block, cycles=view.cycle_index, bases=view.states % 2))
        reply = self.expect('basis_announce', block)
        sifted = _sift(view.states, reply.get('bases'))
        outcome.sifted_bits = len(sifted)
        self._pending = self._pending.concat(sifted)
        if len(self._pending) < self.min_block_bits:
            outcome.carried_bits = len(self._pending)
            self.logger.debug(f"Block {block}: {len(self._pending)} sifted bits carried forward.")
            return outcome

        key = self._pending
        self._pending = KeyBuffer.empty(KeyStage.SIFTED)
        outcome.distilled_bits = len(key)
        block_seed = derive_seed(self.seed, StreamPurpose.BLOCK, block)

        positions = sample_positions(len(key), self.params.sample_fraction, block_seed)
        own = key.take(positions)
        self.port.send(Message.make('sample_indices', block, indices=positions, bits=own.to_bits()))
        alice_sample = KeyBuffer.from_bits(self.expect('sample_bits', block).get('bits'), KeyStage.SIFTED)
        outcome.sampled_bits = len(positions)
        outcome.sample_errors = own.hamming_distance(alice_sample)
        outcome.q_est = outcome.sample_errors / len(positions)
        if outcome.q_est > self.params.qber_abort:
            self.logger.warning(f"Block {block}: q_est {outcome.q_est:.4f} above {self.params.qber_abort}; aborted.")
            self.port.send(Message.make('abort', block))
            self.expect('abort', block)
            outcome.aborted = True
            outcome.measured_qber = outcome.q_est
            return outcome

        remainder = key.drop(positions).with_stage(KeyStage.ESTIMATED)
        sizing = self.sizing_qber(outcome.q_est, len(positions), tracked_qber)
        first = initial_block_size(sizing, len(remainder))
        shuffle_seed = derive_seed(block_seed, StreamPurpose.SHUFFLE)
        self.port.send(Message.make(
            'shuffle_seed', block, seed=[shuffle_seed], block_size=[first], passes=[self.params.cascade_passes]
        ))
        layout = CascadeLayout(len(remainder), sizing, shuffle_seed, self.params.cascade_passes, first_block_size=first)
        bits, report = CascadeReconciler(remainder.to_bits(), layout, RemoteParityOracle(self, block)).run()
        outcome.leaked_bits = report.leaked_bits
        outcome.corrected_bits = len(report.corrected_positions)
        outcome.measured_qber = (outcome.sample_errors + outcome.corrected_bits) / len(key)

        length = secret_length(len(remainder), outcome.q_est, report.leaked_bits, self.params)
        hash_seed = derive_seed(block_seed, StreamPurpose.HASH)
        self.port.send(Message.make('hash_seed', block, seed=[hash_seed], length=[length]))
        outcome.secret = toeplitz_hash(
            KeyBuffer.from_bits(bits, KeyStage.RECONCILED), hash_seed_bits(len(remainder), length, hash_seed), length
        )

        fingerprint_seed = derive_seed(block_seed, StreamPurpose.FINGERPRINT)
        value = fingerprint(outcome.secret, fingerprint_seed)
        self.port.send(Message.make('fingerprint', block, value=[value], seed=[fingerprint_seed]))
        outcome.fingerprint_match = self.expect('fingerprint', block).get('value')[0] == value
        self.logger.debug(
            f"Block {block}: {len(key)} bits, q_est={outcome.q_est:.4f}, leaked={report.leaked_bits}, "
            f"secret={length}, fingerprint_match={outcome.fingerprint_match}"
        )
        return outcome
