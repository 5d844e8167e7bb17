# services/session/session_runner.py

import logging
import threading

from services.distill.verify import verify_keys
from services.errors import ChannelError, ConfigError, ProtocolError
from services.linkmodel.link_model import build_link_budget
from services.protocol.block_simulator import simulate_block
from services.protocol.randomness import GENERATOR_NAME, StreamPurpose, derive_generator
from services.session.channels import InProcessChannel, SocketChannel, Transcript
from services.session.endpoints import AliceEndpoint, BobEndpoint, split_log
from services.session.report import BlockResult, SessionReport

INTERLEAVED = 'interleaved'
CONCURRENT = 'concurrent'
SCHEDULES = (INTERLEAVED, CONCURRENT)
TRANSPORTS = ('queue', 'socket')


def simulate_session_block(config, budget, block, workers=1):
    """
    Detection log of one session block after epsilon_sys thinning.
    """
    log = simulate_block(budget, config.block_cycles, config.seed, block=block, workers=workers)
    return log.thinned(config.epsilon_sys, derive_generator(config.seed, StreamPurpose.THINNING, block))


class SessionRunner:
    """
    Runs Alice and Bob block by block: simulate, thin by epsilon_sys, then the
    classical conversation Bob drives over the channel.
    """
    def __init__(self, config, schedule=INTERLEAVED, transport='queue', workers=1, retain_transcript=False):
        if schedule not in SCHEDULES:
            raise ConfigError('session.schedule', f"must be one of {', '.join(SCHEDULES)}")
        if transport not in TRANSPORTS:
            raise ConfigError('session.transport', f"must be one of {', '.join(TRANSPORTS)}")
        if transport == 'socket' and schedule != CONCURRENT:
            raise ConfigError('session.schedule', "the socket transport needs the concurrent schedule")
        self.config = config
        self.schedule = schedule
        self.transport = transport
        self.workers = workers
        self.transcript = Transcript(retain=retain_transcript)
        self.logger = logging.getLogger('SessionRunner')  # pylint: disable=no-member

    def _open_channel(self):
        if self.transport == 'socket':
            return SocketChannel(self.transcript)
        return InProcessChannel(self.transcript)

    def metadata(self):
        return {
            'config': self.config.to_dict(),
            'seed': self.config.seed,
            'generator': GENERATOR_NAME,
            'histogram_bins': self.config.histogram_bins,
        }

    def run(self, progress_callback=None, interruption_flag=None):
        config = self.config
        budget = build_link_budget(config.source, config.channel, config.receiver)
        channel = self._open_channel()
        alice = AliceEndpoint(channel.alice, config.distill, config.min_block_bits)
        bob = BobEndpoint(channel.bob, config.distill, config.min_block_bits, config.seed)
        self.logger.info(
            f"Session start: {config.n_blocks} blocks of {config.block_cycles} cycles, seed {config.seed}, "
            f"{self.schedule} schedule over {self.transport}"
        )

        alice_thread = None
        if self.schedule == CONCURRENT:
            alice_thread = threading.Thread(target=alice.serve_forever, name='alice-endpoint', daemon=True)
            alice_thread.start()
        else:
            channel.bob.on_idle = alice.serve_pending

        results = []
        measured = []
        try:
            for block in range(config.n_blocks):
                if interruption_flag is not None and interruption_flag():
                    self.logger.info(f"Session interrupted after {block} blocks.")
                    break
                tracked = sum(measured) / len(measured) if measured else None
                result = self._run_block(block, budget, alice, bob, tracked)
                if result.verified and result.qber is not None:
                    measured.append(result.qber)
                results.append(result)
                if progress_callback is not None:
                    progress_callback(block + 1, config.n_blocks, result)
        finally:
            channel.bob.close()
            if alice_thread is not None:
                alice_thread.join(timeout=5.0)
            if isinstance(channel, SocketChannel):
                channel.alice.close()

        report = SessionReport(results, config.block_seconds, self.metadata(), config.histogram_bins)
        summary = report.summary()
        self.logger.info(
            f"Session finished: {summary['total_secret_bits']} secret bits in {summary['duration_s']:.0f} s, "
            f"mean rate {summary['mean_secret_rate_bps']:.3f} bps"
        )
        return report

    def _run_block(self, block, budget, alice, bob, tracked):
        config = self.config
        log = simulate_session_block(config, budget, block, self.workers)
        alice_view, bob_view = split_log(log)
        alice.load_block(block, alice_view)
        try:
            ours = bob.run_block(block, bob_view, tracked)
        except ChannelError as e:
            if alice.error is not None:
                raise alice.error from e
            raise
        theirs = alice.outcomes.pop(block)

        distilled = ours.distilled_bits > 0 and not ours.aborted
        verified = False
        if distilled:
            if self.transcript.parity_bits(block) != ours.leaked_bits or theirs.leaked_bits != ours.leaked_bits:
                raise ProtocolError(
                    f"Block {block}: transcript shows {self.transcript.parity_bits(block)} parity bits, "
                    f"Cascade reported {ours.leaked_bits}"
                )
            verified = (ours.fingerprint_match and theirs.fingerprint_match
                        and verify_keys(theirs.secret, ours.secret, config.seed))
            if not verified:
                self.logger.warning(f"Block {block}: keys failed verification; {len(ours.secret)} bits discarded.")

        return BlockResult(
            block_index=block,
            clicks=len(log),
            sifted_bits=ours.sifted_bits,
            distilled_bits=ours.distilled_bits,
            carried_bits=ours.carried_bits,
            qber=ours.measured_qber,
            q_est=ours.q_est,
            leaked_bits=ours.leaked_bits,
            secret_bits=len(ours.secret) if verified else 0,
            aborted=ours.aborted,
            verified=verified,
        )


def run_session(config, schedule=INTERLEAVED, transport='queue', workers=1):
    return SessionRunner(config, schedule=schedule, transport=transport, workers=workers).run()
