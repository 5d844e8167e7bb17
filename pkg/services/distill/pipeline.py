# services/distill/pipeline.py

import logging
from dataclasses import dataclass, field
from typing import Optional

from services.distill.cascade import MIN_KEY_BITS, ReconciliationReport, cascade_correct
from services.distill.estimation import estimate_qber_sampled, sample_positions, sample_size
from services.distill.key_buffer import KeyBuffer, KeyStage
from services.distill.privacy import hash_seed_bits, secret_length, toeplitz_hash
from services.distill.verify import verify_keys
from services.errors import QberAbortError

logger = logging.getLogger('DistillPipeline')  # pylint: disable=no-member

ABORT_QBER = 'qber'
ABORT_TOO_SHORT = 'too_short'


@dataclass
class DistillOutcome:
    input_bits: int
    sampled_bits: int = 0
    q_est: Optional[float] = None
    reconciled_bits: int = 0
    report: ReconciliationReport = field(default_factory=ReconciliationReport)
    secret_bits: int = 0
    alice_secret: KeyBuffer = field(default_factory=lambda: KeyBuffer.empty(KeyStage.SECRET))
    bob_secret: KeyBuffer = field(default_factory=lambda: KeyBuffer.empty(KeyStage.SECRET))
    verified: bool = False
    aborted: bool = False
    abort_reason: Optional[str] = None
    measured_qber: Optional[float] = None


def too_short_to_distill(n, params):
    """
    True when n sifted bits leave Cascade fewer than MIN_KEY_BITS after sampling.
    """
    return n - sample_size(n, params.sample_fraction) < MIN_KEY_BITS


def distill_keys(a, b, params, seed, cascade_qber=None):
    """
    Sampled estimation, Cascade, secret-length accounting, Toeplitz hashing and
    verification of one pair of sifted keys.

    cascade_qber, when given, sizes Cascade's blocks instead of the sampled estimate.
    Keys too short to sample and reconcile end as an abort with no secret bits.
    """
    outcome = DistillOutcome(input_bits=len(a))
    if too_short_to_distill(len(a), params):
        logger.warning(f"Distillation aborted: {len(a)} sifted bits are too few to sample and reconcile.")
        outcome.aborted = True
        outcome.abort_reason = ABORT_TOO_SHORT
        return outcome
    try:
        q_est, a_rest, b_rest = estimate_qber_sampled(a, b, params, seed)
    except QberAbortError as e:
        logger.warning(f"Distillation aborted: {e}")
        outcome.aborted = True
        outcome.abort_reason = ABORT_QBER
        outcome.q_est = e.q_est
        outcome.sampled_bits = len(sample_positions(len(a), params.sample_fraction, seed))
        return outcome

    outcome.q_est = q_est
    outcome.sampled_bits = len(a) - len(a_rest)
    outcome.reconciled_bits = len(a_rest)
    sample_errors = round(q_est * outcome.sampled_bits)

    sizing_qber = q_est if cascade_qber is None else cascade_qber
    b_fixed, report = cascade_correct(a_rest, b_rest, min(sizing_qber, 0.25), seed, params.cascade_passes)
    outcome.report = report
    outcome.measured_qber = (sample_errors + len(report.corrected_positions)) / len(a)

    length = secret_length(len(a_rest), q_est, report.leaked_bits, params)
    seed_bits = hash_seed_bits(len(a_rest), length, seed)
    alice_secret = toeplitz_hash(a_rest.with_stage(KeyStage.RECONCILED), seed_bits, length)
    bob_secret = toeplitz_hash(b_fixed, seed_bits, length)
    outcome.verified = verify_keys(alice_secret, bob_secret, seed)
    if outcome.verified:
        outcome.secret_bits = length
        outcome.alice_secret = alice_secret
        outcome.bob_secret = bob_secret
    else:
        logger.warning(f"Secret keys of {length} bits failed verification; discarded.")
    logger.info(
        f"Distilled {len(a)} bits: q_est={q_est:.4f}, leaked={report.leaked_bits}, "
        f"secret={outcome.secret_bits}, verified={outcome.verified}"
    )
    return outcome
