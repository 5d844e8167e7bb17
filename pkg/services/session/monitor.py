# services/session/monitor.py

import logging
import math
from typing import NamedTuple, Optional

import pandas as pd

from services.config.reference_systems import REFERENCE_SYSTEMS
from services.errors import ScwQkdError
from services.linkmodel.link_model import SourceConfig, sideband_photons_per_cycle

logger = logging.getLogger('SessionMonitor')  # pylint: disable=no-member

# Published figures of the 143 km field run.
PUBLISHED_KEY_BITS = 7.0e5
PUBLISHED_DURATION_S = 16.5 * 3600
PUBLISHED_RATE_BPS = 12.0
PUBLISHED_PHOTONS_PER_CYCLE = 0.2
PUBLISHED_KEYS_PER_MINUTE = 2

ARITHMETIC_TOLERANCE = 0.02
SESSION_RATE_TOLERANCE = 0.20
PHOTON_BUDGET_RANGE = (0.19, 0.21)

PASS, FAIL, NOT_APPLICABLE = 'pass', 'fail', 'not applicable'


class ConsistencyCheck(NamedTuple):
    name: str
    status: str
    expected: Optional[float]
    observed: Optional[float]
    detail: str


def stability_monitor(report, low=0.005, high=0.035):
    """
    Indices of non-empty blocks whose QBER lies outside [low, high].
    """
    blocks = report.non_empty
    if not blocks:
        logger.warning("Stability monitor called on a session without non-empty blocks.")
    return [b.block_index for b in blocks if not low <= b.qber <= high]


def keys_per_minute(secret_rate_bps, key_bits=256):
    if secret_rate_bps < 0:
        raise ScwQkdError(f"secret rate must be >= 0, got {secret_rate_bps}")
    return math.floor(secret_rate_bps * 60.0 / key_bits)


def _session_source(report):
    source = report.metadata.get('config', {}).get('source')
    return SourceConfig(**source) if source else SourceConfig()


def consistency_report(report):
    """
    Cross-checks of the published run's own arithmetic and of this session
    against it: bits/duration, photon budget and keys per minute.
    """
    if not report.non_empty:
        return [
            ConsistencyCheck(name, NOT_APPLICABLE, None, None, "session has no non-empty blocks")
            for name in ('bits/duration', 'photon budget', 'keys per minute')
        ]

    checks = []
    published_rate = PUBLISHED_KEY_BITS / PUBLISHED_DURATION_S
    session_rate = report.summary()['mean_secret_rate_bps']
    arithmetic_ok = abs(published_rate - PUBLISHED_RATE_BPS) <= ARITHMETIC_TOLERANCE * PUBLISHED_RATE_BPS
    session_ok = abs(session_rate - PUBLISHED_RATE_BPS) <= SESSION_RATE_TOLERANCE * PUBLISHED_RATE_BPS
    checks.append(ConsistencyCheck(
        'bits/duration',
        PASS if arithmetic_ok and session_ok else FAIL,
        PUBLISHED_RATE_BPS,
        session_rate,
        f"{PUBLISHED_KEY_BITS:.1e} bits / {PUBLISHED_DURATION_S:.0f} s = {published_rate:.2f} bps; "
        f"session {session_rate:.2f} bps",
    ))

    photons = sideband_photons_per_cycle(_session_source(report))
    low, high = PHOTON_BUDGET_RANGE
    checks.append(ConsistencyCheck(
        'photon budget',
        PASS if low <= photons <= high else FAIL,
        PUBLISHED_PHOTONS_PER_CYCLE,
        photons,
        f"{photons:.4f} photons per cycle in the sideband",
    ))

    per_minute = keys_per_minute(session_rate)
    checks.append(ConsistencyCheck(
        'keys per minute',
        PASS if per_minute == PUBLISHED_KEYS_PER_MINUTE else FAIL,
        PUBLISHED_KEYS_PER_MINUTE,
        per_minute,
        f"{per_minute} 256-bit keys per minute"
        + ("" if per_minute == PUBLISHED_KEYS_PER_MINUTE else f", deviates from {PUBLISHED_KEYS_PER_MINUTE}"),
    ))
    for check in checks:
        logger.info(f"Consistency check '{check.name}': {check.status} ({check.detail})")
    return checks


def compare_reference(report=None, loss_db=None, secret_rate_bps=None, qber=None):
    """
    The reference systems table, with this session's (or a prediction's) loss,
    secret rate and QBER alongside each row.
    """
    if report is not None:
        summary = report.summary()
        loss_db = report.metadata.get('config', {}).get('channel', {}).get('loss_db', loss_db)
        secret_rate_bps = summary['mean_secret_rate_bps']
        qber = summary['mean_qber']

    frame = pd.DataFrame([system._asdict() for system in REFERENCE_SYSTEMS])
    frame['session_loss_db'] = loss_db
    frame['session_secret_rate_bps'] = secret_rate_bps
    frame['session_qber'] = qber
    if secret_rate_bps is not None:
        frame['rate_ratio'] = secret_rate_bps / frame['secret_rate_bps']
    frame['same_loss'] = frame['loss_db'] == loss_db if loss_db is not None else False
    return frame
