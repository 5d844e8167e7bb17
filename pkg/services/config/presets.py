# services/config/presets.py

import logging
from dataclasses import dataclass, field, replace
from typing import Tuple

from services.config.session_config import SessionConfig
from services.distill.params import DistillParams
from services.errors import ConfigError
from services.linkmodel.link_model import (
    ChannelConfig, ReceiverConfig, build_link_budget, calibrate_epsilon_sys, calibrate_visibility,
)

logger = logging.getLogger('Presets')  # pylint: disable=no-member


@dataclass(frozen=True)
class ScenarioPreset:
    """
    A named SessionConfig. `calibrated` fields were fitted to a published rate or
    QBER; `assumed` fields are stand-ins for values that were never published.
    """
    name: str
    description: str
    config: SessionConfig
    reference: str
    calibrated: Tuple[str, ...] = field(default_factory=tuple)
    assumed: Tuple[str, ...] = field(default_factory=tuple)

    def flag(self, field_name):
        if field_name in self.calibrated:
            return 'calibrated'
        if field_name in self.assumed:
            return 'assumed'
        return ''


def _apastovo_143km():
    config = SessionConfig(
        epsilon_sys=0.068,
        distill=DistillParams(sample_fraction=0.05),
    )
    return ScenarioPreset(
        name='kazan-apastovo-143km',
        description='Kazan-Apastovo intercity line, 143 km, 37 dB, SSPD, 16.5 h',
        config=config,
        reference='kazan-apastovo-143km',
        calibrated=('receiver.visibility', 'session.epsilon_sys'),
        assumed=('distill.sample_fraction', 'session.block_cycles'),
    )


def _city_12km():
    channel = ChannelConfig(loss_db=7.0, length_km=12.0)
    receiver = ReceiverConfig(detector_efficiency=0.1, dark_count_rate=500.0)
    base = SessionConfig(block_cycles=100_000_000, n_blocks=60, channel=channel, receiver=receiver)
    budget = build_link_budget(base.source, channel, receiver)
    receiver = replace(receiver, visibility=calibrate_visibility(budget, 0.04))
    budget = build_link_budget(base.source, channel, receiver)
    epsilon_sys = calibrate_epsilon_sys(budget, base.source.repetition_rate, base.distill.f_ec, 2e4)
    return ScenarioPreset(
        name='kazan-city-12km',
        description='Kazan city network link, 12 km, 7 dB, SPAD (hardware values not published)',
        config=replace(base, receiver=receiver, epsilon_sys=epsilon_sys),
        reference='kazan-city-12km',
        calibrated=('receiver.visibility', 'session.epsilon_sys'),
        assumed=('receiver.detector_efficiency', 'receiver.dark_count_rate', 'session.block_cycles'),
    )


PRESETS = {preset.name: preset for preset in (_apastovo_143km(), _city_12km())}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError('session.preset', f"unknown preset '{name}'; available: {', '.join(sorted(PRESETS))}") from None
