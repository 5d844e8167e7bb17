# services/linkmodel/link_model.py

import logging
import math
from dataclasses import dataclass, asdict
from typing import NamedTuple, Optional

from services.distill.entropy import binary_entropy
from services.errors import ConfigError, LinkModelError

logger = logging.getLogger('LinkModel')  # pylint: disable=no-member

PLANCK_CONSTANT = 6.62607015e-34  # J*s, exact SI
SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact SI
CLAMP_TOLERANCE = 1e-9


def _require(condition, field, message):
    if not condition:
        raise ConfigError(field, message)


@dataclass(frozen=True)
class SourceConfig:
    """
    Alice's laser, amplitude modulator and phase modulator.

    modulation_index is the fraction of optical power moved into the two
    first-order sidebands, not a phase-modulation depth.
    pulse_width and subcarrier_frequency are documentation only.
    """
    repetition_rate: float = 1.0e8
    pulse_width: float = 2.5e-9
    output_power: float = 79.3e-12
    wavelength: float = 1.55e-6
    modulation_index: float = 0.033
    subcarrier_frequency: float = 4.8e9

    def __post_init__(self):
        _require(self.repetition_rate > 0, 'source.repetition_rate', "must be > 0")
        _require(self.pulse_width > 0, 'source.pulse_width', "must be > 0")
        _require(self.pulse_width <= 1.0 / self.repetition_rate, 'source.pulse_width',
                 "must not exceed the cycle period 1/repetition_rate")
        _require(self.output_power >= 0, 'source.output_power', "must be >= 0")
        _require(self.wavelength > 0, 'source.wavelength', "must be > 0")
        _require(0.0 <= self.modulation_index <= 1.0, 'source.modulation_index', "must be in [0, 1]")
        _require(self.subcarrier_frequency > 0, 'source.subcarrier_frequency', "must be > 0")


@dataclass(frozen=True)
class ChannelConfig:
    loss_db: float = 37.0
    length_km: float = 143.0

    def __post_init__(self):
        _require(self.loss_db >= 0, 'channel.loss_db', "must be >= 0")
        _require(self.length_km >= 0, 'channel.length_km', "must be >= 0")


@dataclass(frozen=True)
class ReceiverConfig:
    """
    Bob's chain: polarization controller, phase modulator, notch filter, detector.

    visibility is a model parameter; 0.96 reproduces the ~2% QBER of the 143 km line.
    """
    sideband_selection_loss_db: float = 3.0
    insertion_loss_db: float = 0.0
    detector_efficiency: float = 0.5
    dark_count_rate: float = 0.5
    visibility: float = 0.96

    def __post_init__(self):
        _require(self.sideband_selection_loss_db >= 0, 'receiver.sideband_selection_loss_db', "must be >= 0")
        _require(self.insertion_loss_db >= 0, 'receiver.insertion_loss_db', "must be >= 0")
        _require(0.0 <= self.detector_efficiency <= 1.0, 'receiver.detector_efficiency', "must be in [0, 1]")
        _require(self.dark_count_rate >= 0, 'receiver.dark_count_rate', "must be >= 0")
        _require(0.0 <= self.visibility <= 1.0, 'receiver.visibility', "must be in [0, 1]")


@dataclass(frozen=True)
class LinkBudget:
    """
    Per-cycle quantities every probability formula reads.
    """
    mu_sideband: float
    transmittance: float
    mu_detected: float
    p_dark: float
    visibility: float

    def __post_init__(self):
        if self.mu_sideband < 0 or self.mu_detected < 0 or self.transmittance < 0:
            raise LinkModelError(f"Link budget quantities must be nonnegative: {self}")
        if not 0.0 <= self.p_dark <= 1.0:
            raise LinkModelError(f"p_dark must be in [0, 1], got {self.p_dark}")
        if not 0.0 <= self.visibility <= 1.0:
            raise LinkModelError(f"visibility must be in [0, 1], got {self.visibility}")

    @property
    def average_click_probability(self):
        return self.p_dark + self.mu_detected / 2.0

    @property
    def sift_probability(self):
        # Basis-matched click fraction under uniform choices of both parties.
        return (2.0 * self.p_dark + self.mu_detected) / 4.0

    def to_dict(self):
        return asdict(self)


class LinkPrediction(NamedTuple):
    loss_db: float
    sift_rate_bps: float
    qber: Optional[float]
    secret_rate_bps: float


class DetectionRates(NamedTuple):
    click_rate: float
    sift_rate: float
    dark_rate: float


def photons_per_cycle(source):
    """
    Mean photon number per modulation cycle at Alice's output (carrier + sidebands).
    """
    photon_energy = PLANCK_CONSTANT * SPEED_OF_LIGHT / source.wavelength
    return source.output_power / (photon_energy * source.repetition_rate)


def sideband_photons_per_cycle(source):
    return photons_per_cycle(source) * source.modulation_index


def transmittance(loss_db):
    if loss_db < 0:
        raise LinkModelError(f"Loss must be >= 0 dB, got {loss_db}")
    return 10.0 ** (-loss_db / 10.0)


def build_link_budget(source, channel, receiver):
    """
    Chains source power, fiber loss, sideband selection, Bob's insertion loss and
    detector efficiency into per-cycle detection probabilities.
    """
    mu = sideband_photons_per_cycle(source)
    t_line = transmittance(channel.loss_db)
    mu_detected = (mu * t_line
                   * transmittance(receiver.sideband_selection_loss_db)
                   * transmittance(receiver.insertion_loss_db)
                   * receiver.detector_efficiency)
    p_dark = receiver.dark_count_rate / source.repetition_rate
    if p_dark >= 1.0:
        raise ConfigError('receiver.dark_count_rate', "dark-count probability per cycle must be < 1")
    budget = LinkBudget(
        mu_sideband=mu,
        transmittance=t_line,
        mu_detected=mu_detected,
        p_dark=p_dark,
        visibility=receiver.visibility,
    )
    logger.debug(f"Link budget: mu={mu:.6g}, T={t_line:.6g}, mu'={mu_detected:.6g}, p_dark={p_dark:.3g}")
    return budget


def _clamp_probability(value, what):
    if value < 0.0 or value > 1.0:
        if value < -CLAMP_TOLERANCE or value > 1.0 + CLAMP_TOLERANCE:
            logger.warning(f"{what} = {value:.6g} clamped to [0, 1]; the configuration is unphysical.")
        return min(1.0, max(0.0, value))
    return value


def click_probability(budget, delta_phi):
    """
    Detector click probability for one cycle with phase difference delta_phi
    between Alice's and Bob's modulators.
    """
    p = budget.p_dark + budget.mu_detected * (1.0 + budget.visibility * math.cos(delta_phi)) / 2.0
    return _clamp_probability(p, "click probability")


def analytic_qber(budget):
    """
    Error fraction among basis-matched clicks.
    """
    denominator = 2.0 * budget.p_dark + budget.mu_detected
    if denominator <= 0.0:
        raise LinkModelError("QBER is undefined for a budget with no signal and no dark counts")
    numerator = budget.p_dark + budget.mu_detected * (1.0 - budget.visibility) / 2.0
    return numerator / denominator


def analytic_rates(budget, repetition_rate, f_ec=1.15, epsilon_sys=1.0):
    """
    Closed-form (sift_rate, secret_rate) in bits per second.
    """
    if f_ec < 1.0:
        raise LinkModelError(f"f_ec must be >= 1, got {f_ec}")
    if not 0.0 < epsilon_sys <= 1.0:
        raise LinkModelError(f"epsilon_sys must be in (0, 1], got {epsilon_sys}")
    sift_rate = repetition_rate * budget.sift_probability * epsilon_sys
    if sift_rate == 0.0:
        return 0.0, 0.0
    h = binary_entropy(analytic_qber(budget))
    secret_rate = sift_rate * max(0.0, 1.0 - h - f_ec * h)
    return sift_rate, secret_rate


def detection_rates(budget, repetition_rate):
    return DetectionRates(
        click_rate=repetition_rate * budget.average_click_probability,
        sift_rate=repetition_rate * budget.sift_probability,
        dark_rate=repetition_rate * budget.p_dark,
    )


def predict_link(source, channel, receiver, f_ec=1.15, epsilon_sys=1.0):
    budget = build_link_budget(source, channel, receiver)
    sift_rate, secret_rate = analytic_rates(budget, source.repetition_rate, f_ec, epsilon_sys)
    qber = analytic_qber(budget) if sift_rate > 0 else None
    return LinkPrediction(channel.loss_db, sift_rate, qber, secret_rate)


def calibrate_visibility(budget, target_qber):
    """
    Visibility that makes analytic_qber equal target_qber for this budget.
    """
    if budget.mu_detected <= 0.0:
        raise LinkModelError("Cannot calibrate visibility without signal photons")
    denominator = 2.0 * budget.p_dark + budget.mu_detected
    visibility = 1.0 - 2.0 * (target_qber * denominator - budget.p_dark) / budget.mu_detected
    if not 0.0 <= visibility <= 1.0:
        raise LinkModelError(f"QBER {target_qber} is not reachable with these dark counts")
    return visibility


def calibrate_epsilon_sys(budget, repetition_rate, f_ec, target_secret_rate):
    _, ideal = analytic_rates(budget, repetition_rate, f_ec, 1.0)
    if ideal <= 0.0:
        raise LinkModelError("Idealized secret rate is zero; nothing to calibrate")
    epsilon = target_secret_rate / ideal
    if not 0.0 < epsilon <= 1.0:
        raise LinkModelError(f"Target {target_secret_rate} bps exceeds the idealized {ideal:.3f} bps")
    return epsilon
