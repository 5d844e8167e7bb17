# services/distill/params.py

from dataclasses import dataclass

from services.errors import ConfigError


@dataclass(frozen=True)
class DistillParams:
    """
    Classical post-processing parameters.

    epsilon_pa = 1e-10 matches the key failure probability quoted for
    comparable field systems; f_ec only enters the closed-form rate.
    """
    sample_fraction: float = 0.1
    f_ec: float = 1.15
    epsilon_pa: float = 1e-10
    qber_abort: float = 0.11
    cascade_passes: int = 4

    def __post_init__(self):
        if not 0.0 < self.sample_fraction <= 0.5:
            raise ConfigError('distill.sample_fraction', "must be in (0, 0.5]")
        if self.f_ec < 1.0:
            raise ConfigError('distill.f_ec', "must be >= 1")
        if not 0.0 < self.epsilon_pa < 1.0:
            raise ConfigError('distill.epsilon_pa', "must be in (0, 1)")
        if not 0.0 <= self.qber_abort <= 0.25:
            raise ConfigError('distill.qber_abort', "must be in [0, 0.25]")
        if self.cascade_passes < 1:
            raise ConfigError('distill.cascade_passes', "must be >= 1")
