# services/config/session_config.py

import math
from dataclasses import asdict, dataclass, field, replace

from services.distill.params import DistillParams
from services.errors import ConfigError
from services.linkmodel.link_model import ChannelConfig, ReceiverConfig, SourceConfig

SECTIONS = ('source', 'channel', 'receiver', 'distill', 'session')


@dataclass(frozen=True)
class SessionConfig:
    """
    Everything a session run depends on. Sections mirror the config file.

    block_cycles defaults to 60 s of line time at 100 MHz; 990 blocks span 16.5 h.
    min_block_bits: sifted bits below this are carried into the next block.
    """
    block_cycles: int = 6_000_000_000
    n_blocks: int = 990
    seed: int = 0
    epsilon_sys: float = 1.0
    min_block_bits: int = 64
    histogram_bins: int = 20
    source: SourceConfig = field(default_factory=SourceConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)
    distill: DistillParams = field(default_factory=DistillParams)

    def __post_init__(self):
        if self.block_cycles < 1:
            raise ConfigError('session.block_cycles', "block_cycles must be ≥ 1")
        if self.n_blocks < 1:
            raise ConfigError('session.n_blocks', "n_blocks must be ≥ 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError('session.seed', "seed must be a 64-bit unsigned integer")
        if not 0.0 < self.epsilon_sys <= 1.0:
            raise ConfigError('session.epsilon_sys', "epsilon_sys must be in (0, 1]")
        if self.histogram_bins < 1:
            raise ConfigError('session.histogram_bins', "histogram_bins must be ≥ 1")
        remaining = self.min_block_bits - math.ceil(self.distill.sample_fraction * self.min_block_bits)
        if remaining < 8:
            raise ConfigError(
                'session.min_block_bits',
                f"min_block_bits leaves {remaining} bits after sampling; Cascade needs at least 8",
            )

    @property
    def block_seconds(self):
        return self.block_cycles / self.source.repetition_rate

    @property
    def duration_s(self):
        return self.block_cycles * self.n_blocks / self.source.repetition_rate

    def section(self, name):
        """
        Field values of one config file section.
        """
        if name == 'session':
            return {k: v for k, v in asdict(self).items() if k not in SECTIONS}
        return asdict(getattr(self, name))

    def to_dict(self):
        return {name: self.section(name) for name in SECTIONS}

    def with_overrides(self, **changes):
        return replace(self, **changes)
