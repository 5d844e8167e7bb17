# services/config/reference_systems.py

from typing import NamedTuple, Optional


class ReferenceSystem(NamedTuple):
    name: str
    length_km: float
    secret_rate_bps: float
    detector: str
    loss_db: float
    qber: float
    group: str
    family: str


# Field-tested long-range systems; the first two rows are the Kazan lines.
REFERENCE_SYSTEMS = (
    ReferenceSystem('kazan-city-12km', 12, 2e4, 'SPAD', 7, 0.04, 'Russia', 'kazan'),
    ReferenceSystem('kazan-apastovo-143km', 143, 12, 'SSPD', 37, 0.02, 'Russia', 'kazan'),
    ReferenceSystem('geneva-67km', 67, 60, 'SPAD', 14, 0.06, 'Switzerland', 'international'),
    ReferenceSystem('tokyo-45km', 45, 3e5, 'SPAD', 14, 0.04, 'Japan', 'international'),
    ReferenceSystem('trunk-66km', 66, 5e5, 'SPAD', 21, 0.05, 'China', 'international'),
    ReferenceSystem('tokyo-97km', 97, 800, 'SSPD', 33, 0.03, 'Japan', 'international'),
    ReferenceSystem('loopback-90km', 90, 1e3, 'SSPD', 30, 0.03, 'Japan', 'international'),
)


def find_reference(name) -> Optional[ReferenceSystem]:
    for system in REFERENCE_SYSTEMS:
        if system.name == name:
            return system
    return None
