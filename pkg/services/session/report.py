# services/session/report.py

import json
import logging
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np
import pandas as pd

from services.errors import ScwQkdError

logger = logging.getLogger('SessionReport')  # pylint: disable=no-member


@dataclass(frozen=True)
class BlockResult:
    """
    One block of a session. qber is the measured error fraction of the distilled
    buffer (None when nothing was distilled); secret_bits counts verified bits only.
    """
    block_index: int
    clicks: int
    sifted_bits: int
    distilled_bits: int
    carried_bits: int
    qber: Optional[float]
    q_est: Optional[float]
    leaked_bits: int
    secret_bits: int
    aborted: bool
    verified: bool

    def __post_init__(self):
        if self.qber is not None and not 0.0 <= self.qber <= 1.0:
            raise ScwQkdError(f"Block {self.block_index}: qber {self.qber} outside [0, 1]")
        if self.secret_bits > max(self.sifted_bits, self.distilled_bits):
            raise ScwQkdError(f"Block {self.block_index}: more secret bits than sifted bits")

    @property
    def empty(self):
        return self.qber is None


BLOCK_COLUMNS = [f.name for f in fields(BlockResult)]


def _histogram(values, bins):
    values = np.asarray(values, dtype=np.float64)
    upper = float(values.max()) if len(values) else 0.0
    counts, edges = np.histogram(values, bins=bins, range=(0.0, upper if upper > 0.0 else 1.0))
    return {'edges': [float(e) for e in edges], 'counts': [int(c) for c in counts]}


class SessionReport:
    """
    Block-wise results of a session with totals, summary statistics and histograms.
    Serializes to JSON without timestamps so identical runs give identical files.
    """
    def __init__(self, blocks, block_seconds, metadata=None, histogram_bins=20):
        self.blocks = list(blocks)
        self.block_seconds = float(block_seconds)
        self.metadata = dict(metadata or {})
        self.histogram_bins = histogram_bins

    def to_frame(self):
        frame = pd.DataFrame([asdict(b) for b in self.blocks], columns=BLOCK_COLUMNS)
        frame = frame.astype({'qber': 'float64', 'q_est': 'float64', 'aborted': bool, 'verified': bool})
        frame['secret_rate_bps'] = frame['secret_bits'] / self.block_seconds
        frame['sift_rate_bps'] = frame['sifted_bits'] / self.block_seconds
        return frame

    @property
    def duration_s(self):
        return self.block_seconds * len(self.blocks)

    @property
    def total_secret_bits(self):
        return int(sum(b.secret_bits for b in self.blocks))

    @property
    def non_empty(self):
        return [b for b in self.blocks if not b.empty]

    def qber_series(self):
        return [b.qber for b in self.non_empty]

    def secret_rate_series(self):
        return [b.secret_bits / self.block_seconds for b in self.blocks]

    def histograms(self):
        return {
            'qber': _histogram(self.qber_series(), self.histogram_bins),
            'secret_rate_bps': _histogram(self.secret_rate_series(), self.histogram_bins),
        }

    def summary(self):
        frame = self.to_frame()
        qber = frame['qber'].dropna()
        duration = self.duration_s

        def stat(series, how):
            return None if series.empty else float(getattr(series, how)())

        return {
            'n_blocks': len(self.blocks),
            'non_empty_blocks': int(len(qber)),
            'aborted_blocks': int(frame['aborted'].sum()),
            'unverified_blocks': int(((frame['distilled_bits'] > 0) & ~frame['aborted'] & ~frame['verified']).sum()),
            'duration_s': duration,
            'total_clicks': int(frame['clicks'].sum()),
            'total_sifted_bits': int(frame['sifted_bits'].sum()),
            'total_leaked_bits': int(frame['leaked_bits'].sum()),
            'total_secret_bits': self.total_secret_bits,
            'mean_sift_rate_bps': float(frame['sifted_bits'].sum()) / duration if duration else 0.0,
            'mean_secret_rate_bps': self.total_secret_bits / duration if duration else 0.0,
            'min_secret_rate_bps': stat(frame['secret_rate_bps'], 'min'),
            'max_secret_rate_bps': stat(frame['secret_rate_bps'], 'max'),
            'mean_qber': stat(qber, 'mean'),
            'min_qber': stat(qber, 'min'),
            'max_qber': stat(qber, 'max'),
        }

    def to_dict(self):
        return {
            'metadata': self.metadata,
            'blocks': [asdict(b) for b in self.blocks],
            'summary': self.summary(),
            'histograms': self.histograms(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + '\n'

    @classmethod
    def from_json(cls, text):
        document = json.loads(text)
        metadata = document.get('metadata', {})
        blocks = [BlockResult(**{k: b[k] for k in BLOCK_COLUMNS}) for b in document['blocks']]
        summary = document['summary']
        block_seconds = summary['duration_s'] / summary['n_blocks'] if summary['n_blocks'] else 0.0
        return cls(blocks, block_seconds, metadata, histogram_bins=metadata.get('histogram_bins', 20))
