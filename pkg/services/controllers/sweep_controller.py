# services/controllers/sweep_controller.py

import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import pandas as pd

from services.config.config_loader import resolve_config
from services.errors import ConfigError
from services.export.export import export_table_json, export_to_csv, write_csv
from services.linkmodel.link_model import predict_link

SWEEP_COLUMNS = ['loss_db', 'sift_rate_bps', 'qber', 'secret_rate_bps']


def parse_loss_range(text):
    """
    'A:B:STEP' -> list of loss values A, A+STEP, ... up to and including B.
    """
    parts = text.split(':') if text else []
    if len(parts) != 3:
        raise ConfigError('sweep.loss_range', f"expected A:B:STEP, got '{text}'")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError('sweep.loss_range', f"non-numeric value in '{text}'") from None
    if step <= 0:
        raise ConfigError('sweep.loss_range', "step must be > 0")
    if stop < start:
        raise ConfigError('sweep.loss_range', "range is empty (B < A)")
    if start < 0:
        raise ConfigError('sweep.loss_range', "loss must be >= 0 dB")
    count = math.floor((stop - start) / step + 1e-9) + 1
    return [round(start + i * step, 12) for i in range(count)]


class SweepController:
    """
    Controller behind the `sweep` command: closed-form rates over a loss range.
    """
    def __init__(self, out=sys.stdout):
        self.logger = logging.getLogger('SweepController')  # pylint: disable=no-member
        self.out = out

    def sweep(self, loss_range, preset=None, config_path=None, out_path=None, output_format='csv', workers=1):
        losses = parse_loss_range(loss_range)
        config = resolve_config(preset, config_path)

        def point(loss_db):
            channel = replace(config.channel, loss_db=loss_db)
            return predict_link(config.source, channel, config.receiver, config.distill.f_ec, config.epsilon_sys)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(point, losses))
        else:
            rows = [point(loss) for loss in losses]
        frame = pd.DataFrame([row._asdict() for row in rows], columns=SWEEP_COLUMNS)
        self.logger.info(f"Sweep over {len(losses)} loss values from {losses[0]} to {losses[-1]} dB")

        metadata = {'config': config.to_dict(), 'seed': config.seed, 'loss_range': loss_range}
        if preset:
            metadata['preset'] = preset
        if out_path:
            if output_format == 'json':
                export_table_json(frame, out_path, metadata=metadata)
            else:
                export_to_csv(frame, SWEEP_COLUMNS, out_path, metadata=metadata)
        else:
            write_csv(frame, SWEEP_COLUMNS, self.out, metadata=metadata)
        return frame
