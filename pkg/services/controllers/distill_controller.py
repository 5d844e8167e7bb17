# services/controllers/distill_controller.py

import logging
import sys

from data.log_parsers.DETECTION.log_parsers_detection import read_detection_log
from services.config.config_loader import resolve_config
from services.distill.pipeline import ABORT_TOO_SHORT, distill_keys
from services.export.export import export_keys
from services.protocol.sifting import sift


class DistillController:
    """
    Controller behind the `distill` command: replays distillation over a recorded log.
    """
    def __init__(self, out=sys.stdout):
        self.logger = logging.getLogger('DistillController')  # pylint: disable=no-member
        self.out = out

    def distill(self, log_path, out_path=None, preset=None, config_path=None, seed=None):
        config = resolve_config(preset, config_path, seed)
        with open(log_path, 'r', encoding='utf-8') as file_obj:
            log, log_metadata = read_detection_log(file_obj)
        sifted = sift(log)
        self.logger.info(f"Replaying {len(sifted.alice_key)} sifted bits from {log_path}")

        outcome = distill_keys(sifted.alice_key, sifted.bob_key, config.distill, config.seed)
        if out_path:
            metadata = {'config': config.to_dict(), 'seed': config.seed, 'log': log_metadata,
                        'verified': outcome.verified, 'aborted': outcome.aborted,
                        'abort_reason': outcome.abort_reason}
            keys = [outcome.alice_secret] if outcome.verified and len(outcome.alice_secret) else []
            export_keys(keys, out_path, metadata=metadata)

        print(f"Distilled {outcome.input_bits} sifted bits from {len(log)} clicks", file=self.out)
        if outcome.abort_reason == ABORT_TOO_SHORT:
            print(f"  aborted: {outcome.input_bits} sifted bits are too few to sample and reconcile", file=self.out)
            return outcome
        if outcome.aborted:
            print(f"  aborted: q_est {outcome.q_est:.4f} above {config.distill.qber_abort}", file=self.out)
            return outcome
        print(f"  q_est:         {outcome.q_est:.4f}", file=self.out)
        print(f"  sampled bits:  {outcome.sampled_bits}", file=self.out)
        print(f"  leaked bits:   {outcome.report.leaked_bits} over {outcome.report.passes} passes", file=self.out)
        print(f"  corrected:     {len(outcome.report.corrected_positions)}", file=self.out)
        print(f"  secret bits:   {outcome.secret_bits}", file=self.out)
        print(f"  verified:      {outcome.verified}", file=self.out)
        return outcome
