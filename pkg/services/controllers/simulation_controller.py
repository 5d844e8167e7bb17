# services/controllers/simulation_controller.py

import logging
import sys

from tqdm import tqdm

from data.log_parsers.DETECTION.log_parsers_detection import write_detection_log
from services.config.config_loader import dumps_config, resolve_config
from services.config.presets import PRESETS, get_preset
from services.errors import ConfigError
from services.export.export import export_report_json, export_to_csv
from services.linkmodel.link_model import build_link_budget, detection_rates, predict_link
from services.session.monitor import compare_reference, consistency_report, keys_per_minute, stability_monitor
from services.session.report import BLOCK_COLUMNS
from services.session.session_runner import simulate_session_block
from services.session.session_worker import SessionWorker


class SimulationController:
    """
    Controller behind the `simulate`, `presets` and `reference` commands.
    """
    def __init__(self, out=sys.stdout):
        self.logger = logging.getLogger('SimulationController')  # pylint: disable=no-member
        self.out = out

    def _print(self, text=''):
        print(text, file=self.out)

    def simulate(self, preset=None, config_path=None, seed=None, n_blocks=None, out_path=None,
                 output_format='json', log_out=None, schedule='interleaved', workers=1, progress=True):
        config = resolve_config(preset, config_path, seed, n_blocks)
        self.logger.info(f"Resolved config:\n{dumps_config(config)}")

        worker = SessionWorker(config, schedule=schedule, workers=workers)
        with tqdm(total=config.n_blocks, unit='block', file=sys.stderr, disable=not progress, leave=False) as bar:
            worker.signals.progress.connect(lambda done, total, result: bar.update(1))
            worker.run()
        if worker.exception is not None:
            raise worker.exception
        report = worker.report
        if preset:
            report.metadata['preset'] = preset

        if out_path:
            if output_format == 'csv':
                export_to_csv(report.to_frame(), BLOCK_COLUMNS + ['sift_rate_bps', 'secret_rate_bps'],
                              out_path, metadata=report.metadata)
            else:
                export_report_json(report, out_path)
        if log_out:
            budget = build_link_budget(config.source, config.channel, config.receiver)
            log = simulate_session_block(config, budget, 0, workers)
            with open(log_out, 'w', encoding='utf-8', newline='\n') as file_obj:
                write_detection_log(file_obj, log, metadata={'seed': config.seed, 'block': 0})
            self.logger.info(f"Wrote detection log of block 0 to {log_out}")

        self._print_summary(config, report, preset)
        return report

    def _print_summary(self, config, report, preset):
        summary = report.summary()
        prediction = predict_link(config.source, config.channel, config.receiver,
                                  config.distill.f_ec, config.epsilon_sys)
        rates = detection_rates(build_link_budget(config.source, config.channel, config.receiver),
                                config.source.repetition_rate)
        mean_qber = summary['mean_qber']
        self._print(f"Session: {summary['n_blocks']} blocks, {summary['duration_s']:.0f} s, seed {config.seed}")
        self._print(f"  mean QBER:          {'n/a' if mean_qber is None else f'{mean_qber:.4f}'}")
        self._print(f"  mean secret rate:   {summary['mean_secret_rate_bps']:.3f} bps")
        self._print(f"  total secret bits:  {summary['total_secret_bits']}")
        self._print(f"  total sifted bits:  {summary['total_sifted_bits']}")
        self._print(f"  aborted blocks:     {summary['aborted_blocks']}")
        self._print(f"  keys per minute:    {keys_per_minute(summary['mean_secret_rate_bps'])}")
        self._print(f"  analytic prediction: sift {prediction.sift_rate_bps:.3f} bps, "
                    f"secret {prediction.secret_rate_bps:.3f} bps, click rate {rates.click_rate:.1f} /s")
        if report.non_empty:
            outside = stability_monitor(report)
            self._print(f"  QBER outside [0.5%, 3.5%]: {len(outside)} of {len(report.non_empty)} blocks")
        for check in consistency_report(report):
            self._print(f"  check {check.name}: {check.status} ({check.detail})")
        if preset:
            flags = get_preset(preset)
            self._print(f"  calibrated: {', '.join(flags.calibrated)}; assumed: {', '.join(flags.assumed)}")

    def list_presets(self):
        for preset in PRESETS.values():
            self._print(f"{preset.name}: {preset.description}")
            for section in ('session', 'channel', 'receiver', 'distill'):
                for key, value in preset.config.section(section).items():
                    flag = preset.flag(f"{section}.{key}")
                    self._print(f"    {section}.{key} = {value}" + (f"  [{flag}]" if flag else ""))
        return list(PRESETS)

    def reference(self, preset=None, config_path=None):
        config = resolve_config(preset, config_path)
        prediction = predict_link(config.source, config.channel, config.receiver,
                                  config.distill.f_ec, config.epsilon_sys)
        if prediction.sift_rate_bps == 0:
            raise ConfigError('channel.loss_db', "link delivers no photons; nothing to compare")
        frame = compare_reference(loss_db=config.channel.loss_db, secret_rate_bps=prediction.secret_rate_bps,
                                  qber=prediction.qber)
        self._print(frame.to_string(index=False))
        return frame
