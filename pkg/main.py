# main.py

import argparse
import logging
import sys

from services.controllers.distill_controller import DistillController
from services.controllers.simulation_controller import SimulationController
from services.controllers.sweep_controller import SweepController
from services.errors import ConfigError, MalformedLogError
from services.logging.logging_config import setup_logging

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_MALFORMED = 4


def exception_hook(exc_type, exc_value, exc_traceback):
    logging.critical("Uncaught exception", exc_info=(exc_type, exc_value, exc_traceback))  # pylint: disable=no-member
    sys.__excepthook__(exc_type, exc_value, exc_traceback)


def build_parser():
    parser = argparse.ArgumentParser(prog='scwqkd', description='Subcarrier-wave QKD link simulator and key distillation.')
    parser.add_argument('--log-level', default='WARNING', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='Console log level (the log file always records DEBUG).')
    parser.add_argument('--log-dir', default=None, help='Directory for application.log (default ./logs).')
    commands = parser.add_subparsers(dest='command', required=True)

    def add_config_flags(sub):
        sub.add_argument('--preset', help='Built-in scenario preset.')
        sub.add_argument('--config', help='INI config file, applied over the preset.')

    simulate = commands.add_parser('simulate', help='Run a block-wise session.')
    add_config_flags(simulate)
    simulate.add_argument('--seed', type=int)
    simulate.add_argument('--blocks', type=int, help='Override n_blocks.')
    simulate.add_argument('--out', help='Report file.')
    simulate.add_argument('--format', choices=['json', 'csv'], default='json')
    simulate.add_argument('--log-out', help='Also write block 0 as a scwqkd-log v1 detection log.')
    simulate.add_argument('--schedule', choices=['interleaved', 'concurrent'], default='interleaved')
    simulate.add_argument('--workers', type=int, default=1)
    simulate.add_argument('--no-progress', action='store_true')

    sweep = commands.add_parser('sweep', help='Closed-form rates over a loss range.')
    add_config_flags(sweep)
    sweep.add_argument('--loss-range', required=True, help='A:B:STEP in dB.')
    sweep.add_argument('--out', help='Output file (stdout when omitted).')
    sweep.add_argument('--format', choices=['json', 'csv'], default='csv')
    sweep.add_argument('--workers', type=int, default=1)

    distill = commands.add_parser('distill', help='Distill keys from a recorded detection log.')
    add_config_flags(distill)
    distill.add_argument('log', help='scwqkd-log v1 file.')
    distill.add_argument('--seed', type=int)
    distill.add_argument('--out', help='Key file (hex lines).')

    commands.add_parser('presets', help='List built-in presets.')

    reference = commands.add_parser('reference', help='Reference systems table against a prediction.')
    add_config_flags(reference)
    return parser


def dispatch(args, out=sys.stdout):
    if args.command == 'simulate':
        SimulationController(out).simulate(
            preset=args.preset, config_path=args.config, seed=args.seed, n_blocks=args.blocks,
            out_path=args.out, output_format=args.format, log_out=args.log_out,
            schedule=args.schedule, workers=args.workers, progress=not args.no_progress,
        )
    elif args.command == 'sweep':
        SweepController(out).sweep(
            args.loss_range, preset=args.preset, config_path=args.config,
            out_path=args.out, output_format=args.format, workers=args.workers,
        )
    elif args.command == 'distill':
        DistillController(out).distill(
            args.log, out_path=args.out, preset=args.preset, config_path=args.config, seed=args.seed,
        )
    elif args.command == 'presets':
        SimulationController(out).list_presets()
    elif args.command == 'reference':
        SimulationController(out).reference(preset=args.preset, config_path=args.config)


def main(argv=None, out=sys.stdout):
    args = build_parser().parse_args(argv)
    setup_logging(getattr(logging, args.log_level), args.log_dir)
    logger = logging.getLogger('Main')
    logger.info(f"Starting command '{args.command}'.")
    try:
        dispatch(args, out)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MalformedLogError as e:
        logger.error(f"Malformed input: {e}")
        print(f"error: malformed log: {e}", file=sys.stderr)
        return EXIT_MALFORMED
    except OSError as e:
        logger.error(f"I/O error: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except Exception as e:  # pylint: disable=broad-except
        logger.error(f"Command '{args.command}' failed: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    logger.info(f"Command '{args.command}' finished.")
    return EXIT_OK


if __name__ == "__main__":
    sys.excepthook = exception_hook
    sys.exit(main())
