#!/usr/bin/env python3
"""
Command Line Interface

Subcommands:
    run <config>                      run one configuration, write trace.csv + manifest.txt
    verify <which> [--samples N] [--seed S] [--report out.json]
    sweep <config> --seeds s1,s2,...  one run per seed plus summary.csv
    replay <manifest>                 re-run a manifest exactly

Exit codes: 0 ok, 1 export/IO failure, 2 configuration error,
3 divergence, 4 verification did not pass.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from experiment_runner import VERIFY_SELECTORS, ExperimentRunner, default_output_dir
from models.run_config import RunConfig
from utils.config_parser import parse_key_value_file
from utils.exceptions import (ConfigError, DivergenceError, ExportError, GraphConstructionError,
                              InvalidGraphError, InvalidSizeError, ScheduleError, ZoLabError)
from utils.logging_config import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_VERIFY_FAILED = 4

CONFIG_ERRORS = (ConfigError, ScheduleError, InvalidSizeError, InvalidGraphError, GraphConstructionError)


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description='Distributed zero-order optimization lab')
    parser.add_argument('--debug', action='store_true',
                        help='Enable debug logging')
    parser.add_argument('--log-file', default=None,
                        help='Also write logs to this file')
    subparsers = parser.add_subparsers(dest='command', required=True)

    run_parser = subparsers.add_parser('run', help='Run one configuration')
    run_parser.add_argument('config', help='Path to a key = value config file')
    run_parser.add_argument('--output', '-o', default=None,
                            help="Output directory (default: config 'output', ZOLAB_OUTPUT_DIR or results/)")

    verify_parser = subparsers.add_parser('verify', help='Run verification checks')
    verify_parser.add_argument('which', help=f"One of {', '.join(VERIFY_SELECTORS)}, all")
    verify_parser.add_argument('--samples', type=int, default=100_000,
                               help='Monte Carlo samples per statistical check')
    verify_parser.add_argument('--seed', type=int, default=0,
                               help='Seed for the verification streams')
    verify_parser.add_argument('--report', default=None,
                               help='Write the reports as JSON to this path')

    sweep_parser = subparsers.add_parser('sweep', help='Run a configuration over several seeds')
    sweep_parser.add_argument('config', help='Path to a key = value config file')
    sweep_parser.add_argument('--seeds', required=True,
                              help='Comma-separated seeds, e.g. 1,2,3')
    sweep_parser.add_argument('--workers', type=int, default=1,
                              help='Worker processes (default: 1)')
    sweep_parser.add_argument('--output', '-o', default=None,
                              help='Output directory')

    replay_parser = subparsers.add_parser('replay', help='Re-run a manifest exactly')
    replay_parser.add_argument('manifest', help='Path to a manifest.txt')
    replay_parser.add_argument('--output', '-o', default=None,
                               help='Output directory (default: a replay/ directory next to the manifest)')

    return parser.parse_args(argv)


def _load_config(path: str) -> RunConfig:
    return RunConfig.from_mapping(parse_key_value_file(path))


def _parse_seeds(text: str) -> List[int]:
    bad = []
    seeds = []
    for item in text.split(','):
        item = item.strip()
        try:
            seed = int(item)
        except ValueError:
            bad.append(item)
            continue
        if seed < 0:
            bad.append(item)
        else:
            seeds.append(seed)
    if bad or not seeds:
        raise ConfigError(['seeds'], [f"seeds: expected non-negative integers, got '{text}'"])
    return seeds


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    output_dir = args.output or config.output or default_output_dir()
    trace, output_files = ExperimentRunner().run_and_export(config, output_dir)
    logger.info(f"Run finished at t={trace.last.t}, m={trace.last.m}")
    for kind, path in output_files.items():
        logger.info(f"{kind}: {path}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    runner = ExperimentRunner()
    reports = runner.run_verification(args.which, samples=args.samples, seed=args.seed)
    for report in reports:
        print(str(report))
    if args.report:
        runner.export_reports(reports, args.report)

    passed = sum(report.passed for report in reports)
    print(f"{passed}/{len(reports)} checks passed")
    return EXIT_OK if passed == len(reports) else EXIT_VERIFY_FAILED


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    seeds = _parse_seeds(args.seeds)
    output_dir = args.output or config.output or default_output_dir()
    result = ExperimentRunner().sweep(config, seeds, output_dir, workers=max(1, args.workers))

    for k, error in sorted(result.failures.items()):
        logger.error(f"Seed {seeds[k]} failed: {error}")
    if result.summary_path:
        logger.info(f"summary: {result.summary_path}")
    return EXIT_OK if result.ok else EXIT_DIVERGENCE


def cmd_replay(args: argparse.Namespace) -> int:
    output_dir = args.output or os.path.join(os.path.dirname(os.path.abspath(args.manifest)), 'replay')
    trace, output_files = ExperimentRunner().replay(args.manifest, output_dir)
    logger.info(f"Replay finished at t={trace.last.t}: {output_files['trace']}")
    return EXIT_OK


COMMANDS = {
    'run': cmd_run,
    'verify': cmd_verify,
    'sweep': cmd_sweep,
    'replay': cmd_replay,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main function: dispatch a subcommand and map failures to exit codes."""
    args = parse_args(argv)

    log_level = logging.DEBUG if args.debug else logging.INFO
    setup_logging(log_level, args.log_file)

    try:
        return COMMANDS[args.command](args)
    except CONFIG_ERRORS as e:
        logger.error(f"Configuration error: {str(e)}")
        return EXIT_CONFIG
    except DivergenceError as e:
        logger.error(f"Run diverged: {str(e)}")
        return EXIT_DIVERGENCE
    except (ExportError, OSError) as e:
        logger.error(f"Output error: {str(e)}")
        return EXIT_IO
    except ZoLabError as e:
        logger.error(f"{type(e).__name__}: {str(e)}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
