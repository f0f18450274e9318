"""
Main entry point for ZFStats.
Dispatches the analytic, simulate, kstest, outage and reproduce subcommands.
"""
import argparse
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

import src  # noqa: F401  (puts src/ on sys.path)
from commands import HANDLERS
from errors import InvalidConfigurationError, ZFStatsError
from logger import LOG_LEVELS, get_logger, set_level
from settings import OUTPUT_DIR

logger = get_logger("zfstats")

# Exit codes
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--config',
        type=str,
        help='Path to a key = value config file'
    )
    common.add_argument(
        '--set',
        action='append',
        metavar='KEY=VALUE',
        help='Override one config key (repeatable); wins over the config file'
    )
    common.add_argument(
        '--output-dir',
        type=str,
        help=f'Directory for CSV and manifest output (default: {OUTPUT_DIR})'
    )
    common.add_argument(
        '--workers',
        type=int,
        help='Worker threads for the Monte Carlo campaign (default: CPU count)'
    )
    common.add_argument(
        '--log-level',
        choices=sorted(LOG_LEVELS),
        help='Log level (default: info)'
    )
    return common


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--seed', type=int, help='Master seed of the campaign')
    parser.add_argument('--antennas', type=str, help='Antenna counts, comma separated (e.g. 12,20,40)')
    parser.add_argument('--drops', type=int, help='Number of user-position drops')
    parser.add_argument('--fadings', type=int, help='Fading realizations per drop')
    parser.add_argument(
        '--full-protocol',
        action='store_true',
        help='Run 200 drops x 1000 fadings instead of the desk-scale defaults'
    )


def _add_rate_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--rate-grid', type=str, metavar='START:STOP:STEPS', help='Target rates of the outage curve')
    parser.add_argument(
        '--rate-units',
        choices=['nats', 'bits'],
        default='nats',
        help='Units of --rate-grid (default: nats)'
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the zfstats argument parser"""
    parser = argparse.ArgumentParser(
        prog='zfstats',
        description='Statistics of zero-forcing beamforming in multi-cell networks'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)
    common = _common_parser()

    analytic = subparsers.add_parser(
        'analytic', parents=[common], help='Closed-form per-user moments for one seeded layout'
    )
    analytic.add_argument('--seed', type=int, help='Master seed (the layout of drop 0 is used)')
    analytic.add_argument('--antennas', type=str, help='Antenna counts, comma separated')
    analytic.add_argument('--csv', action='store_true', help='Also write analytic.csv to the output directory')

    simulate = subparsers.add_parser(
        'simulate', parents=[common], help='Monte Carlo campaign against the closed forms'
    )
    _add_run_flags(simulate)
    _add_rate_flags(simulate)
    simulate.add_argument(
        '--outputs',
        type=str,
        help='Comma-separated subset of moments,kstest,outage (default: all)'
    )
    simulate.add_argument('--case', type=int, choices=[1, 2], action='append', help='Normalization case (repeatable)')
    simulate.add_argument(
        '--family', choices=['gamma', 'lognormal'], action='append', help='Interference family for outage (repeatable)'
    )
    simulate.add_argument(
        '--dump-samples', action='store_true', help='Write interference samples of user 0, drop 0 per M'
    )

    kstest = subparsers.add_parser(
        'kstest', parents=[common], help='KS-test gamma, lognormal and normal fits of a sample file'
    )
    kstest.add_argument('--samples', type=str, required=True, help='CSV file of samples')
    kstest.add_argument('--column', type=str, help="Column holding the samples (default: value)")

    outage = subparsers.add_parser(
        'outage', parents=[common], help='Analytic vs empirical outage curve for one case and family'
    )
    _add_run_flags(outage)
    _add_rate_flags(outage)
    outage.add_argument('--case', type=int, choices=[1, 2], default=1, help='Normalization case (default: 1)')
    outage.add_argument(
        '--family', choices=['gamma', 'lognormal'], default='gamma', help='Interference family (default: gamma)'
    )

    reproduce = subparsers.add_parser(
        'reproduce', parents=[common], help='Run a figure preset at desk scale'
    )
    reproduce.add_argument('figure', choices=['fig1', 'fig2', 'fig3'])
    reproduce.add_argument('--seed', type=int, help='Master seed of the campaign')
    reproduce.add_argument('--drops', type=int, help='Number of user-position drops')
    reproduce.add_argument('--fadings', type=int, help='Fading realizations per drop')
    reproduce.add_argument('--full-protocol', action='store_true', help='Run 200 drops x 1000 fadings')
    reproduce.add_argument('--dump-samples', action='store_true', help='Write interference samples per M')

    return parser


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv, run the chosen subcommand and return its exit code:
    0 success, 1 runtime failure, 2 usage or configuration error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse already printed the message naming the offending flag
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if args.log_level:
        set_level(args.log_level)

    try:
        return HANDLERS[args.command](args)
    except (InvalidConfigurationError, ValidationError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except (ZFStatsError, OSError, RuntimeError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE


def main():
    """Run the zfstats command line"""
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
