import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from statarb.command.run import run_experiment, write_synthetic
from statarb.command.verify import SUITES, run_verify
from statarb.models.errors import ConfigError
from statarb.service import read_config

log = logging.getLogger(__name__)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='statarb', description='Walk-forward statistical arbitrage backtests')
    parser.add_argument('-v', '--verbose', action='store_true', help='log at DEBUG level')
    commands = parser.add_subparsers(dest='command', required=True)
    run = commands.add_parser('run', help='run the strategies of a configuration')
    run.add_argument('-c', '--config', type=Path, required=True, help='JSON run configuration')
    verify = commands.add_parser('verify', help='run a verification suite')
    verify.add_argument('suite', choices=SUITES)
    verify.add_argument('--steps', type=int, default=None, help='OU path length for the ou suite')
    verify.add_argument('--seed', type=int, default=0)
    synth = commands.add_parser('synth', help='write the configured synthetic panel as CSV')
    synth.add_argument('-c', '--config', type=Path, required=True, help='JSON run configuration')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    if args.command == 'verify':
        return run_verify(args.suite, args.steps, args.seed)
    try:
        config = read_config(args.config)
        if args.command == 'synth':
            return write_synthetic(config)
    except ConfigError as exc:
        print(f'Invalid configuration {args.config}:', file=sys.stderr)
        for violation in exc.violations:
            print(f'  - {violation}', file=sys.stderr)
        return 2
    return run_experiment(config)


if __name__ == '__main__':
    sys.exit(main())
