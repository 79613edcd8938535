#!/usr/bin/env python3
import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .common import (ConfigError, IntegratorError, InvalidArgument,
                     ModelError, Scenario, ScenarioConfig)
from .scenarios import run_scenario, write_criteria

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

THREADS_VARIABLE = 'CTHERMO_THREADS'


def _threads(cli_value: Optional[int]) -> Optional[int]:
    if cli_value is not None:
        return cli_value
    env_value = os.environ.get(THREADS_VARIABLE)
    if env_value is None:
        return None
    try:
        return int(env_value)
    except ValueError:
        raise ConfigError(f'{THREADS_VARIABLE} must be an integer, '
                          f'got {env_value!r}', 'threads')


def _setup_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity,
                                                        logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog='cthermo',
        description='Coherence thermodynamics of a driven qubit')

    def valid_file(filename: str) -> Path:
        path = Path(filename)
        if not path.is_file():
            parser.error(f'Config file does not exist: {filename}')
        return path
    parser.add_argument('scenario', choices=[s.value for s in Scenario])
    parser.add_argument('-c', '--config', type=valid_file,
                        help='json file overriding the default config')
    parser.add_argument('-o', '--out', help='output directory')
    parser.add_argument('-f', '--format', choices=('csv', 'json'))
    parser.add_argument('--dt', type=float, help='integrator time step')
    parser.add_argument('-t', '--threads', type=int,
                        help=f'worker processes (default: ${THREADS_VARIABLE} '
                             f'or 1)')
    parser.add_argument('--criteria', action='store_true',
                        help='also write criteria.json with the timescales')
    parser.add_argument('-v', '--verbose', action='count', default=0)
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)

    try:
        overrides: Dict[str, Any] = {'out': args.out, 'format': args.format,
                                     'dt': args.dt,
                                     'threads': _threads(args.threads)}
        cfg, missing_keys = ScenarioConfig.load(Scenario(args.scenario),
                                                args.config, overrides)
    except ConfigError as e:
        print(f'cthermo: {e}', file=sys.stderr)
        return EXIT_CONFIG
    if missing_keys:
        keys = ', '.join(f'"{k}"' for k in sorted(missing_keys))
        logger.warning(f'Some keys are missing from your config, using '
                       f'defaults: {keys}')

    try:
        paths = run_scenario(cfg)
        if args.criteria:
            paths.append(write_criteria(cfg))
    except (ModelError, IntegratorError, InvalidArgument) as e:
        print(f'cthermo: {cfg.scenario.value} failed: {e}', file=sys.stderr)
        return EXIT_NUMERIC
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
