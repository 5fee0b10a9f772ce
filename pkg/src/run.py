import sys; sys.path.append('.')
import argparse
import logging
from dataclasses import replace
from typing import List, Dict, Any, Tuple

import numpy as np
from firelab.config import Config

from src.constants.extreme_constants import (
    DriftFunctional, pickands_constant, pickands_window, piterbarg_constant, piterbarg_closed_form,
)
from src.geometry.norm_geometry import WeightVector, critical_scale
from src.sampling.circulant import EmbeddingSettings
from src.tails.formulas import FORMULAS, build_formula
from src.tails.tail_asymptotics import ConstantBudget
from src.utils.config import load_config
from src.utils.constants import NEG_INF
from src.utils.errors import LpTailError, InvalidParameterError, error_to_dict
from src.utils.logging_utils import setup_logging
from src.utils.manifest import RunManifest, to_json
from src.validation.runner import ValidationRunner, load_scenario

logger = logging.getLogger(__name__)

DEFAULT_RANDOM_SEED = 1
# Flags which never change results
RUNTIME_ONLY_ARGS = {'threads', 'quiet', 'command', 'func'}


def run(args: argparse.Namespace, config_cli_args: List[str]) -> int:
    try:
        config = load_config(config_cli_args)
    except ValueError as e:
        print(to_json({'error': str(e), 'type': 'ConfigError'}), file=sys.stderr)
        return 2

    setup_logging('WARNING' if args.quiet else config.runtime.log_level)

    if args.quiet:
        config = config.overwrite(Config({'runtime': {'silent': True}}))

    try:
        record, exit_code = args.func(args, config)
    except LpTailError as e:
        print(to_json(error_to_dict(e)), file=sys.stderr)
        return 2

    record['manifest'] = build_manifest(args, config_cli_args, record.pop('seed', None)).to_dict()
    print(to_json(record))

    return exit_code


def build_manifest(args: argparse.Namespace, config_cli_args: List[str], seed: int=None) -> RunManifest:
    parameters = {k: v for k, v in vars(args).items() if k not in RUNTIME_ONLY_ARGS}

    if config_cli_args:
        parameters['config_overrides'] = config_cli_args

    return RunManifest(command=args.command, parameters=parameters, seed=seed)


def resolve_seed(args: argparse.Namespace) -> int:
    return DEFAULT_RANDOM_SEED if args.seed is None else args.seed


def cmd_geometry(args: argparse.Namespace, config: Config) -> Tuple[Dict[str, Any], int]:
    geometry = critical_scale(args.p, WeightVector.from_string(args.weights))

    return {'geometry': geometry.to_dict()}, 0


def cmd_constants(args: argparse.Namespace, config: Config) -> Tuple[Dict[str, Any], int]:
    seed = resolve_seed(args)
    S = config.constants.S if args.S is None else args.S
    delta = config.constants.delta if args.delta is None else args.delta
    n_samples = config.constants.n_samples if args.samples is None else args.samples
    mc_kwargs = dict(
        chunk_size=config.constants.chunk_size,
        threads=args.threads,
        settings=EmbeddingSettings.from_config(config.sampling),
        silent=config.runtime.silent,
    )

    if args.kind == 'pickands':
        if args.closed_form:
            if args.alpha not in (1, 2):
                raise InvalidParameterError(f'Closed form Pickands constants are only known for alpha in {{1, 2}}, got: {args.alpha}')
            value = 1.0 if args.alpha == 1 else 1 / np.sqrt(np.pi)
            return {'constant': {'name': 'pickands', 'value': value, 'provenance': 'closed_form', 'alpha': args.alpha}}, 0

        if args.S1 is not None:
            estimate = pickands_window(args.alpha, args.S1, S, delta, n_samples, seed, **mc_kwargs)
        else:
            estimate = pickands_constant(args.alpha, S, delta, n_samples, seed,
                                         method=args.method or config.constants.pickands_method, **mc_kwargs)

        return {'constant': {**estimate.to_dict(), 'provenance': 'monte_carlo'}, 'seed': seed}, 0

    f = DriftFunctional(
        b_eff=args.b or 0.0,
        beta=args.beta or args.alpha,
        w_eff=args.w or 0.0,
        gamma=args.gamma or 1.0,
        domain_start=NEG_INF if args.Q == '-inf' else 0.0,
    )

    if args.closed_form:
        coefficient = f.power_coefficient(args.alpha)

        if args.alpha not in (1, 2) or not coefficient:
            raise InvalidParameterError('Closed form Piterbarg constants need alpha in {1, 2} and f(t) = b|t|^alpha')

        value = piterbarg_closed_form(args.alpha, args.a, coefficient, two_sided=f.two_sided)

        return {'constant': {'name': 'piterbarg', 'value': float(value), 'provenance': 'closed_form',
                             'alpha': args.alpha, 'a': args.a, 'f': f.to_dict()}}, 0

    estimate = piterbarg_constant(args.alpha, args.a, f, args.S, delta, n_samples, seed,
                                  truncation_exponent=config.constants.truncation_exponent, **mc_kwargs)

    return {'constant': {**estimate.to_dict(), 'provenance': 'monte_carlo'}, 'seed': seed}, 0


ASYMPTOTIC_PARAMS = ['p', 'c', 'weights', 'n', 'alpha', 'a', 'b', 'beta', 'w', 'gamma', 't0', 'T', 'centered', 'mills']


def cmd_asymptotic(args: argparse.Namespace, config: Config) -> Tuple[Dict[str, Any], int]:
    budget = ConstantBudget.from_config(config, threads=args.threads)
    seed = budget.seed if args.seed is None else args.seed
    budget = replace(budget, seed=seed)
    params = {k: getattr(args, k) for k in ASYMPTOTIC_PARAMS if getattr(args, k) is not None}
    u_values = parse_float_list(args.u_list)
    formula = build_formula(args.formula, params, budget)

    return {'approximation': formula.record(u_values), 'seed': seed}, 0


def cmd_validate(args: argparse.Namespace, config: Config) -> Tuple[Dict[str, Any], int]:
    scenario = load_scenario(args.scenario)
    runner = ValidationRunner(config, scenario, out_dir=args.out, threads=args.threads, seed=args.seed)
    result = runner.start(dry_run=args.dry_run)
    result.pop('manifest')
    exit_code = 0 if args.dry_run or ValidationRunner.exit_ok(result) else 1

    return {**result, 'seed': runner.seed}, exit_code


def parse_float_list(values: str) -> List[float]:
    return [float(v) for v in values.split(',')]


def parse_order(value: str) -> float:
    return float(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=None, help='Random seed (the only source of randomness)')
    common.add_argument('--threads', type=int, default=None, help='Number of worker threads (does not change results)')
    common.add_argument('--quiet', action='store_true', help='Only warnings, no progress bars')

    parser = argparse.ArgumentParser('Tail asymptotics of suprema of L^p norms of Gaussian processes')
    subparsers = parser.add_subparsers(dest='command', required=True)

    geometry = subparsers.add_parser('geometry', parents=[common], help='Critical scale d and the maximizers on S_q')
    geometry.add_argument('--p', type=parse_order, required=True, help='Norm order in [1, inf]')
    geometry.add_argument('--weights', type=str, required=True, help='Comma-separated weights, e.g. 1,1,0.5')
    geometry.set_defaults(func=cmd_geometry)

    constants = subparsers.add_parser('constants', parents=[common], help='Pickands and Piterbarg constants')
    constants.add_argument('kind', choices=['pickands', 'piterbarg'])
    constants.add_argument('--alpha', type=float, required=True)
    constants.add_argument('--a', type=float, default=1.0)
    constants.add_argument('--b', type=float, default=None)
    constants.add_argument('--beta', type=float, default=None)
    constants.add_argument('--w', type=float, default=None)
    constants.add_argument('--gamma', type=float, default=None)
    constants.add_argument('--Q', type=str, choices=['0', '-inf'], default='0', help='Start of the domain [Q, inf)')
    constants.add_argument('--S', type=float, default=None, help='Window size')
    constants.add_argument('--S1', type=float, default=None, help='Left window end for H_alpha[-S1, S]')
    constants.add_argument('--delta', type=float, default=None, help='Grid step')
    constants.add_argument('--samples', type=int, default=None)
    constants.add_argument('--method', type=str, choices=['ratio', 'window'], default=None)
    constants.add_argument('--closed-form', action='store_true', help='Exact values for alpha in {1, 2}')
    constants.set_defaults(func=cmd_constants)

    asymptotic = subparsers.add_parser('asymptotic', parents=[common], help='Evaluate an asymptotic formula')
    asymptotic.add_argument('formula', choices=FORMULAS)
    asymptotic.add_argument('--u-list', type=str, required=True, help='Comma-separated thresholds')
    asymptotic.add_argument('--p', type=parse_order, default=None)
    asymptotic.add_argument('--c', type=float, default=None)
    asymptotic.add_argument('--weights', type=str, default=None)
    asymptotic.add_argument('--n', type=int, default=None)
    asymptotic.add_argument('--alpha', type=float, default=None)
    asymptotic.add_argument('--a', type=float, default=None)
    asymptotic.add_argument('--b', type=float, default=None)
    asymptotic.add_argument('--beta', type=float, default=None)
    asymptotic.add_argument('--w', type=float, default=None)
    asymptotic.add_argument('--gamma', type=float, default=None)
    asymptotic.add_argument('--t0', type=float, default=None)
    asymptotic.add_argument('--T', type=float, default=None)
    asymptotic.add_argument('--centered', action='store_true', default=None, help='Trend-free assembly (thm31 with w=0)')
    asymptotic.add_argument('--mills', action='store_true', default=None, help='Mills-ratio form of the normal tail')
    asymptotic.set_defaults(func=cmd_asymptotic)

    validate = subparsers.add_parser('validate', parents=[common], help='Run a validation scenario')
    validate.add_argument('scenario', type=str, help='Path to the scenario JSON')
    validate.add_argument('--out', type=str, default=None, help='Directory for the CSV tables and the manifest')
    validate.add_argument('--dry-run', action='store_true', help='Print the resolved grids and the sample plan')
    validate.set_defaults(func=cmd_validate)

    return parser


def main(argv: List[str]=None) -> int:
    args, config_args = build_parser().parse_known_args(argv)

    return run(args, config_args)


if __name__ == '__main__':
    sys.exit(main())
