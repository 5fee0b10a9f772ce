#!/usr/bin/env python
"""
Runs validation scenarios for several seeds and appends the final ratios to a log file
"""
import sys; sys.path.append('.')
import os
import glob
import argparse
import logging
from typing import Dict, List, Any

import numpy as np

from src.utils.config import load_config
from src.utils.constants import PROJECT_DIR
from src.utils.logging_utils import setup_logging
from src.validation.runner import ValidationRunner, load_scenario

logger = logging.getLogger(__name__)

SCENARIOS_DIR = os.path.join(PROJECT_DIR, 'configs', 'scenarios')


def read_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser('Running validation scenarios')
    parser.add_argument('scenarios', nargs='*', help='Scenario files (default: every bundled scenario)')
    parser.add_argument('-n', '--num_runs', type=int, default=1, help='Number of seeds for each scenario')
    parser.add_argument('-o', '--out', type=str, default='results', help='Where to save the tables')
    parser.add_argument('--threads', type=int, default=None)
    parser.add_argument('--dry-run', action='store_true', help='Only print the sample plans')

    return parser.parse_known_args()


def final_ratios(result: Dict[str, Any]) -> Dict[str, float]:
    ratios = {}

    for name, table in result['summary']['tables'].items():
        valid = [r for r in table['rows'] if r['status'] != 'infeasible']
        ratios[name] = valid[-1]['ratio'] if valid else np.nan

    return ratios


def run_series(scenario_paths: List[str], num_runs: int, out_dir: str, config_cli_args: List[str]=None,
               threads: int=None, dry_run: bool=False) -> Dict[str, List[Dict[str, Any]]]:
    config = load_config(config_cli_args)
    results = {}

    for i, path in enumerate(scenario_paths):
        scenario = load_scenario(path)
        name = scenario.get('name', os.path.splitext(os.path.basename(path))[0])
        logger.info(f'<======= Running scenario {name} (#{i+1}/{len(scenario_paths)}) =======>')
        results[name] = []

        for k in range(num_runs):
            seed = scenario['seed'] + k
            runner = ValidationRunner(config, scenario, out_dir=os.path.join(out_dir, name, f'seed_{seed}'),
                                      threads=threads, seed=seed)
            results[name].append(runner.start(dry_run=dry_run))

        if not dry_run:
            log_summary(name, results[name], os.path.join(out_dir, 'summary.log'))

    return results


def log_summary(name: str, results: List[Dict[str, Any]], log_file: str):
    ratios = [final_ratios(r) for r in results]
    log_str = f'[{name}] runs: {len(results)}. non-converged: {sum(r["summary"]["non_converged"] for r in results)}.'

    for candidate in ratios[0]:
        values = np.array([r[candidate] for r in ratios])
        log_str += f' {candidate}: {np.nanmean(values):.03f} (std: {np.nanstd(values):.03f}).'

    os.makedirs(os.path.dirname(log_file), exist_ok=True)
    with open(log_file, 'a') as f:
        f.write(log_str + '\n')

    logger.info(log_str)


def main():
    args, config_cli_args = read_args()
    setup_logging()
    scenario_paths = args.scenarios or sorted(glob.glob(os.path.join(SCENARIOS_DIR, '*.json')))
    results = run_series(scenario_paths, args.num_runs, args.out, config_cli_args, args.threads, args.dry_run)

    if args.dry_run:
        for name, runs in results.items():
            plan = runs[0]['plan']
            print(f'{name}: N={plan.get("N")}, n_samples={plan["n_samples"]}, runs: {len(runs)}')


if __name__ == "__main__":
    main()
