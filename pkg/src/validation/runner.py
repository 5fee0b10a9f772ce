import os
import json
import logging
from dataclasses import replace, fields
from typing import Dict, Any, Optional

import numpy as np
from firelab.config import Config

from src.geometry.norm_geometry import WeightVector
from src.sampling.gaussian_paths import build_process_model
from src.tails.formulas import build_formula, parse_trend
from src.tails.pointwise_tail import pointwise_tail_mc
from src.tails.tail_asymptotics import ConstantBudget
from src.utils.errors import InvalidParameterError
from src.utils.manifest import RunManifest, write_manifest
from src.validation.mc_validation import (
    ValidationSettings, SupremumQuery, SweepResult, MCEstimate, RatioTable,
    resolve_grid, path_chunk_size, sweep_exceedance, ratio_table, ruin_query, arbitrate_candidates,
    write_ratio_csv, arbitration_verdict,
)

logger = logging.getLogger(__name__)

SCENARIO_KINDS = ('supremum', 'ruin', 'pointwise')


def load_scenario(path: os.PathLike) -> Dict[str, Any]:
    with open(path) as f:
        scenario = json.load(f)

    if scenario.get('kind') not in SCENARIO_KINDS:
        raise InvalidParameterError(f'Scenario kind should be one of {SCENARIO_KINDS}, got: {scenario.get("kind")}')

    for key in ['u_values', 'n_samples', 'seed']:
        if key not in scenario:
            raise InvalidParameterError(f'Scenario misses `{key}`')

    return scenario


def parse_order(p) -> float:
    return float(p) if not isinstance(p, str) else float(p.lower())


def scenario_settings(settings: ValidationSettings, scenario: Dict[str, Any]) -> ValidationSettings:
    """A scenario may overwrite validation settings, e.g. {"settings": {"lambda_res": 80}}"""
    overrides = dict(scenario.get('settings', {}))
    allowed = {f.name for f in fields(ValidationSettings)} - {'threads', 'silent', 'embedding'}
    unknown = sorted(set(overrides) - allowed)

    if len(unknown) > 0:
        raise InvalidParameterError(f'Unknown scenario settings: {unknown}. Known: {sorted(allowed)}')

    if 'convergence_band' in overrides:
        overrides['convergence_band'] = tuple(overrides['convergence_band'])

    return replace(settings, **overrides)


class ValidationRunner:
    """
    Runs a validation scenario: MC sweep over the u values, ratio tables against the formula
    (or against every candidate formula) and the run manifest.
    """
    def __init__(self, config: Config, scenario: Dict[str, Any], out_dir: Optional[str]=None,
                 threads: int=None, seed: int=None):
        self.config = config
        self.scenario = scenario
        self.out_dir = out_dir
        self.seed = scenario['seed'] if seed is None else seed
        self.settings = scenario_settings(ValidationSettings.from_config(config, threads=threads), scenario)
        self.budget = ConstantBudget.from_config(config, threads=threads)
        self.u_values = [float(u) for u in scenario['u_values']]
        self.n_samples = int(scenario['n_samples'])

    def build_query(self) -> SupremumQuery:
        s = self.scenario

        if s['kind'] == 'ruin':
            return ruin_query(s['alpha'], s.get('weights', [1.0]), s['w'])

        weights = WeightVector.of(s['weights'])
        trend = parse_trend(s) if s.get('trend') is not None else None

        return SupremumQuery(build_process_model(s['process']), weights.n, weights, parse_order(s['p']), s['c'], s['T'],
                             trend=trend)

    def build_candidates(self) -> Dict[str, Any]:
        s = self.scenario

        if s['kind'] == 'ruin':
            params = {'alpha': s['alpha'], 'weights': s.get('weights', [1.0]), 'w': s['w']}
            return build_formula('ruin', params, self.budget).candidates
        elif s['kind'] == 'pointwise':
            params = {'p': parse_order(s['p']), 'c': s['c'], 'weights': s['weights'], 'mills': s.get('mills', False)}
            return build_formula('pointwise', params, self.budget).candidates
        else:
            params = dict(s.get('formula_params', {}))
            params.setdefault('weights', s['weights'])
            return build_formula(s['formula'], params, self.budget).candidates

    def plan(self) -> Dict[str, Any]:
        """Resolved grids and the sample plan (nothing is sampled)"""
        if self.scenario['kind'] == 'pointwise':
            return {'kind': 'pointwise', 'n_samples': self.n_samples, 'u_values': self.u_values}

        query = self.build_query()
        N = resolve_grid(query, max(self.u_values), self.settings)
        chunk_size = path_chunk_size(query, N, self.settings)

        return {
            'kind': self.scenario['kind'],
            'grids': {repr(u): resolve_grid(query, u, self.settings) for u in self.u_values},
            'N': N,
            'refined_N': 2 * N,
            'lambda_res': self.settings.lambda_res,
            'n_samples': self.n_samples,
            'refined_n_samples': max(int(np.ceil(self.settings.refine_fraction * self.n_samples)), 1),
            'chunk_size': chunk_size,
            'num_chunks': int(np.ceil(self.n_samples / chunk_size)),
            'query': query.to_dict(),
        }

    def run_pointwise(self) -> SweepResult:
        s = self.scenario
        p, weights = parse_order(s['p']), WeightVector.of(s['weights'])
        estimates = {}

        for u in self.u_values:
            mc = pointwise_tail_mc(p, s['c'], weights, u, self.n_samples, self.seed, threads=self.settings.threads)
            estimates[u] = MCEstimate(u, mc.p_hat, mc.stderr, mc.estimate.hits, self.n_samples, 0, self.seed)

        return SweepResult(query=None, seed=self.seed, estimates=estimates)

    def start(self, dry_run: bool=False) -> Dict[str, Any]:
        manifest = RunManifest(command='validate', parameters=self.scenario, seed=self.seed)

        if dry_run:
            return {'plan': self.plan(), 'manifest': manifest.to_dict()}

        candidates = self.build_candidates()
        first_candidate = next(iter(candidates.values()))

        if self.scenario['kind'] == 'pointwise':
            sweep = self.run_pointwise()
        else:
            sweep = sweep_exceedance(self.build_query(), self.u_values, self.n_samples, self.seed,
                                     asymptotic=first_candidate, settings=self.settings)

        tables = {name: ratio_table(sweep, fn, name, self.settings) for name, fn in candidates.items()}
        summary = {
            'tables': {name: t.to_dict() for name, t in tables.items()},
            'non_converged': all(t.non_converged for t in tables.values()),
            'num_valid_rows': len(next(iter(tables.values())).valid_rows),
        }

        if len(candidates) > 1:
            summary['verdict'] = arbitrate_candidates(sweep, candidates, self.settings).to_dict()['verdict']

        if self.out_dir is not None:
            self.save_outputs(tables, sweep, candidates, manifest)

        for name, table in tables.items():
            for row in table.rows:
                logger.info(f'[{name}] u={row["u"]}: ratio={row["ratio"]} CI=({row["ci_lo"]}, {row["ci_hi"]}) status={row["status"]}')

        return {'summary': summary, 'manifest': manifest.to_dict()}

    def save_outputs(self, tables: Dict[str, RatioTable], sweep: SweepResult, candidates, manifest: RunManifest):
        os.makedirs(self.out_dir, exist_ok=True)

        for name, table in tables.items():
            filename = 'ratios.csv' if len(tables) == 1 else f'ratios_{name}.csv'
            write_ratio_csv(table, os.path.join(self.out_dir, filename))

        if len(candidates) > 1:
            verdict = arbitrate_candidates(sweep, candidates, self.settings)
            arbitration_verdict(verdict, os.path.join(self.out_dir, 'verdict.json'), manifest.to_dict())

        write_manifest(manifest, os.path.join(self.out_dir, 'manifest.json'))

    @staticmethod
    def exit_ok(result: Dict[str, Any]) -> bool:
        summary = result['summary']
        return not summary['non_converged'] and summary['num_valid_rows'] > 0
