"""
Crude Monte Carlo estimates of P{sup_{[0,T]} (Z^c(t) + g(t)) > u} on uniform grids
and ratio-vs-asymptotic reports built on them.
"""
import os
import csv
import json
import logging
from dataclasses import dataclass, field, asdict
from typing import Callable, Dict, List, Optional, Sequence, Union, Any, Tuple

import numpy as np

from src.geometry.norm_geometry import NormOrder, WeightVector, weighted_lp_norm
from src.sampling.circulant import EmbeddingSettings
from src.sampling.gaussian_paths import ProcessModel, FractionalBM, sample_component_chunk
from src.tails.pointwise_tail import check_power_exponent
from src.tails.tail_asymptotics import PowerTrend, TabulatedFunction
from src.utils.constants import STREAM_PATHS, STREAM_REFINE, STREAM_PILOT
from src.utils.errors import InvalidParameterError, InfeasibleTargetError
from src.utils.parallel import map_chunks
from src.utils.stats import BernoulliEstimate

logger = logging.getLogger(__name__)

MIN_PILOT_HITS = 10
PILOT_UPPER_STDERRS = 3
REFINEMENT_STDERRS = 3

Trend = Union[PowerTrend, TabulatedFunction]


@dataclass(frozen=True)
class ValidationSettings:
    lambda_res: float = 10
    max_grid: int = 2 ** 22
    pilot_samples: int = 10000
    min_expected_hits: float = 20
    refine_fraction: float = 0.1
    chunk_size: int = 1000
    ci_level: float = 0.95
    convergence_band: Tuple[float, float] = (0.7, 1.3)
    memory_budget: int = 20000000
    threads: Optional[int] = None
    silent: bool = True
    embedding: EmbeddingSettings = EmbeddingSettings()

    @classmethod
    def from_config(cls, config, threads: int=None) -> "ValidationSettings":
        return cls(
            lambda_res=config.get('validation.lambda_res'),
            max_grid=config.get('validation.max_grid'),
            pilot_samples=config.get('validation.pilot_samples'),
            min_expected_hits=config.get('validation.min_expected_hits'),
            refine_fraction=config.get('validation.refine_fraction'),
            chunk_size=config.get('validation.chunk_size'),
            ci_level=config.get('validation.ci_level'),
            convergence_band=tuple(config.get('validation.convergence_band')),
            memory_budget=config.get('validation.memory_budget'),
            threads=threads,
            silent=config.get('runtime.silent'),
            embedding=EmbeddingSettings.from_config(config.sampling),
        )


@dataclass(frozen=True)
class SupremumQuery:
    process: ProcessModel
    n_components: int
    weights: WeightVector
    p: NormOrder
    c: float
    T: float
    u: float = 0.0
    trend: Optional[Trend] = None

    def __post_init__(self):
        object.__setattr__(self, 'weights', WeightVector.of(self.weights))
        object.__setattr__(self, 'p', NormOrder.of(self.p))
        object.__setattr__(self, 'c', check_power_exponent(self.c))

        if self.weights.n != self.n_components:
            raise InvalidParameterError(f'Got {self.weights.n} weights for {self.n_components} components')
        if not self.T > 0:
            raise InvalidParameterError(f'T must be positive, got: {self.T}')

    def with_u(self, u: float) -> "SupremumQuery":
        return SupremumQuery(self.process, self.n_components, self.weights, self.p, self.c, self.T, u, self.trend)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'process': self.process.to_dict(),
            'n_components': self.n_components,
            'weights': list(self.weights.values),
            'p': self.p.p,
            'c': self.c,
            'T': self.T,
            'u': self.u,
            'trend': None if self.trend is None else {'type': type(self.trend).__name__, **asdict(self.trend)},
        }


@dataclass(frozen=True)
class MCEstimate:
    u: float
    p_hat: float
    stderr: float
    hits: int
    n_samples: int
    N: int
    seed: int
    # Paired 2N diagnostic: exceedances gained on the same paths when the grid is doubled
    refinement_difference: Optional[float] = None
    refinement_stderr: Optional[float] = None
    refined_n_samples: Optional[int] = None
    discretization_flag: bool = False

    def __post_init__(self):
        assert 0 <= self.p_hat <= 1

    @property
    def refined_p_hat(self) -> Optional[float]:
        return None if self.refinement_difference is None else min(self.p_hat + self.refinement_difference, 1.0)

    def ci(self, ci_level: float=0.95) -> Tuple[float, float]:
        return BernoulliEstimate(self.hits, self.n_samples).ci(ci_level)

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), 'refined_p_hat': self.refined_p_hat}


def resolve_grid(query: SupremumQuery, u: float=None, settings: ValidationSettings=ValidationSettings()) -> int:
    """
    N is the smallest power of two with T / N <= min(T, u^{-2/(alpha c)}) / lambda_res, capped at max_grid
    """
    u = query.u if u is None else u
    window = query.T if u <= 0 else min(query.T, u ** (-2 / (query.process.alpha * query.c)))
    min_steps = query.T * settings.lambda_res / window
    N = 1 << max(int(np.ceil(np.log2(min_steps))), 1)

    if N > settings.max_grid:
        logger.warning(f'Grid resolution for u={u} requires N={N}, capping at {settings.max_grid}')
        N = settings.max_grid

    return N


def path_chunk_size(query: SupremumQuery, N: int, settings: ValidationSettings) -> int:
    """Chunk size depends on the grid only (never on the number of workers)"""
    floats_per_path = 8 * (N + 1) * query.n_components

    return int(max(1, min(settings.chunk_size, settings.memory_budget // floats_per_path)))


def sample_suprema(query: SupremumQuery, N: int, n_samples: int, seed: int, stream: int,
                   settings: ValidationSettings, desc: str, with_half_grid: bool=False) -> List[np.ndarray]:
    """
    :return: per-chunk arrays of max_k [||d * X(t_k)||_p^c + g(t_k)].
        With `with_half_grid` every row is (max over the even points t_0, t_2, ..., t_N, max over all points),
        i.e. the N/2 and N grids on the same paths.
    """
    query.process.validate_grid(query.T, N)
    times = np.linspace(0, query.T, N + 1)
    trend = None if query.trend is None else query.trend(times)

    def process_chunk(chunk_idx: int, size: int) -> np.ndarray:
        components = [sample_component_chunk(query.process, query.T, N, size, seed, stream, j, chunk_idx, settings.embedding)
                      for j in range(query.n_components)]
        values = weighted_lp_norm(np.stack(components, axis=-1), query.p, query.weights) ** query.c
        values = values if trend is None else values + trend

        if with_half_grid:
            return np.stack([values[:, ::2].max(axis=1), values.max(axis=1)], axis=1)

        return values.max(axis=1)

    return map_chunks(process_chunk, n_samples, path_chunk_size(query, N, settings),
                      threads=settings.threads, desc=desc, silent=settings.silent)


def count_hits(suprema: List[np.ndarray], u_values: Sequence[float]) -> np.ndarray:
    """Hit counts for every threshold (order-independent merge of the chunks)"""
    return np.array([sum(int((s > u).sum()) for s in suprema) for u in u_values])


@dataclass(frozen=True)
class Feasibility:
    u: float
    feasible: bool
    expected_hits: Optional[float] = None
    pilot_p_hat: Optional[float] = None
    suggested_u: Optional[float] = None


def check_feasibility(query: SupremumQuery, u_values: Sequence[float], n_samples: int, seed: int,
                      asymptotic: Optional[Callable[[float], float]]=None,
                      settings: ValidationSettings=ValidationSettings()) -> Dict[float, Feasibility]:
    """
    A threshold is accepted when the asymptotic predicts enough hits. Otherwise a pilot run decides:
    the target is infeasible if even the upper confidence bound of the pilot estimate is below 10 / n_samples.
    """
    result = {}
    undecided = []

    for u in u_values:
        expected = None if (asymptotic is None or u <= 0) else n_samples * asymptotic(u)

        if u <= 0 or (expected is not None and expected >= settings.min_expected_hits):
            result[u] = Feasibility(u, True, expected_hits=expected)
        else:
            undecided.append((u, expected))

    if len(undecided) == 0:
        return result

    N = resolve_grid(query, max(u for u, _ in undecided), settings)
    suprema = np.concatenate(sample_suprema(query, N, settings.pilot_samples, seed, STREAM_PILOT, settings, '[Pilot run]'))
    target_level = max(settings.min_expected_hits / n_samples, 1 / settings.pilot_samples)
    suggested_u = float(np.quantile(suprema, 1 - target_level))

    for u, expected in undecided:
        pilot = BernoulliEstimate(int((suprema > u).sum()), settings.pilot_samples)
        upper = pilot.p_hat + PILOT_UPPER_STDERRS * max(pilot.stderr, 1 / settings.pilot_samples)
        feasible = upper >= MIN_PILOT_HITS / n_samples

        if feasible and pilot.hits == 0:
            logger.warning(f'Pilot run saw no exceedances of u={u}: feasibility cannot be confirmed')

        result[u] = Feasibility(u, feasible, expected, pilot.p_hat, None if feasible else suggested_u)

    return result


@dataclass
class SweepResult:
    query: SupremumQuery
    seed: int
    estimates: Dict[float, MCEstimate]
    infeasible: Dict[float, Feasibility] = field(default_factory=dict)

    @property
    def u_values(self) -> List[float]:
        return sorted(list(self.estimates) + list(self.infeasible))


def refinement_increments(query: SupremumQuery, N: int, n_samples: int, seed: int, u_values: Sequence[float],
                          settings: ValidationSettings=ValidationSettings()) -> List[BernoulliEstimate]:
    """
    Paths are simulated on the 2N grid once and every u gets the frequency of
    {sup over 2N points > u >= sup over the N even points}, so both grids share the paths
    and the estimate of P_2N - P_N has the s.e. of that difference alone.
    """
    rows = np.concatenate(sample_suprema(query, 2 * N, n_samples, seed, STREAM_REFINE, settings, '[Refinement]',
                                         with_half_grid=True))
    coarse_hits = count_hits([rows[:, 0]], u_values)
    fine_hits = count_hits([rows[:, 1]], u_values)

    # The N grid is a subset of the 2N one
    assert np.all(fine_hits >= coarse_hits)

    return [BernoulliEstimate(int(f - c), n_samples) for f, c in zip(fine_hits, coarse_hits)]


def sweep_exceedance(query: SupremumQuery, u_values: Sequence[float], n_samples: int, seed: int,
                     asymptotic: Optional[Callable[[float], float]]=None,
                     settings: ValidationSettings=ValidationSettings(), refine: bool=True) -> SweepResult:
    """
    Estimates the exceedance probability for every u with common random numbers:
    one simulation on the grid of the largest feasible u, hits counted for all thresholds.
    A paired 2N refinement pass on a fraction of the samples (its own stream) measures
    how many exceedances the N grid misses.
    """
    if n_samples < 1:
        raise InvalidParameterError(f'n_samples must be positive, got: {n_samples}')

    u_values = [float(u) for u in u_values]
    feasibility = check_feasibility(query, u_values, n_samples, seed, asymptotic, settings)
    feasible_u = [u for u in u_values if feasibility[u].feasible]
    infeasible = {u: f for u, f in feasibility.items() if not f.feasible}

    for u, f in infeasible.items():
        logger.warning(f'u={u} is infeasible with {n_samples} samples (pilot p_hat: {f.pilot_p_hat}), '
                       f'suggested u: {f.suggested_u:.4g}')

    if len(feasible_u) == 0:
        return SweepResult(query, seed, {}, infeasible)

    N = resolve_grid(query, max(feasible_u), settings)
    hits = count_hits(sample_suprema(query, N, n_samples, seed, STREAM_PATHS, settings, '[Supremum MC]'), feasible_u)

    if refine:
        n_refined = max(int(np.ceil(settings.refine_fraction * n_samples)), 1)
        increments = refinement_increments(query, N, n_refined, seed, feasible_u, settings)
    else:
        n_refined, increments = None, [None] * len(feasible_u)

    estimates = {}

    for u, h, increment in zip(feasible_u, hits, increments):
        estimate = BernoulliEstimate(int(h), n_samples)
        flag = increment is not None and increment.p_hat > REFINEMENT_STDERRS * increment.stderr

        if flag:
            logger.warning(f'Doubling the grid N={N} adds {increment.p_hat:.4g} (s.e. {increment.stderr:.2g}) '
                           f'to p_hat={estimate.p_hat:.4g} at u={u}')

        estimates[u] = MCEstimate(
            u=u,
            p_hat=estimate.p_hat,
            stderr=estimate.stderr,
            hits=estimate.hits,
            n_samples=n_samples,
            N=N,
            seed=seed,
            refinement_difference=None if increment is None else increment.p_hat,
            refinement_stderr=None if increment is None else increment.stderr,
            refined_n_samples=n_refined,
            discretization_flag=flag,
        )

    return SweepResult(query, seed, estimates, infeasible)


def supremum_exceedance(query: SupremumQuery, n_samples: int, seed: int,
                        asymptotic: Optional[Callable[[float], float]]=None,
                        settings: ValidationSettings=ValidationSettings(), refine: bool=True) -> MCEstimate:
    """
    Bernoulli mean of max_k [||X(t_k) * d||_p^c + g(t_k)] > u over independent vector paths
    """
    sweep = sweep_exceedance(query, [query.u], n_samples, seed, asymptotic, settings, refine)

    if query.u in sweep.infeasible:
        f = sweep.infeasible[query.u]
        raise InfeasibleTargetError(f'Target u={query.u} is infeasible with {n_samples} samples '
                                    f'(pilot p_hat: {f.pilot_p_hat}). Try u <= {f.suggested_u:.4g}',
                                    u=query.u, suggested_u=f.suggested_u)

    return sweep.estimates[query.u]


RATIO_COLUMNS = ['u', 'p_hat', 'stderr', 'asym', 'ratio', 'ci_lo', 'ci_hi', 'n', 'N', 'seed',
                 'status', 'refined_p_hat', 'suggested_u']


@dataclass
class RatioTable:
    rows: List[Dict[str, Any]]
    convergence_band: Tuple[float, float]
    candidate: str = 'asymptotic'

    @property
    def valid_rows(self) -> List[Dict[str, Any]]:
        return [r for r in self.rows if r['status'] != 'infeasible']

    @property
    def non_converged(self) -> bool:
        """The last valid ratio CI misses the convergence band (no valid rows counts as non-converged)"""
        if len(self.valid_rows) == 0:
            return True

        last = self.valid_rows[-1]
        lo, hi = self.convergence_band

        return last['ci_hi'] < lo or last['ci_lo'] > hi

    def final_ci_contains(self, value: float=1.0) -> bool:
        return len(self.valid_rows) > 0 and self.valid_rows[-1]['ci_lo'] <= value <= self.valid_rows[-1]['ci_hi']

    def to_dict(self) -> Dict[str, Any]:
        return {'candidate': self.candidate, 'rows': self.rows, 'non_converged': self.non_converged,
                'convergence_band': list(self.convergence_band)}


def ratio_table(sweep: SweepResult, asymptotic: Callable[[float], float], candidate: str='asymptotic',
                settings: ValidationSettings=ValidationSettings()) -> RatioTable:
    """
    Rows (u, p_hat, stderr, asym, ratio, ratio CI): every u stands alone, ratios are never averaged
    """
    rows = []

    for u in sweep.u_values:
        asym = float(asymptotic(u))

        if u in sweep.infeasible:
            rows.append({'u': u, 'p_hat': None, 'stderr': None, 'asym': asym, 'ratio': None, 'ci_lo': None,
                         'ci_hi': None, 'n': None, 'N': None, 'seed': sweep.seed, 'status': 'infeasible',
                         'refined_p_hat': None, 'suggested_u': sweep.infeasible[u].suggested_u})
            continue

        estimate = sweep.estimates[u]
        ci_lo, ci_hi = estimate.ci(settings.ci_level)
        rows.append({
            'u': u,
            'p_hat': estimate.p_hat,
            'stderr': estimate.stderr,
            'asym': asym,
            'ratio': estimate.p_hat / asym,
            'ci_lo': ci_lo / asym,
            'ci_hi': ci_hi / asym,
            'n': estimate.n_samples,
            'N': estimate.N,
            'seed': estimate.seed,
            'status': 'refinement_mismatch' if estimate.discretization_flag else 'ok',
            'refined_p_hat': estimate.refined_p_hat,
            'suggested_u': None,
        })

    return RatioTable(rows, settings.convergence_band, candidate)


def ratio_curve(query: SupremumQuery, u_values: Sequence[float], asymptotic: Callable[[float], float],
                n_samples: int, seed: int, settings: ValidationSettings=ValidationSettings()) -> RatioTable:
    if any(u2 <= u1 for u1, u2 in zip(u_values[:-1], u_values[1:])):
        raise InvalidParameterError(f'u values must be increasing: {u_values}')

    sweep = sweep_exceedance(query, u_values, n_samples, seed, asymptotic, settings)

    return ratio_table(sweep, asymptotic, settings=settings)


def ruin_query(alpha: float, weights: Union[WeightVector, Sequence[float]], w_premium: float, u: float=0.0) -> SupremumQuery:
    """inf_{[0,1]} (u + w t - X(t)) < 0 iff max_t [sum_i d_i^2 B_i(t)^2 - w t] > u"""
    weights = WeightVector.of(weights)
    return SupremumQuery(FractionalBM(alpha), weights.n, weights, 2.0, 2.0, 1.0, u, PowerTrend(w_premium, 1.0, 0.0))


def ruin_mc(alpha: float, weights: Union[WeightVector, Sequence[float]], w_premium: float, u: float, n_samples: int, seed: int,
            asymptotic: Optional[Callable[[float], float]]=None, settings: ValidationSettings=ValidationSettings()) -> MCEstimate:
    if w_premium < 0:
        raise InvalidParameterError(f'The premium rate must be non-negative, got: {w_premium}')

    return supremum_exceedance(ruin_query(alpha, weights, w_premium, u), n_samples, seed, asymptotic, settings)


@dataclass
class ArbitrationVerdict:
    tables: Dict[str, RatioTable]

    @property
    def contains_one(self) -> Dict[str, bool]:
        return {name: table.final_ci_contains(1.0) for name, table in self.tables.items()}

    @property
    def verdict(self) -> str:
        winners = [name for name, ok in self.contains_one.items() if ok]
        return winners[0] if len(winners) == 1 else 'undecided'

    def to_dict(self) -> Dict[str, Any]:
        final = {name: (t.valid_rows[-1]['ratio'] if t.valid_rows else None) for name, t in self.tables.items()}

        return {'verdict': self.verdict, 'contains_one': self.contains_one, 'final_ratios': final,
                'tables': {name: t.to_dict() for name, t in self.tables.items()}}


def arbitrate_candidates(sweep: SweepResult, candidates: Dict[str, Callable[[float], float]],
                         settings: ValidationSettings=ValidationSettings()) -> ArbitrationVerdict:
    """The candidate whose final ratio CI alone contains 1 wins"""
    return ArbitrationVerdict({name: ratio_table(sweep, fn, name, settings) for name, fn in candidates.items()})


def format_cell(value: Any) -> str:
    if value is None:
        return ''
    elif isinstance(value, float):
        return repr(float(value))
    else:
        return str(value)


def write_ratio_csv(table: RatioTable, path: os.PathLike):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(RATIO_COLUMNS)

        for row in table.rows:
            writer.writerow([format_cell(row[col]) for col in RATIO_COLUMNS])


def arbitration_verdict(verdict: ArbitrationVerdict, path: os.PathLike, manifest: Dict[str, Any]=None):
    record = verdict.to_dict()

    if manifest is not None:
        record['manifest'] = manifest

    with open(path, 'w') as f:
        json.dump(record, f, indent=2, sort_keys=True, default=str)
        f.write('\n')
