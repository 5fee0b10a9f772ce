"""
Monte Carlo estimation of the Pickands constants H_alpha, H_alpha[-S1, S2]
and of the generalized Piterbarg constants P^f_{alpha,a}[Q, inf).
Closed forms for alpha in {1, 2} serve as exact oracles.
"""
import logging
from dataclasses import dataclass, field, asdict
from typing import Callable, Dict, Any, List, Optional, Sequence

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp

from src.geometry.norm_geometry import dual_exponent
from src.sampling.circulant import EmbeddingSettings
from src.sampling.gaussian_paths import FractionalBM, check_alpha
from src.sampling.streams import make_rng
from src.utils.constants import NEG_INF, STREAM_CONSTANTS
from src.utils.errors import InvalidParameterError, TruncationError
from src.utils.parallel import map_chunks
from src.utils.stats import MomentSums, combined_stderr

logger = logging.getLogger(__name__)

MAX_DELTA = 0.05
MIN_PICKANDS_WINDOW = 20.0
PICKANDS_METHODS = ('ratio', 'window')
STABILITY_SLACK = 0.05


@dataclass(frozen=True)
class DriftFunctional:
    """
    f(t) = b_eff |t|^beta + w_eff |t|^gamma on [Q, inf) with Q in {0, -inf}
    """
    b_eff: float = 0.0
    beta: float = 1.0
    w_eff: float = 0.0
    gamma: float = 1.0
    domain_start: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.b_eff) and self.b_eff >= 0):
            raise InvalidParameterError(f'b_eff must be finite and non-negative, got: {self.b_eff}')
        if not np.isfinite(self.w_eff):
            raise InvalidParameterError(f'w_eff must be finite, got: {self.w_eff}')

        for name in ['beta', 'gamma']:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParameterError(f'{name} must be positive, got: {value}')

        # A negative w-term is allowed only under a dominating b-term, so that f -> inf
        if self.w_eff < 0 and not (self.b_eff > 0 and self.beta > self.gamma):
            raise InvalidParameterError(f'w_eff < 0 needs b_eff > 0 and beta > gamma, got: {self.to_dict()}')

        if self.domain_start not in (0.0, NEG_INF):
            raise InvalidParameterError(f'Domain start must be 0 or -inf, got: {self.domain_start}')

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=np.float64))
        return self.b_eff * t ** self.beta + self.w_eff * t ** self.gamma

    @property
    def is_zero(self) -> bool:
        return self.b_eff == 0 and self.w_eff == 0

    @property
    def two_sided(self) -> bool:
        return self.domain_start == NEG_INF

    def power_coefficient(self, exponent: float) -> Optional[float]:
        """If f(t) = k |t|^exponent, returns k (0 for f = 0), otherwise None"""
        terms = [(self.b_eff, self.beta), (self.w_eff, self.gamma)]

        if any(coef != 0 and power != exponent for coef, power in terms):
            return None

        return sum(coef for coef, _ in terms)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def power(cls, coefficient: float, exponent: float, domain_start: float=0.0) -> "DriftFunctional":
        return cls(b_eff=coefficient, beta=exponent, domain_start=domain_start)


@dataclass(frozen=True)
class ConstantEstimate:
    name: str
    value: float
    stderr: float
    n_samples: int
    seed: int
    delta: float
    S1: float
    S2: float
    method: str
    parameters: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        assert self.value > 0, f'Constant estimate should be positive: {self.value}'
        assert self.stderr >= 0, f'Standard error should be non-negative: {self.stderr}'

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class WindowGrid:
    """Grid t_k = (k - anchor) * delta, k = 0..num_points-1, covering [-S1, S2]"""
    delta: float
    anchor: int
    num_points: int

    @classmethod
    def covering(cls, S1: float, S2: float, delta: float) -> "WindowGrid":
        anchor = int(round(S1 / delta))
        return cls(delta, anchor, anchor + int(round(S2 / delta)) + 1)

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.num_points) - self.anchor) * self.delta

    @property
    def n_steps(self) -> int:
        return max(2, 1 << max(self.num_points - 2, 0).bit_length())

    def index_of(self, t: float) -> int:
        return self.anchor + int(round(t / self.delta))


def sample_two_sided_fbm(alpha: float, grid: WindowGrid, size: int, rng: np.random.Generator,
                         settings: EmbeddingSettings=EmbeddingSettings()) -> np.ndarray:
    """
    Two-sided fBm on the window grid: one-sided increments re-anchored at the grid point t = 0
    """
    paths = FractionalBM(alpha).sample_block(grid.n_steps * grid.delta, grid.n_steps, size, rng, settings)
    paths = paths[:, :grid.num_points]

    return paths - paths[:, grid.anchor:grid.anchor + 1]


def log_field(paths: np.ndarray, times: np.ndarray, alpha: float, a: float, f: DriftFunctional=None) -> np.ndarray:
    """sqrt(2a) B(t) - a |t|^alpha - f(t)"""
    result = np.sqrt(2 * a) * paths - a * np.abs(times) ** alpha

    return result if f is None else result - f(times)


def parabola_log_sup(z: np.ndarray, a: float, k: float, lo: float, hi: float) -> np.ndarray:
    """
    Exact max over t in [lo, hi] of sqrt(2a) t z - k t^2 (the alpha = 2 field with a quadratic drift)
    """
    t_star = np.clip(np.sqrt(2 * a) * z / (2 * k), lo, hi)

    return np.sqrt(2 * a) * t_star * z - k * t_star ** 2


def run_chunks(statistic: Callable[[np.random.Generator, int], np.ndarray], n_samples: int, seed: int,
               chunk_size: int, threads: Optional[int], desc: str, silent: bool) -> List[MomentSums]:
    """
    :param statistic: maps (rng, size) to per-sample values of shape [size, k]
    :return: k merged moment sums
    """
    if n_samples < 2:
        raise InvalidParameterError(f'At least 2 samples are required, got: {n_samples}')

    def process_chunk(chunk_idx: int, size: int) -> List[MomentSums]:
        values = statistic(make_rng(seed, STREAM_CONSTANTS, chunk_idx), size)
        return [MomentSums.of(col) for col in values.reshape(size, -1).T]

    chunks = map_chunks(process_chunk, n_samples, chunk_size, threads=threads, desc=desc, silent=silent)

    return [MomentSums.merge(parts) for parts in zip(*chunks)]


def check_delta(delta: float):
    if not (0 < delta <= MAX_DELTA):
        raise InvalidParameterError(f'delta must lie in (0, {MAX_DELTA}], got: {delta}')


def pickands_window_profile(alpha: float, S1: float, S2_values: Sequence[float], delta: float=0.005,
                            n_samples: int=5000, seed: int=1, closed_form_sup: bool=False, chunk_size: int=100,
                            threads: int=None, settings: EmbeddingSettings=EmbeddingSettings(),
                            silent: bool=True) -> List[ConstantEstimate]:
    """
    H_alpha[-S1, S2] for several S2 with common random numbers:
    the paths are simulated once on the largest window and every S2 takes the sup over its prefix.
    """
    check_alpha(alpha)
    check_delta(delta)
    S2_values = [float(s) for s in S2_values]

    if S1 < 0 or min(S2_values) < 0 or max([S1] + S2_values) <= 0:
        raise InvalidParameterError(f'Window bounds should be non-negative and not both zero: S1={S1}, S2={S2_values}')
    if closed_form_sup and alpha != 2:
        raise InvalidParameterError('Closed form per-sample sup is only available for alpha = 2')

    grid = WindowGrid.covering(S1, max(S2_values), delta)
    ends = [grid.index_of(s) for s in S2_values]

    def statistic(rng: np.random.Generator, size: int) -> np.ndarray:
        if closed_form_sup:
            z = rng.standard_normal(size)
            return np.stack([np.exp(parabola_log_sup(z, 1.0, 1.0, -S1, s)) for s in S2_values], axis=1)

        running_max = np.maximum.accumulate(log_field(sample_two_sided_fbm(alpha, grid, size, rng, settings), grid.times, alpha, 1.0), axis=1)
        return np.exp(running_max[:, ends])

    sums = run_chunks(statistic, n_samples, seed, chunk_size, threads, desc='[Pickands window]', silent=silent)

    return [ConstantEstimate(
        name='pickands_window',
        value=s.mean,
        stderr=s.stderr,
        n_samples=n_samples,
        seed=seed,
        delta=delta,
        S1=float(S1),
        S2=S2,
        method='closed_form_sup' if closed_form_sup else 'grid',
        parameters={'alpha': alpha},
    ) for s, S2 in zip(sums, S2_values)]


def pickands_window(alpha: float, S1: float, S2: float, delta: float=0.005, n_samples: int=5000, seed: int=1,
                    closed_form_sup: bool=False, **kwargs) -> ConstantEstimate:
    """
    MC estimate of H_alpha[-S1, S2] = E sup_{t in [-S1, S2]} exp(sqrt(2) B_alpha(t) - |t|^alpha)
    """
    return pickands_window_profile(alpha, S1, [S2], delta, n_samples, seed, closed_form_sup, **kwargs)[0]


def pickands_constant(alpha: float, S: float=50.0, delta: float=0.005, n_samples: int=5000, seed: int=1,
                      method: str='ratio', chunk_size: int=100, threads: int=None,
                      settings: EmbeddingSettings=EmbeddingSettings(), silent: bool=True) -> ConstantEstimate:
    """
    Estimates H_alpha with one of the two estimators:
        - window: H_alpha[0, S] / S (its variance grows with S)
        - ratio: E[sup e^Y / int e^Y] over [-S, S] with Y(t) = sqrt(2) B_alpha(t) - |t|^alpha
          (finite variance, exact for alpha = 2)

    The default is `ratio` (also `constants.pickands_method` in configs/base.yml), so
    `constants pickands` reports the ratio estimate unless `--method window` asks for H_alpha[0, S] / S.

    :param S: window size (at least 20)
    :return: estimate carrying S so that callers can extrapolate over increasing windows
    """
    check_alpha(alpha)
    check_delta(delta)

    if S < MIN_PICKANDS_WINDOW:
        raise InvalidParameterError(f'S should be at least {MIN_PICKANDS_WINDOW}, got: {S}')
    if method not in PICKANDS_METHODS:
        raise InvalidParameterError(f'Unknown Pickands estimator: {method}. Known: {PICKANDS_METHODS}')

    if method == 'window':
        window = pickands_window(alpha, 0.0, S, delta, n_samples, seed, closed_form_sup=(alpha == 2),
                                 chunk_size=chunk_size, threads=threads, settings=settings, silent=silent)
        return ConstantEstimate('pickands', window.value / S, window.stderr / S, n_samples, seed, delta,
                                0.0, float(S), 'window', {'alpha': alpha})

    grid = WindowGrid.covering(S, S, delta)
    times = grid.times

    def statistic(rng: np.random.Generator, size: int) -> np.ndarray:
        if alpha == 2:
            z = rng.standard_normal(size)
            y = np.sqrt(2) * times[None, :] * z[:, None] - times ** 2
            log_sup = parabola_log_sup(z, 1.0, 1.0, -S, S)
        else:
            y = log_field(sample_two_sided_fbm(alpha, grid, size, rng, settings), times, alpha, 1.0)
            log_sup = y.max(axis=1)

        return np.exp(log_sup - logsumexp(y, axis=1) - np.log(delta))

    sums = run_chunks(statistic, n_samples, seed, chunk_size, threads, desc='[Pickands constant]', silent=silent)[0]

    return ConstantEstimate('pickands', sums.mean, sums.stderr, n_samples, seed, delta,
                            float(S), float(S), 'ratio', {'alpha': alpha})


@dataclass(frozen=True)
class StabilityCheck:
    estimates: List[ConstantEstimate]
    difference: float
    threshold: float

    @property
    def stable(self) -> bool:
        return self.difference < self.threshold

    def to_dict(self) -> Dict[str, Any]:
        return {'estimates': [e.to_dict() for e in self.estimates], 'difference': self.difference,
                'threshold': self.threshold, 'stable': self.stable}


def pickands_stability(alpha: float, S_values: Sequence[float]=(25.0, 50.0), **kwargs) -> StabilityCheck:
    """
    Estimates at the two windows should differ by less than 2 combined s.e. + 0.05
    """
    first, second = [pickands_constant(alpha, S, **kwargs) for S in S_values]

    return StabilityCheck(
        estimates=[first, second],
        difference=abs(first.value - second.value),
        threshold=2 * combined_stderr(first.stderr, second.stderr) + STABILITY_SLACK,
    )


def minimal_truncation_window(alpha: float, a: float, f: DriftFunctional, truncation_exponent: float=40.0) -> float:
    """
    Smallest S with a S^alpha + f(S) >= truncation_exponent
    """
    check_alpha(alpha)

    def excess(S):
        return a * S ** alpha + f(S) - truncation_exponent

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2

    return bisect(excess, 0.0, hi, xtol=1e-12)


def piterbarg_constant(alpha: float, a: float, f: DriftFunctional, S: float=None, delta: float=0.005,
                       n_samples: int=5000, seed: int=1, truncation_exponent: float=40.0,
                       chunk_size: int=100, threads: int=None, settings: EmbeddingSettings=EmbeddingSettings(),
                       silent: bool=True) -> ConstantEstimate:
    """
    MC estimate of P^f_{alpha,a}[Q, inf) = E sup_{t >= Q} exp(sqrt(2a) B_alpha(t) - a|t|^alpha - f(t)),
    truncated to [max(Q, -S), S]. For alpha = 2 and a quadratic f the per-sample sup is exact.

    :param S: truncation window (the minimal safe window if None)
    """
    check_alpha(alpha)
    check_delta(delta)

    if not (np.isfinite(a) and a > 0):
        raise InvalidParameterError(f'a must be positive, got: {a}')

    min_S = minimal_truncation_window(alpha, a, f, truncation_exponent)

    if S is None:
        S = np.ceil(min_S / delta) * delta
    elif a * S ** alpha + f(S) < truncation_exponent:
        raise TruncationError(f'Window S={S} violates the truncation rule a*S^alpha + f(S) >= {truncation_exponent}. '
                              f'The minimal S is {min_S:.6g}', min_S=min_S)

    lo = -S if f.two_sided else 0.0
    quadratic = f.power_coefficient(2.0) if alpha == 2 else None

    if quadratic is not None:
        def statistic(rng: np.random.Generator, size: int) -> np.ndarray:
            return np.exp(parabola_log_sup(rng.standard_normal(size), a, a + quadratic, lo, S))
    else:
        grid = WindowGrid.covering(-lo, S, delta)

        def statistic(rng: np.random.Generator, size: int) -> np.ndarray:
            paths = sample_two_sided_fbm(alpha, grid, size, rng, settings)
            return np.exp(log_field(paths, grid.times, alpha, a, f).max(axis=1))

    sums = run_chunks(statistic, n_samples, seed, chunk_size, threads, desc='[Piterbarg constant]', silent=silent)[0]

    return ConstantEstimate(
        name='piterbarg',
        value=sums.mean,
        stderr=sums.stderr,
        n_samples=n_samples,
        seed=seed,
        delta=delta,
        S1=float(-lo),
        S2=float(S),
        method='closed_form_sup' if quadratic is not None else 'grid',
        parameters={'alpha': alpha, 'a': a, 'f': f.to_dict()},
    )


def piterbarg_closed_form(alpha: float, a: float, b: float, two_sided: bool=False) -> float:
    """
    Exact P^{b|t|^alpha}_{alpha,a} for alpha in {1, 2}:
        one-sided [0, inf): 1 + a/b (alpha=1) and (1 + sqrt(1 + a/b)) / 2 (alpha=2)
        two-sided (-inf, inf): 1 + 2a/b - a/(a + 2b) (alpha=1) and sqrt(1 + a/b) (alpha=2)
    """
    if alpha not in (1, 2):
        raise InvalidParameterError(f'Closed form Piterbarg constants are only known for alpha in {{1, 2}}, got: {alpha}')
    if not (a > 0 and b > 0):
        raise InvalidParameterError(f'a and b must be positive, got: a={a}, b={b}')

    if alpha == 1:
        return 1 + 2 * a / b - a / (a + 2 * b) if two_sided else 1 + a / b
    else:
        return np.sqrt(1 + a / b) if two_sided else (1 + np.sqrt(1 + a / b)) / 2


@dataclass(frozen=True)
class IdentityCheck:
    p: float
    estimate: ConstantEstimate
    target: float

    def within(self, num_stderrs: float=3.0) -> bool:
        return abs(self.estimate.value - self.target) <= num_stderrs * self.estimate.stderr

    def to_dict(self) -> Dict[str, Any]:
        return {'p': self.p, 'estimate': self.estimate.to_dict(), 'target': self.target}


def piterbarg_two_sided_identity(p: float, n_samples: int=20000, seed: int=1, **kwargs) -> IdentityCheck:
    """
    Estimates P^{(q-2)t^2}_{2,1}(-inf, inf), which equals (2-p)^{-1/2} for p in (1, 2)
    """
    if not (1 < p < 2):
        raise InvalidParameterError(f'The identity needs p in (1, 2), got: {p}')

    q = dual_exponent(p)
    f = DriftFunctional.power(q - 2, 2.0, domain_start=NEG_INF)
    estimate = piterbarg_constant(2.0, 1.0, f, n_samples=n_samples, seed=seed, **kwargs)

    return IdentityCheck(p=p, estimate=estimate, target=(2 - p) ** -0.5)
