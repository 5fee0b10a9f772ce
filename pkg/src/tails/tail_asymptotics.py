"""
Evaluable asymptotics of P{sup_{[0,T]} (Z^c(t) + g(t)) > u} for the L^p norm process Z(t):
non-stationary processes with trend, centered and trended locally stationary processes,
the two worked examples, the ruin probability and the Ornstein-Uhlenbeck chi-square process.
"""
import logging
from dataclasses import dataclass, field, replace, asdict
from enum import Enum
from functools import lru_cache
from typing import Optional, Tuple, Union, Sequence, Dict, Any, List

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect
from scipy.special import gamma as gamma_fn

from src.constants.extreme_constants import DriftFunctional, pickands_constant, piterbarg_constant, piterbarg_closed_form
from src.geometry.norm_geometry import NormOrder, WeightVector, critical_scale
from src.sampling.gaussian_paths import check_alpha
from src.tails.pointwise_tail import PointwiseTail, pointwise_tail_asymptotic, check_power_exponent
from src.utils.constants import NEG_INF
from src.utils.errors import InvalidParameterError, UnresolvedConstantError, LpTailError

logger = logging.getLogger(__name__)

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class NonStationaryLocalModel:
    """
    sigma(t) = 1 - b|t - t0|^beta (1 + o(1)) and r(s, t) = 1 - a|t - s|^alpha (1 + o(1)) around t0
    """
    b: float
    beta: float
    a: float
    alpha: float
    t0: float
    T: float

    def __post_init__(self):
        for name in ['b', 'beta', 'a', 'T']:
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f'{name} must be positive, got: {getattr(self, name)}')

        check_alpha(self.alpha)

        if not (0 <= self.t0 <= self.T):
            raise InvalidParameterError(f't0 must lie in [0, T], got: t0={self.t0}, T={self.T}')

    @property
    def domain_start(self) -> float:
        return domain_start_at(self.t0, self.T)


def domain_start_at(t0: float, T: float) -> float:
    """Q = -inf for an interior point and Q = 0 at the endpoints (exact comparison)"""
    return 0.0 if t0 in (0, T) else NEG_INF


@dataclass(frozen=True)
class TrendLocalModel:
    """g(t) ~ -w|t - t0|^gamma around t0"""
    w: float
    gamma: float
    t0: float

    def __post_init__(self):
        if not np.isfinite(self.w):
            raise InvalidParameterError(f'w must be finite, got: {self.w}')
        if not self.gamma > 0:
            raise InvalidParameterError(f'gamma must be positive, got: {self.gamma}')


class Regime(Enum):
    PICKANDS = 'PickandsCase'
    PITERBARG = 'PiterbargCase'
    POINTWISE = 'PointwiseCase'


@dataclass(frozen=True)
class RegimeClassification:
    alpha_star: float
    beta_star: float
    case: Regime
    includes_b: bool
    includes_w: bool
    f: Optional[DriftFunctional] = None
    Q: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alpha_star': self.alpha_star,
            'beta_star': self.beta_star,
            'case': self.case.value,
            'includes_b': self.includes_b,
            'includes_w': self.includes_w,
            'f': None if self.f is None else self.f.to_dict(),
            'Q': self.Q,
        }


def is_tie(x: float, y: float) -> bool:
    return bool(np.isclose(x, y, rtol=TIE_RTOL, atol=0))


def classify_regime(alpha: float, c: float, beta: Optional[float], gamma: Optional[float]=None) -> RegimeClassification:
    """
    alpha* = alpha c and beta* = min(beta c, 2 gamma c / (2 - c)) for c < 2 (beta c otherwise).
    `beta=None` stands for a stationary variance, `gamma=None` for the absence of a trend.
    """
    check_alpha(alpha)
    c = check_power_exponent(c)

    if beta is not None and not beta > 0:
        raise InvalidParameterError(f'beta must be positive, got: {beta}')
    if gamma is not None and not gamma > 0:
        raise InvalidParameterError(f'gamma must be positive, got: {gamma}')

    variance_exponent = None if beta is None else beta * c
    trend_exponent = 2 * gamma * c / (2 - c) if (gamma is not None and c < 2) else None
    candidates = [e for e in [variance_exponent, trend_exponent] if e is not None]

    if len(candidates) == 0:
        raise InvalidParameterError('Neither a variance decay nor a trend decay determines beta*')

    beta_star = min(candidates)
    alpha_star = alpha * c
    includes_b = variance_exponent is not None and is_tie(beta_star, variance_exponent)
    includes_w = trend_exponent is not None and is_tie(beta_star, trend_exponent)

    if is_tie(alpha_star, beta_star):
        case = Regime.PITERBARG
    elif alpha_star < beta_star:
        case = Regime.PICKANDS
    else:
        case = Regime.POINTWISE

    return RegimeClassification(alpha_star, beta_star, case, includes_b, includes_w)


def drift_functional(model: NonStationaryLocalModel, trend: Optional[TrendLocalModel], c: float, d: float) -> Tuple[DriftFunctional, RegimeClassification]:
    """
    f(t) = b|t|^beta / d^2 [beta* = beta c] + w|t|^gamma / (c d^2) [beta* = 2 gamma c / (2 - c)]

    :return: f together with the regime it was built for
    """
    has_trend = trend is not None and trend.w != 0
    regime = classify_regime(model.alpha, c, model.beta, trend.gamma if has_trend else None)

    if has_trend and trend.w < 0 and regime.includes_w and not regime.includes_b:
        # Without the b-term f is negative everywhere and the multiplier diverges
        raise InvalidParameterError(f'w < 0 requires gamma >= (2 - c) beta / 2 for c < 2, '
                                    f'got: gamma={trend.gamma}, beta={model.beta}, c={c}')

    f = DriftFunctional(
        b_eff=model.b / d ** 2 if regime.includes_b else 0.0,
        beta=model.beta,
        w_eff=trend.w / (c * d ** 2) if (has_trend and regime.includes_w) else 0.0,
        gamma=trend.gamma if has_trend else 1.0,
        domain_start=model.domain_start,
    )

    return f, replace(regime, f=f, Q=f.domain_start)


def integral_exp_neg_f(f: DriftFunctional, abs_tol: float=1e-10, truncation: float=46.0) -> float:
    """
    int_Q^inf exp(-f(t)) dt, truncated where f(t) = truncation; Q = -inf is a symmetric doubling
    """
    if f.is_zero:
        raise InvalidParameterError('The integral of exp(-f) diverges for f = 0')

    upper = 1.0
    while f(upper) < truncation:
        upper *= 2
    upper = bisect(lambda t: f(t) - truncation, 0.0, upper, xtol=1e-12)

    half, _ = quad(lambda t: np.exp(-f(t)), 0.0, upper, epsabs=abs_tol, epsrel=1e-12, limit=200)

    return 2 * half if f.two_sided else half


@dataclass(frozen=True)
class ConstantBudget:
    """Settings for constants which have no closed form"""
    n_samples: int = 20000
    seed: int = 1
    pickands_S: float = 50.0
    delta: float = 0.005
    pickands_method: str = 'ratio'
    truncation_exponent: float = 40.0
    chunk_size: int = 100
    threads: Optional[int] = None
    quad_abs_tol: float = 1e-10
    quad_truncation: float = 46.0

    @classmethod
    def from_config(cls, config, threads: int=None) -> "ConstantBudget":
        return cls(
            n_samples=config.get('asymptotics.mc_constant_samples'),
            seed=config.get('asymptotics.mc_constant_seed'),
            pickands_S=config.get('constants.S'),
            delta=config.get('constants.delta'),
            pickands_method=config.get('constants.pickands_method'),
            truncation_exponent=config.get('constants.truncation_exponent'),
            chunk_size=config.get('constants.chunk_size'),
            threads=threads,
            quad_abs_tol=config.get('asymptotics.quad_abs_tol'),
            quad_truncation=config.get('asymptotics.quad_truncation'),
        )


@dataclass(frozen=True)
class ResolvedConstant:
    name: str
    value: float
    stderr: Optional[float]
    provenance: str # closed_form | monte_carlo | quadrature
    parameters: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@lru_cache(maxsize=64)
def resolve_pickands(alpha: float, budget: ConstantBudget=ConstantBudget()) -> ResolvedConstant:
    if alpha == 1:
        return ResolvedConstant('H', 1.0, None, 'closed_form', {'alpha': alpha})
    if alpha == 2:
        return ResolvedConstant('H', 1 / np.sqrt(np.pi), None, 'closed_form', {'alpha': alpha})

    logger.info(f'Estimating the Pickands constant for alpha={alpha} with {budget.n_samples} samples')

    try:
        estimate = pickands_constant(alpha, S=budget.pickands_S, delta=budget.delta, n_samples=budget.n_samples,
                                     seed=budget.seed, method=budget.pickands_method,
                                     chunk_size=budget.chunk_size, threads=budget.threads)
    except LpTailError as e:
        raise UnresolvedConstantError(f'Could not estimate the Pickands constant: {e}', 'H', {'alpha': alpha}) from e

    return ResolvedConstant('H', estimate.value, estimate.stderr, 'monte_carlo', estimate.to_dict())


@lru_cache(maxsize=64)
def resolve_piterbarg(alpha: float, a: float, f: DriftFunctional, budget: ConstantBudget=ConstantBudget()) -> ResolvedConstant:
    parameters = {'alpha': alpha, 'a': a, 'f': f.to_dict()}
    power_coef = f.power_coefficient(alpha)

    if alpha in (1, 2) and power_coef is not None and power_coef > 0:
        value = piterbarg_closed_form(alpha, a, power_coef, two_sided=f.two_sided)
        return ResolvedConstant('P', float(value), None, 'closed_form', parameters)

    if f.is_zero:
        raise UnresolvedConstantError('The Piterbarg constant is infinite for f = 0', 'P', parameters)

    logger.info(f'Estimating the Piterbarg constant {parameters} with {budget.n_samples} samples')

    try:
        estimate = piterbarg_constant(alpha, a, f, S=None, delta=budget.delta, n_samples=budget.n_samples,
                                      seed=budget.seed, truncation_exponent=budget.truncation_exponent,
                                      chunk_size=budget.chunk_size, threads=budget.threads)
    except LpTailError as e:
        raise UnresolvedConstantError(f'Could not estimate the Piterbarg constant: {e}', 'P', parameters) from e

    return ResolvedConstant('P', estimate.value, estimate.stderr, 'monte_carlo', estimate.to_dict())


class MultiplierKind(Enum):
    PICKANDS_INTEGRAL = 'PickandsIntegral'
    PITERBARG_CONSTANT = 'PiterbargConstant'
    UNITY = 'Unity'
    LOCALLY_STATIONARY_INTEGRAL = 'LocallyStationaryIntegral'


@dataclass(frozen=True)
class TailApproximation:
    """
    evaluate(u) = multiplier_constant * u^multiplier_power * pointwise.evaluate(u)
    """
    formula_id: str
    pointwise: PointwiseTail
    multiplier_kind: MultiplierKind
    multiplier_constant: float
    multiplier_power: float
    constants: Tuple[ResolvedConstant, ...] = ()
    regime: Optional[RegimeClassification] = None

    def __post_init__(self):
        assert self.multiplier_constant > 0, f'Multiplier should be positive: {self.multiplier_constant}'

    @property
    def u_power(self) -> float:
        return self.pointwise.u_power + self.multiplier_power

    def multiplier(self, u):
        return self.multiplier_constant * np.asarray(u, dtype=np.float64) ** self.multiplier_power

    def evaluate(self, u, mills: bool=False):
        result = self.multiplier(u) * self.pointwise.evaluate(u, mills=mills)
        return result.item() if np.ndim(result) == 0 else result

    @property
    def relative_stderr(self) -> float:
        """The multiplier is linear in every Monte Carlo constant, so relative errors add in quadrature"""
        rel = [c.stderr / c.value for c in self.constants if c.provenance == 'monte_carlo']
        return float(np.sqrt(np.sum(np.square(rel)))) if rel else 0.0

    def evaluate_band(self, u, num_stderrs: float=2.0, mills: bool=False) -> Tuple[float, float]:
        value = self.evaluate(u, mills=mills)
        spread = num_stderrs * self.relative_stderr

        return value * max(1 - spread, 0.0), value * (1 + spread)

    def to_dict(self, u_values: Sequence[float]=(), mills: bool=False) -> Dict[str, Any]:
        return {
            'formula_id': self.formula_id,
            'regime': None if self.regime is None else self.regime.to_dict(),
            'multiplier_kind': self.multiplier_kind.value,
            'multiplier_constant': self.multiplier_constant,
            'multiplier_power': self.multiplier_power,
            'u_power': self.u_power,
            'pointwise': self.pointwise.to_dict(),
            'constants': [c.to_dict() for c in self.constants],
            'evaluate_samples': [[u, self.evaluate(u, mills=mills)] for u in u_values],
            'evaluate_bands': [[u, *self.evaluate_band(u, mills=mills)] for u in u_values] if self.relative_stderr > 0 else [],
        }


def assemble_regime_tail(formula_id: str, pointwise: PointwiseTail, regime: RegimeClassification, alpha: float, a: float,
                         d: float, budget: ConstantBudget) -> TailApproximation:
    """
    Shared three-case multiplier:
        Pickands: u^{2/alpha* - 2/beta*} a^{1/alpha} d^{-2/alpha} H_alpha int_Q^inf e^{-f}
        Piterbarg: P^f_{alpha, a/d^2}[Q, inf)
        Pointwise: 1
    """
    f = regime.f

    if regime.case == Regime.PICKANDS:
        pickands = resolve_pickands(alpha, budget)
        integral = integral_exp_neg_f(f, budget.quad_abs_tol, budget.quad_truncation)
        integral_constant = ResolvedConstant('int_exp_neg_f', integral, None, 'quadrature', {'f': f.to_dict()})

        return TailApproximation(
            formula_id=formula_id,
            pointwise=pointwise,
            multiplier_kind=MultiplierKind.PICKANDS_INTEGRAL,
            multiplier_constant=a ** (1 / alpha) * d ** (-2 / alpha) * pickands.value * integral,
            multiplier_power=2 / regime.alpha_star - 2 / regime.beta_star,
            constants=(pickands, integral_constant),
            regime=regime,
        )
    elif regime.case == Regime.PITERBARG:
        piterbarg = resolve_piterbarg(alpha, a / d ** 2, f, budget)

        return TailApproximation(formula_id, pointwise, MultiplierKind.PITERBARG_CONSTANT, piterbarg.value, 0.0, (piterbarg,), regime)
    else:
        return TailApproximation(formula_id, pointwise, MultiplierKind.UNITY, 1.0, 0.0, (), regime)


def nonstationary_supremum_tail(p: Union[NormOrder, float], c: float, weights: Union[WeightVector, Sequence[float]],
                                model: NonStationaryLocalModel, trend: Optional[TrendLocalModel]=None,
                                budget: ConstantBudget=ConstantBudget()) -> TailApproximation:
    """
    Non-stationary process whose standard deviation attains its unique maximum 1 at t0,
    with a trend g(t) ~ -w|t - t0|^gamma (for c < 2, w < 0 needs gamma >= (2 - c) beta / 2)
    """
    if trend is not None and trend.t0 != model.t0:
        raise InvalidParameterError(f'Trend and variance must peak at the same t0: {trend.t0} != {model.t0}')

    pointwise = pointwise_tail_asymptotic(p, c, weights)
    _, regime = drift_functional(model, trend, c, pointwise.scale)

    return assemble_regime_tail('thm31', pointwise, regime, model.alpha, model.a, pointwise.scale, budget)


def centered_nonstationary_tail(p: Union[NormOrder, float], c: float, weights: Union[WeightVector, Sequence[float]],
                                model: NonStationaryLocalModel, budget: ConstantBudget=ConstantBudget()) -> TailApproximation:
    """
    The trend-free case assembled on its own: the regime is decided by alpha vs beta and
    int_Q^inf exp(-b|t|^beta / d^2) dt = Gamma(1 + 1/beta) (d^2 / b)^{1/beta} (doubled for Q = -inf)
    """
    pointwise = pointwise_tail_asymptotic(p, c, weights)
    d = pointwise.scale
    f = DriftFunctional.power(model.b / d ** 2, model.beta, domain_start=model.domain_start)
    regime = RegimeClassification(
        alpha_star=model.alpha * c,
        beta_star=model.beta * c,
        case=Regime.PITERBARG if is_tie(model.alpha, model.beta) else (Regime.PICKANDS if model.alpha < model.beta else Regime.POINTWISE),
        includes_b=True,
        includes_w=False,
        f=f,
        Q=f.domain_start,
    )

    if regime.case == Regime.PICKANDS:
        pickands = resolve_pickands(model.alpha, budget)
        integral = gamma_fn(1 + 1 / model.beta) * (d ** 2 / model.b) ** (1 / model.beta) * (2 if f.two_sided else 1)
        integral_constant = ResolvedConstant('int_exp_neg_f', float(integral), None, 'closed_form', {'f': f.to_dict()})

        return TailApproximation(
            formula_id='thm31_centered',
            pointwise=pointwise,
            multiplier_kind=MultiplierKind.PICKANDS_INTEGRAL,
            multiplier_constant=model.a ** (1 / model.alpha) * d ** (-2 / model.alpha) * pickands.value * integral,
            multiplier_power=2 / (model.alpha * c) - 2 / (model.beta * c),
            constants=(pickands, integral_constant),
            regime=regime,
        )

    return assemble_regime_tail('thm31_centered', pointwise, regime, model.alpha, model.a, d, budget)


@dataclass(frozen=True)
class TabulatedFunction:
    """Continuous function given by its values at increasing knots, linearly interpolated"""
    times: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'times', tuple(float(t) for t in self.times))
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))

        if len(self.times) < 2 or len(self.times) != len(self.values):
            raise InvalidParameterError('A tabulated function needs at least 2 knots and one value per knot')
        if np.any(np.diff(self.times) <= 0):
            raise InvalidParameterError('Knots of a tabulated function must be strictly increasing')
        if not np.all(np.isfinite(self.values)):
            raise InvalidParameterError('Values of a tabulated function must be finite')

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    @classmethod
    def constant(cls, value: float, T: float) -> "TabulatedFunction":
        return cls((0.0, T), (value, value))

    @classmethod
    def sample(cls, fn, T: float, num_points: int=1001) -> "TabulatedFunction":
        times = np.linspace(0, T, num_points)
        return cls(tuple(times), tuple(fn(times)))

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) == 1

    def covers(self, T: float) -> bool:
        return self.times[0] <= 0 and self.times[-1] >= T

    def interior_knots(self, T: float) -> List[float]:
        return [t for t in self.times if 0 < t < T]


@dataclass(frozen=True)
class PowerTrend:
    """g(t) = -w|t - t0|^gamma"""
    w: float
    gamma: float
    t0: float

    def __call__(self, t):
        return -self.w * np.abs(np.asarray(t, dtype=np.float64) - self.t0) ** self.gamma

    def interior_knots(self, T: float) -> List[float]:
        return [self.t0] if 0 < self.t0 < T else []


LocalScale = Union[float, TabulatedFunction]
Trend = Union[PowerTrend, TabulatedFunction]


def check_local_scale(a_fn: LocalScale, T: float) -> LocalScale:
    if not T > 0:
        raise InvalidParameterError(f'T must be positive, got: {T}')

    if isinstance(a_fn, TabulatedFunction):
        if not a_fn.covers(T):
            raise InvalidParameterError(f'a(t) must be tabulated on the whole [0, {T}]')
        if min(a_fn.values) <= 0:
            raise InvalidParameterError('a(t) must be positive')
        return a_fn

    if not (np.isfinite(a_fn) and a_fn > 0):
        raise InvalidParameterError(f'a(t) must be positive, got: {a_fn}')

    return float(a_fn)


def local_scale_at(a_fn: LocalScale, t: float) -> float:
    return float(a_fn(t)) if isinstance(a_fn, TabulatedFunction) else a_fn


def integrate_local_scale(a_fn: LocalScale, alpha: float, T: float, trend: Optional[Trend]=None, d: float=1.0,
                          abs_tol: float=1e-10) -> float:
    """
    int_0^T a(t)^{1/alpha} exp(g(t) / (2 d^2)) dt (without the exponential when g is absent or identically 0)
    """
    trend_is_zero = trend is None or (isinstance(trend, TabulatedFunction) and set(trend.values) == {0.0}) \
        or (isinstance(trend, PowerTrend) and trend.w == 0)

    if trend_is_zero and not isinstance(a_fn, TabulatedFunction):
        return a_fn ** (1 / alpha) * T

    if trend_is_zero and a_fn.is_constant:
        return a_fn.values[0] ** (1 / alpha) * T

    knots = sorted(set((a_fn.interior_knots(T) if isinstance(a_fn, TabulatedFunction) else [])
                       + ([] if trend_is_zero else trend.interior_knots(T))))

    def integrand(t):
        value = local_scale_at(a_fn, t) ** (1 / alpha)
        return value if trend_is_zero else value * np.exp(trend(t) / (2 * d ** 2))

    result, _ = quad(integrand, 0.0, T, points=knots or None, epsabs=abs_tol, epsrel=1e-12, limit=max(200, 4 * len(knots)))

    return result


def locally_stationary_supremum_tail(p: Union[NormOrder, float], c: float, weights: Union[WeightVector, Sequence[float]],
                                     alpha: float, a_fn: LocalScale, T: float,
                                     budget: ConstantBudget=ConstantBudget()) -> TailApproximation:
    """
    Unit-variance process with r(s, t) = 1 - a(t)|t - s|^alpha (1 + o(1)):
    multiplier int_0^T a(t)^{1/alpha} dt d^{-2/alpha} H_alpha u^{2/(alpha c)}
    """
    return locally_stationary_integral_tail('thm32', p, c, weights, alpha, a_fn, T, None, budget)


def locally_stationary_integral_tail(formula_id: str, p, c, weights, alpha: float, a_fn: LocalScale, T: float,
                                     trend: Optional[Trend], budget: ConstantBudget) -> TailApproximation:
    check_alpha(alpha)
    a_fn = check_local_scale(a_fn, T)
    pointwise = pointwise_tail_asymptotic(p, c, weights)
    d = pointwise.scale
    pickands = resolve_pickands(alpha, budget)
    integral = integrate_local_scale(a_fn, alpha, T, trend, d, budget.quad_abs_tol)
    integral_constant = ResolvedConstant('int_local_scale', integral, None, 'quadrature', {'T': T, 'alpha': alpha})

    return TailApproximation(
        formula_id=formula_id,
        pointwise=pointwise,
        multiplier_kind=MultiplierKind.LOCALLY_STATIONARY_INTEGRAL,
        multiplier_constant=integral * d ** (-2 / alpha) * pickands.value,
        multiplier_power=2 / (alpha * c),
        constants=(pickands, integral_constant),
    )


def locate_unique_maximum(trend: Trend, local: Optional[TrendLocalModel], T: float) -> TrendLocalModel:
    if isinstance(trend, PowerTrend):
        if not trend.w > 0:
            raise InvalidParameterError(f'The trend must attain its maximum at a unique point (w > 0), got: w={trend.w}')
        if not 0 <= trend.t0 <= T:
            raise InvalidParameterError(f't0 must lie in [0, T], got: {trend.t0}')
        return TrendLocalModel(trend.w, trend.gamma, trend.t0)

    values = np.array(trend.values)
    argmax = np.flatnonzero(values == values.max())

    if len(argmax) != 1:
        raise InvalidParameterError(f'The trend must attain its maximum at a unique point, '
                                    f'found it at t={[trend.times[i] for i in argmax]}')
    if local is None:
        raise InvalidParameterError('A tabulated trend needs its local behaviour (w, gamma) at the maximum')

    t0 = trend.times[argmax[0]]

    if not np.isclose(local.t0, t0, rtol=0, atol=1e-12):
        raise InvalidParameterError(f'The trend peaks at t={t0}, not at t0={local.t0}')
    if abs(values.max()) > 1e-12:
        raise InvalidParameterError(f'The trend must vanish at its maximum, got: g(t0)={values.max()}')
    if not local.w > 0:
        raise InvalidParameterError(f'w must be positive at a unique maximum, got: {local.w}')

    return local


def locally_stationary_trend_tail(p: Union[NormOrder, float], c: float, weights: Union[WeightVector, Sequence[float]],
                                  alpha: float, a_fn: LocalScale, T: float, trend: Trend,
                                  local: Optional[TrendLocalModel]=None,
                                  budget: ConstantBudget=ConstantBudget()) -> TailApproximation:
    """
    Locally stationary process with a trend:
        - c < 2: the trend has a unique maximum 0 at t0 with g(t) ~ -w|t - t0|^gamma;
          three regimes with alpha* = alpha c, beta* = 2 gamma c / (2 - c) and f(t) = w|t|^gamma / (c d^2)
        - c = 2: any continuous g, multiplier int_0^T a(t)^{1/alpha} e^{g(t)/(2d^2)} dt d^{-2/alpha} H_alpha u^{2/alpha*}
        - c > 2: the trend does not matter
    """
    c = check_power_exponent(c)

    if c > 2:
        return locally_stationary_integral_tail('thm33', p, c, weights, alpha, a_fn, T, None, budget)
    elif c == 2:
        return locally_stationary_integral_tail('thm33', p, c, weights, alpha, a_fn, T, trend, budget)

    a_fn = check_local_scale(a_fn, T)
    local = locate_unique_maximum(trend, local, T)
    pointwise = pointwise_tail_asymptotic(p, c, weights)
    d = pointwise.scale
    regime = classify_regime(alpha, c, None, local.gamma)
    f = DriftFunctional(w_eff=local.w / (c * d ** 2), gamma=local.gamma, domain_start=domain_start_at(local.t0, T))

    return assemble_regime_tail('thm33', pointwise, replace(regime, f=f, Q=f.domain_start),
                                alpha, local_scale_at(a_fn, local.t0), d, budget)


def example31_tail(alpha: float, p: Union[NormOrder, float], c: float=1.0, weights: Union[WeightVector, Sequence[float]]=(1.0,),
                   budget: ConstantBudget=ConstantBudget()) -> TailApproximation:
    """
    Independent fBm components with the trend g(t) = -sqrt(1 - t) on [0, 1]:
    sigma(t) = t^{alpha/2} peaks at t0 = 1 with b = alpha/2, beta = 1 and a = 1/2, while w = 1, gamma = 1/2
    """
    model = NonStationaryLocalModel(b=alpha / 2, beta=1.0, a=0.5, alpha=alpha, t0=1.0, T=1.0)
    trend = TrendLocalModel(w=1.0, gamma=0.5, t0=1.0)

    return replace(nonstationary_supremum_tail(p, c, weights, model, trend, budget), formula_id='ex31')


def example32_tail(alpha: float, a_fn: LocalScale, T: float, trend: Trend,
                   weights: Union[WeightVector, Sequence[float]]=(1.0,),
                   budget: ConstantBudget=ConstantBudget()) -> TailApproximation:
    """Chi-square process (p = 2, c = 2) of a locally stationary process with a continuous trend"""
    return replace(locally_stationary_trend_tail(2.0, 2.0, weights, alpha, a_fn, T, trend, budget=budget), formula_id='ex32')


@dataclass(frozen=True)
class RuinAsymptotic:
    u: float
    w_premium: float
    alpha: float
    closed_value: float
    theorem_value: float
    closed_multiplier: float
    theorem_multiplier: float
    regime: RegimeClassification
    constants: Tuple[ResolvedConstant, ...]

    @property
    def disputed(self) -> bool:
        return not np.isclose(self.closed_multiplier, self.theorem_multiplier, rtol=1e-9, atol=0)

    @property
    def discrepancy(self) -> float:
        return self.theorem_multiplier / self.closed_multiplier

    def candidates(self) -> Dict[str, float]:
        return {'closed': self.closed_value, 'theorem': self.theorem_value}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'u': self.u,
            'w_premium': self.w_premium,
            'alpha': self.alpha,
            'candidates': self.candidates(),
            'closed_multiplier': self.closed_multiplier,
            'theorem_multiplier': self.theorem_multiplier,
            'discrepancy': self.discrepancy,
            'disputed': self.disputed,
            'regime': self.regime.to_dict(),
            'constants': [c.to_dict() for c in self.constants],
        }


def ruin_theorem_tail(alpha: float, weights: Union[WeightVector, Sequence[float]], w_premium: float,
                      budget: ConstantBudget=ConstantBudget()) -> TailApproximation:
    """
    sup_t (X(t) - w t) > u is sup_t (Z_2^2(t) + w(1 - t)) > u + w for fBm components,
    i.e. the non-stationary case at t0 = T = 1 with b = alpha/2, beta = 1, a = 1/2 and the trend -(-w)|t - 1|
    """
    model = NonStationaryLocalModel(b=alpha / 2, beta=1.0, a=0.5, alpha=alpha, t0=1.0, T=1.0)
    trend = TrendLocalModel(w=-w_premium, gamma=1.0, t0=1.0)

    return replace(nonstationary_supremum_tail(2.0, 2.0, weights, model, trend, budget), formula_id='ruin_theorem')


def ruin_probability_asymptotic(alpha: float, weights: Union[WeightVector, Sequence[float]], w_premium: float, u: float,
                                budget: ConstantBudget=ConstantBudget()) -> RuinAsymptotic:
    """
    P{inf_{[0,1]} (u + w t - X(t)) < 0} for X(t) = sum_i d_i^2 B_alpha^i(t)^2. Two candidates are reported:
        closed: u^{m/2-1} e^{-(u+w)/2} 2^{1-m/2} / Gamma(m/2) prod_{i>m} (1 - d_i^2)^{-1/2} times
            u^{1/alpha-1} 2^{1-1/alpha} H_alpha (alpha < 1), 2 (alpha = 1) or 1 (alpha > 1)
        theorem: the non-stationary assembly at the threshold u + w, which carries an extra 1/alpha for alpha < 1
    """
    check_alpha(alpha)

    if not w_premium > 0:
        raise InvalidParameterError(f'The premium rate must be positive, got: {w_premium}')
    if not u > 0:
        raise InvalidParameterError(f'u must be positive, got: {u}')

    weights = WeightVector.of(weights)
    m = weights.m
    d_vec = weights.as_array()
    theorem = ruin_theorem_tail(alpha, weights, w_premium, budget)

    if alpha < 1:
        pickands = next(c for c in theorem.constants if c.name == 'H')
        closed_multiplier = u ** (1 / alpha - 1) * 2 ** (1 - 1 / alpha) * pickands.value
    elif alpha == 1:
        closed_multiplier = 2.0
    else:
        closed_multiplier = 1.0

    pointwise = u ** (m / 2 - 1) * np.exp(-(u + w_premium) / 2) * 2 ** (1 - m / 2) / gamma_fn(m / 2) \
        * np.prod((1 - d_vec[m:] ** 2) ** -0.5)

    return RuinAsymptotic(
        u=u,
        w_premium=w_premium,
        alpha=alpha,
        closed_value=float(closed_multiplier * pointwise),
        theorem_value=theorem.evaluate(u + w_premium, mills=True),
        closed_multiplier=float(closed_multiplier),
        theorem_multiplier=float(theorem.multiplier(u)),
        regime=theorem.regime,
        constants=theorem.constants,
    )


def ou_chisq_supremum_tail(n: int, T: float, u):
    """
    Supremum of the chi-square process of n OU processes with covariance e^{-2|t-s|}:
    (2^{2-n/2} / Gamma(n/2)) T u^{n/2} e^{-u/2}
    """
    if int(n) != n or n < 1:
        raise InvalidParameterError(f'n must be a positive integer, got: {n}')
    if not T > 0:
        raise InvalidParameterError(f'T must be positive, got: {T}')

    u = np.asarray(u, dtype=np.float64)
    result = 2 ** (2 - n / 2) / gamma_fn(n / 2) * T * u ** (n / 2) * np.exp(-u / 2)

    return result.item() if result.ndim == 0 else result
