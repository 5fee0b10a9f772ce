"""
One-point tail asymptotics of Z^c(t0) = ||d * X(t0)||_p^c for a unit-variance Gaussian vector
and the oracles certifying them (exact chi-square survival and brute-force Monte Carlo).
"""
import logging
from dataclasses import dataclass
from typing import Union, Sequence, Optional

import numpy as np
from scipy.special import erfc, gamma, gammaincc

from src.geometry.norm_geometry import NormOrder, WeightVector, critical_scale, weighted_lp_norm
from src.sampling.streams import make_rng
from src.utils.constants import STREAM_POINTWISE
from src.utils.errors import InvalidParameterError
from src.utils.parallel import map_chunks
from src.utils.stats import BernoulliEstimate

logger = logging.getLogger(__name__)

MIN_POINTWISE_SAMPLES = 10 ** 4
MIN_EXPECTED_HITS = 10


def normal_survival(z, mills: bool=False):
    """
    Standard normal survival function Psi(z) = P{N(0,1) > z}.
    With `mills=True` returns the asymptotic form phi(z)/z (meaningful for z > 0 only).
    """
    z = np.asarray(z, dtype=np.float64)

    if mills:
        result = np.exp(-z ** 2 / 2) / (np.sqrt(2 * np.pi) * z)
    else:
        result = 0.5 * erfc(z / np.sqrt(2))

    return result.item() if result.ndim == 0 else result


@dataclass(frozen=True)
class PointwiseTail:
    """
    evaluate(u) = K * u^rho * Psi(u^{1/c} / d)
    """
    coefficient: float
    u_power: float
    scale: float
    c: float
    branch: str

    def evaluate(self, u, mills: bool=False):
        u = np.asarray(u, dtype=np.float64)
        result = self.coefficient * u ** self.u_power * normal_survival(u ** (1 / self.c) / self.scale, mills=mills)

        return result.item() if np.ndim(result) == 0 else result

    def monotonicity_threshold(self) -> float:
        """u0 such that evaluate(u) is strictly decreasing on [u0, inf): rho * d^2 * c / u0^{2/c} < 1"""
        if self.u_power <= 0:
            return 0.0

        return (self.u_power * self.scale ** 2 * self.c) ** (self.c / 2)

    def to_dict(self) -> dict:
        return {'coefficient': self.coefficient, 'u_power': self.u_power, 'scale': self.scale,
                'c': self.c, 'branch': self.branch}


def check_power_exponent(c: float) -> float:
    if not (np.isfinite(c) and c > 0):
        raise InvalidParameterError(f'c must be positive, got: {c}')

    return float(c)


def pointwise_tail_asymptotic(p: Union[NormOrder, float], c: float, weights: Union[WeightVector, Sequence[float]]) -> PointwiseTail:
    """
    Tail of Z^c(t0) when sigma(t0) = 1 (callers with sigma != 1 rescale u)

    :return: K, rho and d of the case matching p:
        - p in [1, 2): K = 2^n (2-p)^{(1-n)/2}, rho = 0
        - p = 2: K = sqrt(2 pi) 2^{(2-m)/2} prod_{i>m} (1-d_i^2)^{-1/2} / Gamma(m/2), rho = (m-1)/c
        - p in (2, inf]: K = 2m, rho = 0
    """
    order = NormOrder.of(p)
    weights = WeightVector.of(weights)
    c = check_power_exponent(c)
    geometry = critical_scale(order, weights)
    n, m = weights.n, weights.m
    d_vec = weights.as_array()

    if order.p < 2:
        coefficient = 2 ** n * (2 - order.p) ** ((1 - n) / 2)
        u_power = 0.0
        branch = 'p<2'
    elif order.p == 2:
        # An empty product over i > m equals 1
        product = np.prod((1 - d_vec[m:] ** 2) ** -0.5)
        coefficient = np.sqrt(2 * np.pi) * 2 ** ((2 - m) / 2) * product / gamma(m / 2)
        u_power = (m - 1) / c
        branch = 'p=2'
    else:
        coefficient = 2.0 * m
        u_power = 0.0
        branch = 'p>2'

    return PointwiseTail(float(coefficient), float(u_power), geometry.critical_scale, c, branch)


def pointwise_tail_exact_chi(m_dof: int, u):
    """
    Exact chi-square survival P{chi^2_m > u} through the regularized upper incomplete gamma function
    """
    if int(m_dof) != m_dof or m_dof < 1:
        raise InvalidParameterError(f'Degrees of freedom should be a positive integer: {m_dof}')
    if np.any(np.asarray(u) < 0):
        raise InvalidParameterError('u must be non-negative')

    result = gammaincc(m_dof / 2, np.asarray(u, dtype=np.float64) / 2)

    return result.item() if np.ndim(result) == 0 else result


@dataclass(frozen=True)
class PointwiseMCEstimate:
    estimate: BernoulliEstimate
    expected_hits: Optional[float]
    low_hits: bool
    seed: int

    @property
    def p_hat(self) -> float:
        return self.estimate.p_hat

    @property
    def stderr(self) -> float:
        return self.estimate.stderr

    def to_dict(self) -> dict:
        return {**self.estimate.to_dict(), 'expected_hits': self.expected_hits, 'low_hits': self.low_hits, 'seed': self.seed}


def pointwise_tail_mc(p: Union[NormOrder, float], c: float, weights: Union[WeightVector, Sequence[float]], u: float,
                      n_samples: int, seed: int, chunk_size: int=100000, threads: int=None) -> PointwiseMCEstimate:
    """
    Frequency of ||N(0, I_n) * d||_p^c > u. Deterministic given (seed, chunk_size).
    """
    if n_samples < MIN_POINTWISE_SAMPLES:
        raise InvalidParameterError(f'n_samples should be at least {MIN_POINTWISE_SAMPLES}, got: {n_samples}')

    order = NormOrder.of(p)
    weights = WeightVector.of(weights)
    c = check_power_exponent(c)

    def count_hits(chunk_idx: int, size: int) -> int:
        x = make_rng(seed, STREAM_POINTWISE, chunk_idx).standard_normal((size, weights.n))
        return int((weighted_lp_norm(x, order, weights) ** c > u).sum())

    hits = sum(map_chunks(count_hits, n_samples, chunk_size, threads=threads))
    estimate = BernoulliEstimate(hits, n_samples)

    expected_hits = n_samples * pointwise_tail_asymptotic(order, c, weights).evaluate(u) if u > 0 else None
    low_hits = (expected_hits is not None and expected_hits < MIN_EXPECTED_HITS) or hits < MIN_EXPECTED_HITS

    if low_hits:
        logger.warning(f'Pointwise MC at u={u} has too few hits ({hits}, expected: {expected_hits}). '
                       f'The estimate is not reliable.')

    return PointwiseMCEstimate(estimate, expected_hits, low_hits, seed)
