"""
Weighted L^p norms, L^p/L^q duality and the maximizers of sum_i d_i^2 v_i^2 on the dual sphere S_q
"""
import itertools
import numbers
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple, Union, Sequence

import numpy as np

from src.utils.constants import POS_INF, GEOMETRY_TOL
from src.utils.errors import InvalidParameterError

# Above this size we do not enumerate all 2^n sign patterns
MAX_ENUMERATED_COMPONENTS = 10


@dataclass(frozen=True)
class WeightVector:
    """
    Weights d = (d_1, ..., d_n) with 1 = d_1 = ... = d_m > d_{m+1} >= ... >= d_n > 0.
    Weights are validated and never re-sorted.
    """
    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, 'values', values)

        if len(values) == 0:
            raise InvalidParameterError('weights must contain at least one value')
        if not all(np.isfinite(values)) or min(values) <= 0:
            raise InvalidParameterError(f'weights must be finite and positive: {values}')
        if values[0] != 1.0:
            raise InvalidParameterError(f'the leading weight must be equal to 1: {values}')
        if any(a < b for a, b in zip(values[:-1], values[1:])):
            raise InvalidParameterError(f'weights must be sorted in non-increasing order: {values}')

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def m(self) -> int:
        return sum(1 for v in self.values if v == 1.0)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    @classmethod
    def ones(cls, n: int) -> "WeightVector":
        return cls(tuple([1.0] * n))

    @classmethod
    def from_string(cls, weights_str: str) -> "WeightVector":
        return cls(tuple(float(w) for w in weights_str.split(',')))

    @classmethod
    def of(cls, weights: Union["WeightVector", Sequence[float]]) -> "WeightVector":
        return weights if isinstance(weights, WeightVector) else cls(tuple(weights))


def dual_exponent(p: float) -> float:
    """
    Computes q such that 1/p + 1/q = 1 (q=inf if p=1 and q=1 if p=inf)
    """
    if isinstance(p, bool) or not isinstance(p, numbers.Real) or np.isnan(p):
        raise InvalidParameterError(f'p must be a real number, got: {p!r}')
    if p < 1:
        raise InvalidParameterError('p must lie in [1, inf]')

    if p == 1:
        return POS_INF
    elif p == POS_INF:
        return 1.0
    else:
        return p / (p - 1)


@dataclass(frozen=True)
class NormOrder:
    p: float
    q: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'p', float(self.p))
        object.__setattr__(self, 'q', dual_exponent(self.p))

    @classmethod
    def of(cls, p: Union["NormOrder", float]) -> "NormOrder":
        return p if isinstance(p, NormOrder) else cls(p)


class MaximizerKind(Enum):
    DISCRETE_SIGN_POINTS = 'DiscreteSignPoints'
    SPHERE = 'Sphere'
    AXIS_POINTS = 'AxisPoints'


@dataclass(frozen=True)
class DualGeometry:
    critical_scale: float
    maximizer_kind: MaximizerKind
    point_count: Union[int, str]
    representatives: Tuple[Tuple[float, ...], ...]
    p: float
    m: int

    def to_dict(self) -> dict:
        return {
            'p': self.p,
            'critical_scale': self.critical_scale,
            'maximizer_kind': self.maximizer_kind.value,
            'point_count': self.point_count,
            'm': self.m,
            'representatives': [list(r) for r in self.representatives],
        }


def lp_norm(x: np.ndarray, p: float, axis: int=-1) -> np.ndarray:
    """
    Plain L^p norm along `axis` with rescaling by the max modulus (no overflow for large p)
    """
    y = np.abs(np.asarray(x, dtype=np.float64))

    if p == POS_INF:
        return y.max(axis=axis)
    elif p == 1:
        return y.sum(axis=axis)
    elif p == 2:
        return np.sqrt((y ** 2).sum(axis=axis))

    scale = y.max(axis=axis, keepdims=True)
    safe_scale = np.where(scale > 0, scale, 1.0)
    norms = np.squeeze(safe_scale, axis=axis) * ((y / safe_scale) ** p).sum(axis=axis) ** (1 / p)

    return norms


def weighted_lp_norm(x: np.ndarray, p: Union[NormOrder, float], weights: Union[WeightVector, Sequence[float]], axis: int=-1) -> np.ndarray:
    """
    Computes ||(d_1 x_1, ..., d_n x_n)||_p along `axis`

    :param x: array whose `axis` dimension has size n
    :param p: norm order in [1, inf]
    :param weights: weight vector d
    :return: norms (a float for a single vector)
    """
    p = NormOrder.of(p).p
    d = WeightVector.of(weights).as_array()
    x = np.asarray(x, dtype=np.float64)

    if x.shape[axis] != len(d):
        raise InvalidParameterError(f'Dimension mismatch: x has {x.shape[axis]} components, weights have {len(d)}')
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError('x must be finite')

    shape = [1] * x.ndim
    shape[axis] = len(d)
    norms = lp_norm(x * d.reshape(shape), p, axis=axis)

    return norms.item() if np.ndim(norms) == 0 else norms


def critical_scale(p: Union[NormOrder, float], weights: Union[WeightVector, Sequence[float]]) -> DualGeometry:
    """
    Maximizes sum_i d_i^2 v_i^2 over S_q and returns the critical scale d with the maximizer structure:
        - p in (2, inf]: d = 1 at the 2m points +-e_i, i <= m
        - p = 2: d = 1 on the sphere {v in S_q: v_i = 0, i > m} (canonical axis points are returned)
        - p in [1, 2): d = [sum_i d_i^{2p/(2-p)}]^{(2-p)/(2p)} at the 2^n points z_i = +-(d_i/d)^{2/(q-2)}
    """
    order = NormOrder.of(p)
    weights = WeightVector.of(weights)
    p, q = order.p, order.q
    d_vec = weights.as_array()
    n, m = weights.n, weights.m

    if p > 2:
        d = 1.0
        kind = MaximizerKind.AXIS_POINTS
        point_count = 2 * m
        representatives = [sign * np.eye(n)[i] for i in range(m) for sign in [1.0, -1.0]]
    elif p == 2:
        d = 1.0
        kind = MaximizerKind.SPHERE
        point_count = 'continuum'
        representatives = [np.eye(n)[i] for i in range(m)]
    else:
        exponent = 2 * p / (2 - p)
        d = (d_vec ** exponent).sum() ** (1 / exponent)
        kind = MaximizerKind.DISCRETE_SIGN_POINTS
        point_count = 2 ** n
        # For p=1 we have q=inf and the exponent 2/(q-2) vanishes, i.e. z_i = +-1
        z = np.ones(n) if q == POS_INF else (d_vec / d) ** (2 / (q - 2))

        if n <= MAX_ENUMERATED_COMPONENTS:
            representatives = [z * np.array(signs) for signs in itertools.product([1.0, -1.0], repeat=n)]
        else:
            representatives = [z, -z]

    for v in representatives:
        verify_maximizer(v, q, d_vec, d)

    return DualGeometry(
        critical_scale=float(d),
        maximizer_kind=kind,
        point_count=point_count,
        representatives=tuple(tuple(v.tolist()) for v in representatives),
        p=p,
        m=m,
    )


def verify_maximizer(v: np.ndarray, q: float, d_vec: np.ndarray, d: float, tol: float=GEOMETRY_TOL):
    norm_q = lp_norm(v, q)
    objective = (d_vec ** 2 * v ** 2).sum()

    assert abs(norm_q - 1) <= tol, f'Representative {v} is not on S_q: ||v||_q = {norm_q}'
    assert abs(objective - d ** 2) <= tol * max(1.0, d ** 2), \
        f'Representative {v} does not attain d^2 = {d ** 2}: {objective}'


def dual_witness(x: np.ndarray, p: Union[NormOrder, float], weights: Union[WeightVector, Sequence[float]]) -> np.ndarray:
    """
    Finds v on S_q with sum_i d_i v_i x_i = ||d * x||_p

    :param x: nonzero vector of size n
    :return: witness vector v
    """
    order = NormOrder.of(p)
    d_vec = WeightVector.of(weights).as_array()
    y = d_vec * np.asarray(x, dtype=np.float64)

    if not np.any(y != 0):
        raise InvalidParameterError('dual witness is undefined for the zero vector')

    if order.p == 1:
        v = np.sign(y)
    elif order.p == POS_INF:
        k = np.argmax(np.abs(y))
        v = np.zeros_like(y)
        v[k] = np.sign(y[k])
    else:
        scale = np.abs(y).max()
        y_scaled = y / scale
        v = np.sign(y_scaled) * np.abs(y_scaled) ** (order.p - 1)
        v = v / lp_norm(y_scaled, order.p) ** (order.p - 1)

    return v


def sample_dual_sphere(q: float, n: int, num_points: int, rng: np.random.Generator) -> np.ndarray:
    """
    Random points on S_q (used to check the duality numerically): normalized Gaussian directions
    together with the signed coordinate axes and sign vectors.
    """
    directions = rng.standard_normal((num_points, n))
    axes = np.vstack([np.eye(n), -np.eye(n)])
    signs = np.array(list(itertools.product([1.0, -1.0], repeat=n))) if n <= MAX_ENUMERATED_COMPONENTS else np.ones((1, n))
    points = np.vstack([directions, axes, signs])

    return points / lp_norm(points, q)[:, None]


def grid_maximize_objective(q: float, weights: Union[WeightVector, Sequence[float]], points_per_coord: int=201) -> float:
    """
    Brute-force maximum of sum_i d_i^2 v_i^2 over S_q for n <= 3: a grid over the free coordinates
    in [-1, 1]^{n-1} with the last coordinate solved from ||v||_q = 1.
    """
    d_vec = WeightVector.of(weights).as_array()
    n = len(d_vec)

    assert n <= 3, 'Grid maximization is only meant for small dimensions'

    if n == 1:
        return d_vec[0] ** 2

    grid = np.linspace(-1.0, 1.0, points_per_coord)
    free = np.stack(np.meshgrid(*([grid] * (n - 1)), indexing='ij'), axis=-1).reshape(-1, n - 1)

    if q == POS_INF:
        # On S_inf some coordinate equals +-1: put the unit coordinate at every position in turn
        best = 0.0
        for k in range(n):
            v = np.insert(free, k, 1.0, axis=1)
            best = max(best, (d_vec ** 2 * v ** 2).sum(axis=1).max())
        return best

    rest = 1.0 - (np.abs(free) ** q).sum(axis=1)
    free = free[rest >= 0]
    last = rest[rest >= 0] ** (1 / q)
    best = 0.0

    for k in range(n):
        v = np.insert(free, k, last, axis=1)
        best = max(best, (d_vec ** 2 * v ** 2).sum(axis=1).max())

    return best
