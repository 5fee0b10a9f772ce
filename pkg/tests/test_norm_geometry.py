import sys; sys.path.append('.')

import numpy as np
import pytest

from src.geometry.norm_geometry import (
    WeightVector, MaximizerKind, critical_scale, weighted_lp_norm, dual_witness, dual_exponent,
    sample_dual_sphere, grid_maximize_objective, lp_norm,
)
from src.utils.errors import InvalidParameterError


def random_weights(rng, n):
    return WeightVector(tuple([1.0] + sorted(rng.uniform(0.2, 0.95, size=n - 1).tolist(), reverse=True)))


def test_critical_scale_matches_grid_maximization():
    rng = np.random.default_rng(0)

    for n in [1, 2, 3]:
        for p in [1, 1.3, 1.7, 2, 2.5, 4, np.inf]:
            for _ in range(3):
                weights = random_weights(rng, n)
                q = dual_exponent(p)
                d = critical_scale(p, weights).critical_scale
                d_grid = np.sqrt(grid_maximize_objective(q, weights))

                assert abs(d - d_grid) < 1e-3, f'n={n}, p={p}, weights={weights.values}: {d} vs {d_grid}'


def test_critical_scale_cases():
    geometry = critical_scale(2, [1, 1, 0.5])
    assert geometry.critical_scale == 1.0
    assert geometry.maximizer_kind == MaximizerKind.SPHERE
    assert geometry.m == 2

    geometry = critical_scale(1, [1, 1])
    assert abs(geometry.critical_scale - np.sqrt(2)) < 1e-12
    assert geometry.maximizer_kind == MaximizerKind.DISCRETE_SIGN_POINTS
    assert geometry.point_count == 4

    geometry = critical_scale(np.inf, [1, 1, 0.3])
    assert geometry.critical_scale == 1.0
    assert geometry.maximizer_kind == MaximizerKind.AXIS_POINTS
    assert geometry.point_count == 4
    assert len(geometry.representatives) == 4

    # A single dominating weight
    assert critical_scale(3, [1, 0.5, 0.5]).point_count == 2


def test_critical_scale_for_many_components():
    geometry = critical_scale(1.5, WeightVector.ones(12))
    exponent = 2 * 1.5 / (2 - 1.5)

    assert geometry.point_count == 2 ** 12
    assert len(geometry.representatives) == 2
    assert abs(geometry.critical_scale - 12 ** (1 / exponent)) < 1e-12


def test_duality_on_random_points():
    rng = np.random.default_rng(1)

    for p in [1, 1.5, 2, 3, np.inf]:
        weights = WeightVector((1.0, 0.7, 0.4))
        q = dual_exponent(p)
        d_vec = weights.as_array()
        points = sample_dual_sphere(q, 3, 1000, rng)

        for x in rng.standard_normal((20, 3)):
            norm = weighted_lp_norm(x, p, weights)
            witness = dual_witness(x, p, weights)

            # ||d x||_p = max_{v in S_q} <v, d x> is attained at the witness
            assert np.all((points * (d_vec * x)).sum(axis=1) <= norm + 1e-9)
            assert abs((witness * d_vec * x).sum() - norm) < 1e-9 * max(1.0, norm)
            assert abs(lp_norm(witness, q) - 1) < 1e-9


def test_weighted_norm_does_not_overflow():
    x = np.array([1e200, 1e200])

    assert np.isfinite(weighted_lp_norm(x, 4, [1, 1]))
    assert abs(weighted_lp_norm(x, 4, [1, 1]) / 1e200 - 2 ** 0.25) < 1e-12
    assert weighted_lp_norm(np.zeros(2), 3, [1, 1]) == 0


def test_weighted_norm_batches():
    x = np.random.default_rng(2).standard_normal((5, 3))
    norms = weighted_lp_norm(x, 2, [1, 0.5, 0.5])
    expected = np.sqrt(x[:, 0] ** 2 + 0.25 * x[:, 1] ** 2 + 0.25 * x[:, 2] ** 2)

    assert norms.shape == (5,)
    assert np.allclose(norms, expected, rtol=1e-12)


def test_invalid_inputs():
    with pytest.raises(InvalidParameterError, match=r'p must lie in \[1, inf\]'):
        critical_scale(0.5, [1, 1])

    with pytest.raises(InvalidParameterError):
        WeightVector((1.0, 0.5, 0.7))

    with pytest.raises(InvalidParameterError):
        WeightVector((0.9, 0.5))

    with pytest.raises(InvalidParameterError):
        WeightVector((1.0, 0.0))

    with pytest.raises(InvalidParameterError):
        weighted_lp_norm(np.ones(3), 2, [1, 1])

    with pytest.raises(InvalidParameterError):
        dual_witness(np.zeros(2), 2, [1, 1])
