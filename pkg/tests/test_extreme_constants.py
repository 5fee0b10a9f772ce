import sys; sys.path.append('.')

import numpy as np
import pytest

from src.constants.extreme_constants import (
    DriftFunctional, pickands_constant, pickands_window, pickands_window_profile, pickands_stability,
    piterbarg_constant, piterbarg_closed_form, minimal_truncation_window, piterbarg_two_sided_identity,
)
from src.utils.constants import NEG_INF
from src.utils.errors import InvalidParameterError, TruncationError


def test_piterbarg_closed_forms():
    assert piterbarg_closed_form(1, 1, 1) == 2
    assert abs(piterbarg_closed_form(2, 1, 1) - (1 + np.sqrt(2)) / 2) < 1e-12
    assert abs(piterbarg_closed_form(2, 1, 1, two_sided=True) - np.sqrt(2)) < 1e-12
    assert abs(piterbarg_closed_form(1, 1, 1, two_sided=True) - (3 - 1 / 3)) < 1e-12

    with pytest.raises(InvalidParameterError):
        piterbarg_closed_form(1.5, 1, 1)


def test_piterbarg_mc_matches_closed_forms_for_alpha_2():
    # E[P^2] is finite only for a < b
    for a, b in [(0.5, 1.0), (0.5, 2.0), (1.0, 2.0)]:
        f = DriftFunctional.power(b, 2.0)
        estimate = piterbarg_constant(2.0, a, f, n_samples=50000, seed=7)
        target = piterbarg_closed_form(2, a, b)

        assert estimate.method == 'closed_form_sup'
        assert abs(estimate.value - target) < max(3 * estimate.stderr, 0.05 * target), f'a={a}, b={b}'


def test_piterbarg_mc_matches_closed_forms_for_alpha_1():
    for a, b in [(0.5, 1.0), (0.5, 2.0), (1.0, 2.0)]:
        f = DriftFunctional.power(b, 1.0)
        estimate = piterbarg_constant(1.0, a, f, delta=0.001, n_samples=4000, seed=3)
        target = piterbarg_closed_form(1, a, b)

        assert estimate.method == 'grid'
        assert abs(estimate.value - target) < max(3 * estimate.stderr, 0.05 * target), f'a={a}, b={b}'


def test_pickands_sanity():
    h1 = pickands_constant(1.0, S=50, delta=0.005, n_samples=5000, seed=42)
    h2 = pickands_constant(2.0, S=50, delta=0.005, n_samples=2000, seed=42)

    assert 0.90 <= h1.value <= 1.10
    assert 0.51 <= h2.value <= 0.62
    assert abs(h2.value - 1 / np.sqrt(np.pi)) < 1e-6
    assert pickands_stability(2.0, (25.0, 50.0), n_samples=1000, seed=1).stable


def test_pickands_stability_for_brownian_motion():
    check = pickands_stability(1.0, (25.0, 50.0), delta=0.005, n_samples=3000, seed=8)

    assert check.stable, check.to_dict()


def test_pickands_window_profile_uses_common_random_numbers():
    profile = pickands_window_profile(1.0, 0.0, [1.0, 2.0, 4.0, 8.0], delta=0.01, n_samples=500, seed=2)
    values = [e.value for e in profile]

    assert all(x <= y for x, y in zip(values[:-1], values[1:]))
    assert profile[0].value >= 1.0


def test_pickands_window_closed_form_sup_dominates_grid():
    exact = pickands_window(2.0, 1.0, 3.0, delta=0.01, n_samples=2000, seed=4, closed_form_sup=True)
    grid = pickands_window(2.0, 1.0, 3.0, delta=0.01, n_samples=2000, seed=4)

    # Same normals, the grid can only miss the peak
    assert exact.value >= grid.value
    assert abs(exact.value - grid.value) < 1e-3 * exact.value


def test_pickands_is_thread_independent():
    first = pickands_constant(0.7, S=20, delta=0.01, n_samples=300, seed=5, threads=1)
    second = pickands_constant(0.7, S=20, delta=0.01, n_samples=300, seed=5, threads=3)

    assert first == second


def test_truncation_rule():
    f = DriftFunctional.power(1.0, 1.0)

    assert abs(minimal_truncation_window(1.0, 1.0, f) - 20.0) < 1e-9

    with pytest.raises(TruncationError) as error:
        piterbarg_constant(1.0, 1.0, f, S=5.0, n_samples=100)

    assert abs(error.value.min_S - 20.0) < 1e-9


def test_two_sided_identity():
    check = piterbarg_two_sided_identity(1.2, n_samples=20000, seed=1)

    assert abs(check.target - 0.8 ** -0.5) < 1e-12
    assert check.within(3.0), check.to_dict()

    with pytest.raises(InvalidParameterError):
        piterbarg_two_sided_identity(2.5)


def test_drift_functional():
    f = DriftFunctional(b_eff=1.0, beta=2.0, w_eff=0.5, gamma=2.0, domain_start=NEG_INF)

    assert f.two_sided
    assert f.power_coefficient(2.0) == 1.5
    assert f.power_coefficient(1.0) is None
    assert DriftFunctional().is_zero
    assert DriftFunctional().power_coefficient(1.3) == 0
    assert np.allclose(f(np.array([-1.0, 2.0])), [1.5, 6.0])

    with pytest.raises(InvalidParameterError):
        DriftFunctional(b_eff=-1.0)

    with pytest.raises(InvalidParameterError):
        DriftFunctional(domain_start=3.0)

    # A negative w-term needs a b-term of higher order
    assert DriftFunctional(b_eff=1.0, beta=1.0, w_eff=-0.2, gamma=0.5).power_coefficient(1.0) is None

    with pytest.raises(InvalidParameterError):
        DriftFunctional(w_eff=-0.2, gamma=0.5)

    with pytest.raises(InvalidParameterError):
        DriftFunctional(b_eff=1.0, beta=0.5, w_eff=-0.2, gamma=1.0)


def test_invalid_arguments():
    with pytest.raises(InvalidParameterError):
        pickands_constant(1.0, S=50, delta=0.1)

    with pytest.raises(InvalidParameterError):
        pickands_constant(1.0, S=5)

    with pytest.raises(InvalidParameterError):
        pickands_constant(2.5)

    with pytest.raises(InvalidParameterError):
        pickands_constant(1.0, method='importance_sampling')
