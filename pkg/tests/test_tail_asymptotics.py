import sys; sys.path.append('.')

import numpy as np
import pytest
from scipy.integrate import quad

from src.constants.extreme_constants import DriftFunctional
from src.tails.tail_asymptotics import (
    NonStationaryLocalModel, TrendLocalModel, Regime, MultiplierKind, ConstantBudget, TabulatedFunction, PowerTrend,
    classify_regime, drift_functional, integral_exp_neg_f, resolve_piterbarg, nonstationary_supremum_tail,
    centered_nonstationary_tail, locally_stationary_supremum_tail, locally_stationary_trend_tail,
    example31_tail, example32_tail, ruin_probability_asymptotic, ou_chisq_supremum_tail,
)
from src.utils.errors import InvalidParameterError, UnresolvedConstantError

U_VALUES = [10.0, 20.0, 40.0, 80.0, 160.0]
# Enough for the ratios we check; the Pickands value itself cancels in them
CHEAP_BUDGET = ConstantBudget(n_samples=200, pickands_S=20.0, delta=0.01)


def assert_relative_close(x, y, tol=1e-12):
    assert abs(x / y - 1) < tol, f'{x} vs {y}'


def test_classify_regime():
    assert classify_regime(1.0, 2.0, 2.0).case == Regime.PICKANDS
    assert classify_regime(1.0, 2.0, 1.0).case == Regime.PITERBARG
    assert classify_regime(1.5, 2.0, 1.0).case == Regime.POINTWISE

    regime = classify_regime(1.0, 1.0, None, 0.5)
    assert regime.case == Regime.PITERBARG
    assert regime.includes_w and not regime.includes_b
    assert regime.beta_star == 1.0

    # For c >= 2 the trend never enters beta*
    regime = classify_regime(1.0, 2.0, 2.0, 0.1)
    assert not regime.includes_w

    with pytest.raises(InvalidParameterError):
        classify_regime(1.0, 2.0, None, None)


def test_drift_functional_entries():
    model = NonStationaryLocalModel(b=1.0, beta=1.0, a=1.0, alpha=1.0, t0=0.5, T=1.0)
    trend = TrendLocalModel(w=2.0, gamma=0.5, t0=0.5)
    f, regime = drift_functional(model, trend, 1.0, 2.0)

    assert regime.includes_b and regime.includes_w
    assert f.two_sided
    assert f.b_eff == 0.25
    assert f.w_eff == 0.5

    with pytest.raises(InvalidParameterError):
        drift_functional(NonStationaryLocalModel(1.0, 2.0, 1.0, 1.0, 0.5, 1.0), TrendLocalModel(-1.0, 0.5, 0.5), 1.0, 1.0)


def test_negative_trend_at_the_tie():
    # gamma = (2 - c) beta / 2: both terms enter f = t - 0.2 sqrt(t)
    model = NonStationaryLocalModel(b=1.0, beta=1.0, a=1.0, alpha=0.5, t0=1.0, T=1.0)
    tail = nonstationary_supremum_tail(2.0, 1.0, [1.0], model, TrendLocalModel(w=-0.2, gamma=0.5, t0=1.0), CHEAP_BUDGET)
    f = tail.regime.f

    assert tail.regime.case == Regime.PICKANDS
    assert tail.regime.includes_b and tail.regime.includes_w
    assert (f.b_eff, f.w_eff, f.gamma) == (1.0, -0.2, 0.5)

    expected, _ = quad(lambda t: np.exp(-t + 0.2 * np.sqrt(t)), 0, np.inf)
    assert_relative_close(tail.constants[1].value, expected, 1e-7)
    assert tail.constants[1].value > 1.0

    with pytest.raises(InvalidParameterError, match='gamma >= '):
        nonstationary_supremum_tail(2.0, 1.0, [1.0], model, TrendLocalModel(w=-0.2, gamma=0.4, t0=1.0), CHEAP_BUDGET)


def test_integral_exp_neg_f():
    assert_relative_close(integral_exp_neg_f(DriftFunctional.power(1.0, 2.0)), np.sqrt(np.pi) / 2, 1e-9)
    assert_relative_close(integral_exp_neg_f(DriftFunctional.power(2.0, 1.0, domain_start=float('-inf'))), 1.0, 1e-9)

    with pytest.raises(InvalidParameterError):
        integral_exp_neg_f(DriftFunctional())


def test_ou_chi_square_is_a_locally_stationary_case():
    # e^{-2|t|} = 1 - 2|t| + o(|t|): alpha = 1, a = 2
    for n in [1, 2, 3]:
        for T in [0.5, 1.0]:
            tail = locally_stationary_supremum_tail(2.0, 2.0, np.ones(n), 1.0, 2.0, T)

            for u in U_VALUES:
                assert_relative_close(tail.evaluate(u, mills=True), ou_chisq_supremum_tail(n, T, u))

    assert_relative_close(ou_chisq_supremum_tail(2, 1.0, 10.0), 2 * 10 * np.exp(-5))
    assert_relative_close(ou_chisq_supremum_tail(2, 1.0, 20.0), 2 * 20 * np.exp(-10))


def test_zero_trend_reduces_to_centered_locally_stationary_case():
    a_fn = TabulatedFunction((0.0, 0.5, 1.0), (1.0, 3.0, 2.0))

    for trend in [PowerTrend(0.0, 1.0, 0.5), TabulatedFunction((0.0, 1.0), (0.0, 0.0))]:
        for a in [2.0, a_fn]:
            with_trend = locally_stationary_trend_tail(2.0, 2.0, [1, 0.5], 1.0, a, 1.0, trend)
            centered = locally_stationary_supremum_tail(2.0, 2.0, [1, 0.5], 1.0, a, 1.0)

            for u in U_VALUES:
                assert_relative_close(with_trend.evaluate(u), centered.evaluate(u))


def test_zero_trend_nonstationary_matches_centered_assembly():
    budget = ConstantBudget(quad_abs_tol=1e-14)
    models = [
        NonStationaryLocalModel(b=0.5, beta=2.0, a=1.0, alpha=1.0, t0=0.5, T=1.0),   # Pickands, two-sided
        NonStationaryLocalModel(b=2.0, beta=3.0, a=0.7, alpha=1.0, t0=0.0, T=1.0),   # Pickands, one-sided
        NonStationaryLocalModel(b=1.0, beta=1.0, a=1.0, alpha=1.0, t0=0.0, T=1.0),   # Piterbarg
        NonStationaryLocalModel(b=1.0, beta=1.0, a=1.0, alpha=2.0, t0=0.3, T=1.0),   # pointwise
    ]

    for model in models:
        for p, weights in [(2.0, [1, 1]), (1.5, [1, 0.5])]:
            general = nonstationary_supremum_tail(p, 2.0, weights, model, None, budget)
            centered = centered_nonstationary_tail(p, 2.0, weights, model, budget)

            assert general.multiplier_kind == centered.multiplier_kind

            for u in U_VALUES:
                assert_relative_close(general.evaluate(u), centered.evaluate(u))


def test_nonstationary_piterbarg_closed_form():
    model = NonStationaryLocalModel(b=1.0, beta=1.0, a=1.0, alpha=1.0, t0=0.0, T=1.0)
    tail = nonstationary_supremum_tail(2.0, 2.0, [1.0], model)

    assert tail.multiplier_kind == MultiplierKind.PITERBARG_CONSTANT
    assert tail.multiplier_constant == 2.0
    assert tail.constants[0].provenance == 'closed_form'
    assert tail.relative_stderr == 0
    assert tail.to_dict([10.0])['evaluate_bands'] == []

    with pytest.raises(InvalidParameterError):
        nonstationary_supremum_tail(2.0, 2.0, [1.0], model, TrendLocalModel(1.0, 1.0, 0.5))


def test_example31_branches():
    for alpha in [1.5, 2.0]:
        tail = example31_tail(alpha, 2.0)

        assert tail.formula_id == 'ex31'
        assert tail.regime.case == Regime.POINTWISE
        assert tail.multiplier_constant == 1.0

    assert classify_regime(1.0, 1.0, 1.0, 0.5).case == Regime.PITERBARG
    assert classify_regime(0.5, 1.0, 1.0, 0.5).case == Regime.PICKANDS


def test_example32_trend_integral():
    tail = example32_tail(1.0, 2.0, 1.0, PowerTrend(1.0, 1.0, 0.5))
    integral = 8 * (1 - np.exp(-0.25))

    assert tail.formula_id == 'ex32'
    assert_relative_close(tail.multiplier_constant, integral, 1e-9)
    assert tail.multiplier_power == 1.0


def test_locally_stationary_tabulated_scale():
    a_fn = TabulatedFunction((0.0, 1.0), (1.0, 3.0))
    tail = locally_stationary_supremum_tail(2.0, 2.0, [1.0], 1.0, a_fn, 1.0)

    assert_relative_close(tail.multiplier_constant, 2.0, 1e-10)

    with pytest.raises(InvalidParameterError):
        locally_stationary_supremum_tail(2.0, 2.0, [1.0], 1.0, a_fn, 2.0)


def test_trend_with_unique_maximum():
    tail = locally_stationary_trend_tail(2.0, 1.0, [1.0], 1.0, 1.0, 1.0, PowerTrend(1.0, 1.0, 0.5))

    assert tail.regime.case == Regime.PICKANDS
    assert tail.multiplier_power == 1.0
    assert_relative_close(tail.multiplier_constant, 2.0, 1e-9)

    with pytest.raises(InvalidParameterError):
        locally_stationary_trend_tail(2.0, 1.0, [1.0], 1.0, 1.0, 1.0, PowerTrend(-1.0, 1.0, 0.5))

    flat_top = TabulatedFunction((0.0, 0.4, 0.6, 1.0), (-1.0, 0.0, 0.0, -1.0))
    with pytest.raises(InvalidParameterError):
        locally_stationary_trend_tail(2.0, 1.0, [1.0], 1.0, 1.0, 1.0, flat_top, TrendLocalModel(1.0, 1.0, 0.4))

    peaked = TabulatedFunction((0.0, 0.5, 1.0), (-1.0, 0.0, -1.0))
    with pytest.raises(InvalidParameterError):
        locally_stationary_trend_tail(2.0, 1.0, [1.0], 1.0, 1.0, 1.0, peaked)

    tail = locally_stationary_trend_tail(2.0, 1.0, [1.0], 1.0, 1.0, 1.0, peaked, TrendLocalModel(2.0, 1.0, 0.5))
    assert_relative_close(tail.multiplier_constant, 1.0, 1e-9)


def test_ruin_candidates():
    for alpha in [1.0, 1.5]:
        ruin = ruin_probability_asymptotic(alpha, [1.0], 1.0, 10.0)

        assert not ruin.disputed
        assert set(ruin.candidates()) == {'closed', 'theorem'}
        assert all(v > 0 for v in ruin.candidates().values())

    ruin = ruin_probability_asymptotic(0.5, [1.0], 1.0, 10.0, CHEAP_BUDGET)

    assert ruin.disputed
    assert_relative_close(ruin.discrepancy, 2.0, 1e-9)
    assert ruin.to_dict()['disputed']

    with pytest.raises(InvalidParameterError):
        ruin_probability_asymptotic(1.0, [1.0], 0.0, 10.0)


def test_unresolved_constant():
    with pytest.raises(UnresolvedConstantError):
        resolve_piterbarg(1.5, 1.0, DriftFunctional())


def test_invalid_models():
    with pytest.raises(InvalidParameterError):
        NonStationaryLocalModel(b=1.0, beta=1.0, a=1.0, alpha=1.0, t0=2.0, T=1.0)

    with pytest.raises(InvalidParameterError):
        NonStationaryLocalModel(b=0.0, beta=1.0, a=1.0, alpha=1.0, t0=0.0, T=1.0)

    with pytest.raises(InvalidParameterError):
        ou_chisq_supremum_tail(0, 1.0, 10.0)

    with pytest.raises(InvalidParameterError):
        TabulatedFunction((0.0, 0.0), (1.0, 1.0))
