import sys; sys.path.append('.')
import csv
import json

import numpy as np
import pytest
from scipy.stats import chi2

from src.sampling.gaussian_paths import FractionalBM, OrnsteinUhlenbeck
from src.tails.pointwise_tail import pointwise_tail_mc
from src.tails.tail_asymptotics import PowerTrend, ou_chisq_supremum_tail
from src.validation.mc_validation import (
    ValidationSettings, SupremumQuery, RATIO_COLUMNS, resolve_grid, path_chunk_size, count_hits,
    check_feasibility, sweep_exceedance, supremum_exceedance, ratio_table, ratio_curve, ruin_query, ruin_mc,
    arbitrate_candidates, write_ratio_csv, arbitration_verdict, format_cell,
)
from src.utils.errors import InvalidParameterError, InfeasibleTargetError

FAST = ValidationSettings(pilot_samples=2000, chunk_size=500)
# Checks on whether a CI contains 1
WIDE = ValidationSettings(pilot_samples=2000, chunk_size=500, ci_level=0.999)

# Paths of the alpha = 2 fBm are t * Z, so sup_{[0, 1]} ||X(t)||_2^2 = Z_1^2 + Z_2^2 on every grid
LINEAR_QUERY = SupremumQuery(FractionalBM(2.0), 2, [1.0, 1.0], 2, 2, 1.0)


def chi2_2_tail(u):
    return np.exp(-u / 2)


def test_resolve_grid():
    query = SupremumQuery(FractionalBM(1.0), 1, [1.0], 2, 2, 1.0)

    assert resolve_grid(query, 0.5) == 16
    assert resolve_grid(query, 100.0) == 1024
    assert resolve_grid(query, 100.0, ValidationSettings(max_grid=256)) == 256
    assert resolve_grid(query.with_u(100.0)) == 1024

    # Smoother paths need coarser grids
    assert resolve_grid(SupremumQuery(FractionalBM(2.0), 1, [1.0], 2, 2, 1.0), 100.0) == 128

    # The window is min(T, u^{-1}) for every positive u
    long_query = SupremumQuery(FractionalBM(1.0), 1, [1.0], 2, 2, 4.0)
    assert resolve_grid(long_query, 0.5) == 32
    assert resolve_grid(long_query, 0.0) == 16


def test_path_chunk_size_depends_on_memory_only():
    query = SupremumQuery(OrnsteinUhlenbeck(1.0), 2, [1.0, 0.5], 2, 1, 1.0)
    settings = ValidationSettings(chunk_size=1000, memory_budget=8 * 101 * 2 * 10)

    assert path_chunk_size(query, 100, settings) == 10
    assert path_chunk_size(query, 100, ValidationSettings(chunk_size=1000)) == 1000
    assert path_chunk_size(query, 10 ** 9, settings) == 1


def test_count_hits():
    suprema = [np.array([0.5, 2.0, 3.0]), np.array([1.5, 4.0])]

    assert count_hits(suprema, [1.0, 2.0, 5.0]).tolist() == [4, 2, 0]


def test_sweep_matches_exact_probabilities():
    u_values = [2.0, 4.0, 6.0]
    sweep = sweep_exceedance(LINEAR_QUERY, u_values, 20000, seed=1, asymptotic=chi2_2_tail, settings=FAST)

    assert sweep.u_values == u_values
    assert len(sweep.infeasible) == 0

    for u in u_values:
        estimate = sweep.estimates[u]

        assert estimate.N == resolve_grid(LINEAR_QUERY, 6.0, FAST)
        assert estimate.refined_n_samples == 2000
        assert estimate.refinement_difference == 0
        assert estimate.refined_p_hat == estimate.p_hat
        assert not estimate.discretization_flag
        assert abs(estimate.p_hat - chi2_2_tail(u)) < 4 * estimate.stderr, f'u={u}'

    hits = [sweep.estimates[u].hits for u in u_values]
    assert hits == sorted(hits, reverse=True)


def test_sweep_does_not_depend_on_threads():
    query = SupremumQuery(OrnsteinUhlenbeck(2.0), 2, [1.0, 1.0], 2, 2, 1.0)
    estimates = [
        sweep_exceedance(query, [3.0, 5.0], 3000, seed=4, settings=ValidationSettings(chunk_size=256, threads=threads)).estimates
        for threads in [1, 3]
    ]

    assert estimates[0] == estimates[1]


def test_infeasible_targets():
    feasibility = check_feasibility(LINEAR_QUERY, [1.0, 60.0], 1000, seed=2, asymptotic=chi2_2_tail, settings=FAST)

    assert feasibility[1.0].feasible
    assert feasibility[1.0].pilot_p_hat is None
    assert not feasibility[60.0].feasible
    assert feasibility[60.0].pilot_p_hat == 0
    assert 0 < feasibility[60.0].suggested_u < 60.0

    sweep = sweep_exceedance(LINEAR_QUERY, [1.0, 60.0], 1000, seed=2, asymptotic=chi2_2_tail, settings=FAST)

    assert set(sweep.estimates) == {1.0}
    assert set(sweep.infeasible) == {60.0}
    assert sweep.u_values == [1.0, 60.0]

    with pytest.raises(InfeasibleTargetError) as error:
        supremum_exceedance(LINEAR_QUERY.with_u(60.0), 1000, seed=2, settings=FAST)

    assert error.value.u == 60.0
    assert error.value.suggested_u < 60.0


def test_ratio_table():
    # With 5000 samples a pilot without hits rules u = 60 out
    sweep = sweep_exceedance(LINEAR_QUERY, [2.0, 4.0, 6.0, 60.0], 5000, seed=3, asymptotic=chi2_2_tail, settings=WIDE)
    table = ratio_table(sweep, chi2_2_tail, settings=WIDE)

    assert [row['u'] for row in table.rows] == [2.0, 4.0, 6.0, 60.0]
    assert all(set(row) == set(RATIO_COLUMNS) for row in table.rows)
    assert table.rows[-1]['status'] == 'infeasible'
    assert table.rows[-1]['ratio'] is None
    assert len(table.valid_rows) == 3

    for row in table.valid_rows:
        assert row['ci_lo'] <= row['ratio'] <= row['ci_hi']
        assert row['n'] == 5000

    assert not table.non_converged
    assert table.final_ci_contains(1.0)

    # Off by a factor of two is outside the (0.7, 1.3) band
    assert ratio_table(sweep, lambda u: 2 * chi2_2_tail(u), settings=WIDE).non_converged


def test_ratio_curve_requires_increasing_u():
    with pytest.raises(InvalidParameterError):
        ratio_curve(LINEAR_QUERY, [4.0, 2.0], chi2_2_tail, 1000, seed=0, settings=FAST)

    with pytest.raises(InvalidParameterError):
        sweep_exceedance(LINEAR_QUERY, [4.0], 0, seed=0)


def ou_query(T=1.0):
    return SupremumQuery(OrnsteinUhlenbeck(2.0), 2, [1.0, 1.0], 2, 2, T)


def ou_chi2_tail(u):
    return ou_chisq_supremum_tail(2, 1.0, u)


def test_refinement_flags_coarse_grids():
    # All refinement paths are paired: the N grid misses exceedances the 2N grid sees
    coarse = ValidationSettings(lambda_res=10, refine_fraction=1.0, chunk_size=2000)
    sweep = sweep_exceedance(ou_query(), [14.0], 50000, seed=11, asymptotic=ou_chi2_tail, settings=coarse)
    estimate = sweep.estimates[14.0]

    assert estimate.N == 256
    assert estimate.refined_n_samples == 50000
    assert estimate.refinement_difference > 0
    assert estimate.refined_p_hat > estimate.p_hat
    assert estimate.discretization_flag
    assert estimate.refinement_difference > 3 * estimate.refinement_stderr

    row = ratio_table(sweep, ou_chi2_tail, settings=coarse).rows[0]
    assert row['status'] == 'refinement_mismatch'
    assert row['refined_p_hat'] == estimate.refined_p_hat


def test_ou_ratio_on_a_fine_grid():
    coarse = ValidationSettings(lambda_res=10, chunk_size=2000, convergence_band=(0.8, 1.2))
    fine = ValidationSettings(lambda_res=80, chunk_size=2000, convergence_band=(0.8, 1.2))
    coarse_sweep = sweep_exceedance(ou_query(), [14.0], 50000, seed=12, asymptotic=ou_chi2_tail, settings=coarse)
    fine_sweep = sweep_exceedance(ou_query(), [14.0], 100000, seed=13, asymptotic=ou_chi2_tail, settings=fine)
    table = ratio_table(fine_sweep, ou_chi2_tail, settings=fine)

    assert fine_sweep.estimates[14.0].N == 2048
    assert not table.non_converged
    assert fine_sweep.estimates[14.0].p_hat > coarse_sweep.estimates[14.0].p_hat


def test_supremum_monotonicity():
    settings = ValidationSettings(chunk_size=2000)
    sweep = sweep_exceedance(ou_query(), [8.0, 10.0, 12.0], 20000, seed=14, settings=settings, refine=False)
    p_hats = [sweep.estimates[u].p_hat for u in [8.0, 10.0, 12.0]]

    # The same paths for every threshold
    assert p_hats == sorted(p_hats, reverse=True)

    short = sweep_exceedance(ou_query(0.5), [12.0], 20000, seed=15, settings=settings, refine=False).estimates[12.0]
    long = sweep_exceedance(ou_query(2.0), [12.0], 20000, seed=16, settings=settings, refine=False).estimates[12.0]
    assert long.p_hat - short.p_hat > 3 * np.hypot(long.stderr, short.stderr)

    # The supremum dominates the value at t = 0
    pointwise = pointwise_tail_mc(2.0, 2.0, [1.0, 1.0], 12.0, 20000, seed=17)
    estimate = sweep.estimates[12.0]
    assert estimate.p_hat >= pointwise.p_hat - 3 * np.hypot(estimate.stderr, pointwise.stderr)


def test_ruin_query():
    query = ruin_query(1.5, [1.0, 0.5], 2.0, 3.0)

    assert query.process == FractionalBM(1.5)
    assert query.n_components == 2
    assert (query.p.p, query.c, query.T, query.u) == (2.0, 2.0, 1.0, 3.0)
    assert query.trend == PowerTrend(2.0, 1.0, 0.0)
    assert np.allclose(query.trend(np.array([0.0, 0.5, 1.0])), [0.0, -1.0, -2.0])

    with pytest.raises(InvalidParameterError):
        ruin_mc(1.0, [1.0], -1.0, 3.0, 100, seed=0)


def test_ruin_mc_with_linear_paths():
    # max_t (t^2 Z^2 - w t) = max(0, Z^2 - w): ruin above u happens iff Z^2 > u + w
    estimate = ruin_mc(2.0, [1.0], 1.0, 3.0, 20000, seed=6, settings=FAST)

    assert abs(estimate.p_hat - chi2.sf(4.0, 1)) < 4 * estimate.stderr


def test_arbitration(tmp_path):
    sweep = sweep_exceedance(LINEAR_QUERY, [2.0, 4.0, 6.0], 20000, seed=5, asymptotic=chi2_2_tail, settings=WIDE)
    verdict = arbitrate_candidates(sweep, {'exact': chi2_2_tail, 'doubled': lambda u: 2 * chi2_2_tail(u)}, WIDE)

    assert verdict.contains_one == {'exact': True, 'doubled': False}
    assert verdict.verdict == 'exact'

    arbitration_verdict(verdict, tmp_path / 'verdict.json', {'command': 'validate'})
    with open(tmp_path / 'verdict.json') as f:
        record = json.load(f)

    assert record['verdict'] == 'exact'
    assert record['manifest'] == {'command': 'validate'}
    assert abs(record['final_ratios']['doubled'] - 0.5 * record['final_ratios']['exact']) < 1e-12

    write_ratio_csv(verdict.tables['exact'], tmp_path / 'ratios.csv')
    with open(tmp_path / 'ratios.csv') as f:
        rows = list(csv.reader(f))

    assert rows[0] == RATIO_COLUMNS
    assert len(rows) == 4
    assert float(rows[1][RATIO_COLUMNS.index('u')]) == 2.0


def test_format_cell():
    assert format_cell(None) == ''
    assert format_cell(0.1) == '0.1'
    assert format_cell(np.float64(0.25)) == '0.25'
    assert format_cell(3) == '3'
    assert format_cell('ok') == 'ok'
