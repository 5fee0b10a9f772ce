"""
Builds every supported asymptotic formula from a flat parameter dict (CLI flags or a scenario file)
"""
from dataclasses import dataclass
from typing import Callable, Dict, Any, Sequence

from src.geometry.norm_geometry import WeightVector
from src.tails.pointwise_tail import pointwise_tail_asymptotic
from src.tails.tail_asymptotics import (
    ConstantBudget, NonStationaryLocalModel, TrendLocalModel, TabulatedFunction, PowerTrend, TailApproximation,
    nonstationary_supremum_tail, centered_nonstationary_tail, locally_stationary_supremum_tail,
    locally_stationary_trend_tail, example31_tail, example32_tail, ruin_probability_asymptotic, ou_chisq_supremum_tail,
)
from src.utils.errors import InvalidParameterError


@dataclass
class FormulaResult:
    name: str
    record_fn: Callable[[Sequence[float]], Dict[str, Any]]
    candidates: Dict[str, Callable[[float], float]]

    def record(self, u_values: Sequence[float]) -> Dict[str, Any]:
        return self.record_fn(u_values)


def require(params: Dict[str, Any], *keys: str):
    missing = [k for k in keys if params.get(k) is None]

    if missing:
        raise InvalidParameterError(f'Missing parameters: {missing}')


def parse_weights(params: Dict[str, Any]) -> WeightVector:
    weights = params.get('weights')

    if weights is None:
        return WeightVector.ones(int(params.get('n', 1)))
    elif isinstance(weights, str):
        return WeightVector.from_string(weights)
    else:
        return WeightVector.of(weights)


def parse_local_scale(params: Dict[str, Any]):
    if params.get('a_table') is not None:
        times, values = zip(*params['a_table'])
        return TabulatedFunction(times, values)

    require(params, 'a')

    return float(params['a'])


def parse_trend(params: Dict[str, Any]):
    trend = params.get('trend')

    if trend is None:
        require(params, 'w', 'gamma', 't0')
        return PowerTrend(float(params['w']), float(params['gamma']), float(params['t0']))
    elif trend.get('type') == 'power':
        return PowerTrend(float(trend['w']), float(trend['gamma']), float(trend['t0']))
    elif trend.get('type') == 'table':
        return TabulatedFunction(trend['times'], trend['values'])
    else:
        raise InvalidParameterError(f'Unknown trend type: {trend.get("type")}')


def parse_trend_local(params: Dict[str, Any]):
    trend = params.get('trend')

    if trend is not None and trend.get('type') == 'table':
        return TrendLocalModel(float(trend['w']), float(trend['gamma']), float(trend['t0']))

    return None


def from_tail_approximation(name: str, approx: TailApproximation, mills: bool) -> FormulaResult:
    return FormulaResult(
        name=name,
        record_fn=lambda u_values: approx.to_dict(u_values, mills=mills),
        candidates={'asymptotic': lambda u: approx.evaluate(u, mills=mills)},
    )


def build_thm31(params: Dict[str, Any], budget: ConstantBudget) -> TailApproximation:
    require(params, 'p', 'c', 'b', 'beta', 'a', 'alpha', 't0', 'T')
    model = NonStationaryLocalModel(params['b'], params['beta'], params['a'], params['alpha'], params['t0'], params['T'])
    w = params.get('w') or 0.0

    if w == 0:
        return centered_nonstationary_tail(params['p'], params['c'], parse_weights(params), model, budget) \
            if params.get('centered') else nonstationary_supremum_tail(params['p'], params['c'], parse_weights(params), model, None, budget)

    require(params, 'gamma')
    trend = TrendLocalModel(w, params['gamma'], params['t0'])

    return nonstationary_supremum_tail(params['p'], params['c'], parse_weights(params), model, trend, budget)


def build_thm32(params: Dict[str, Any], budget: ConstantBudget) -> TailApproximation:
    require(params, 'p', 'c', 'alpha', 'T')
    return locally_stationary_supremum_tail(params['p'], params['c'], parse_weights(params), params['alpha'],
                                            parse_local_scale(params), params['T'], budget)


def build_thm33(params: Dict[str, Any], budget: ConstantBudget) -> TailApproximation:
    require(params, 'p', 'c', 'alpha', 'T')
    return locally_stationary_trend_tail(params['p'], params['c'], parse_weights(params), params['alpha'],
                                         parse_local_scale(params), params['T'], parse_trend(params),
                                         parse_trend_local(params), budget)


def build_ex31(params: Dict[str, Any], budget: ConstantBudget) -> TailApproximation:
    require(params, 'alpha', 'p')
    return example31_tail(params['alpha'], params['p'], params.get('c') or 1.0, parse_weights(params), budget)


def build_ex32(params: Dict[str, Any], budget: ConstantBudget) -> TailApproximation:
    require(params, 'alpha', 'T')
    return example32_tail(params['alpha'], parse_local_scale(params), params['T'], parse_trend(params),
                          parse_weights(params), budget)


def build_ruin(params: Dict[str, Any], budget: ConstantBudget) -> FormulaResult:
    require(params, 'alpha', 'w')
    weights = parse_weights(params)
    evaluate = lambda u: ruin_probability_asymptotic(params['alpha'], weights, params['w'], u, budget)

    return FormulaResult(
        name='ruin',
        record_fn=lambda u_values: {'formula_id': 'ruin', 'evaluations': [evaluate(u).to_dict() for u in u_values]},
        candidates={
            'closed': lambda u: evaluate(u).closed_value,
            'theorem': lambda u: evaluate(u).theorem_value,
        },
    )


def build_ouchi(params: Dict[str, Any], budget: ConstantBudget) -> FormulaResult:
    require(params, 'n', 'T')
    n, T = int(params['n']), float(params['T'])

    return FormulaResult(
        name='ouchi',
        record_fn=lambda u_values: {'formula_id': 'ouchi', 'n': n, 'T': T,
                                    'evaluate_samples': [[u, ou_chisq_supremum_tail(n, T, u)] for u in u_values]},
        candidates={'asymptotic': lambda u: ou_chisq_supremum_tail(n, T, u)},
    )


def build_pointwise(params: Dict[str, Any], budget: ConstantBudget) -> FormulaResult:
    require(params, 'p', 'c')
    tail = pointwise_tail_asymptotic(params['p'], params['c'], parse_weights(params))
    mills = bool(params.get('mills'))

    return FormulaResult(
        name='pointwise',
        record_fn=lambda u_values: {'formula_id': 'pointwise', **tail.to_dict(),
                                    'evaluate_samples': [[u, tail.evaluate(u, mills=mills)] for u in u_values]},
        candidates={'asymptotic': lambda u: tail.evaluate(u, mills=mills)},
    )


TAIL_APPROXIMATIONS = {
    'thm31': build_thm31,
    'thm32': build_thm32,
    'thm33': build_thm33,
    'ex31': build_ex31,
    'ex32': build_ex32,
}

OTHER_FORMULAS = {
    'ruin': build_ruin,
    'ouchi': build_ouchi,
    'pointwise': build_pointwise,
}

FORMULAS = sorted(list(TAIL_APPROXIMATIONS) + list(OTHER_FORMULAS))


def build_formula(name: str, params: Dict[str, Any], budget: ConstantBudget=ConstantBudget()) -> FormulaResult:
    if name in TAIL_APPROXIMATIONS:
        return from_tail_approximation(name, TAIL_APPROXIMATIONS[name](params, budget), bool(params.get('mills')))
    elif name in OTHER_FORMULAS:
        return OTHER_FORMULAS[name](params, budget)
    else:
        raise InvalidParameterError(f'Unknown formula: {name}. Known: {FORMULAS}')
