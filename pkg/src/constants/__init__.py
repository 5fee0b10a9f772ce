from src.constants.extreme_constants import (
    DriftFunctional, ConstantEstimate, pickands_window, pickands_window_profile, pickands_constant,
    pickands_stability, piterbarg_constant, piterbarg_closed_form, minimal_truncation_window,
    piterbarg_two_sided_identity,
)
