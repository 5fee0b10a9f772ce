from .norm_geometry import (
    WeightVector,
    NormOrder,
    DualGeometry,
    MaximizerKind,
    dual_exponent,
    critical_scale,
    weighted_lp_norm,
    dual_witness,
)
