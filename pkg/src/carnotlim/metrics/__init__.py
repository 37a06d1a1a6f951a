"""Distances: exact box quasi-norms, certified CC brackets, probes."""

from .distance import (
    DistanceBracket,
    canonical_path,
    cc_lower_bound,
    cc_upper_bound,
    distance_bracket,
    lower_bound_routes,
)
from .paths import HorizontalPath, LiftResult, gamma_path, lift_polygonal
from .probes import (
    LipschitzEstimate,
    ModulusEstimate,
    lipschitz_estimate,
    modulus_probe,
    resolve_map,
    uniform_modulus_over_cloud,
)
from .quasinorm import (
    box_distance,
    box_lipschitz,
    quasi_norm,
    quasi_triangle_constant_estimate,
)

__all__ = [
    "DistanceBracket",
    "HorizontalPath",
    "LiftResult",
    "LipschitzEstimate",
    "ModulusEstimate",
    "box_distance",
    "box_lipschitz",
    "canonical_path",
    "cc_lower_bound",
    "cc_upper_bound",
    "distance_bracket",
    "gamma_path",
    "lift_polygonal",
    "lipschitz_estimate",
    "lower_bound_routes",
    "modulus_probe",
    "quasi_norm",
    "quasi_triangle_constant_estimate",
    "resolve_map",
    "uniform_modulus_over_cloud",
]
