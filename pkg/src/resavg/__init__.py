"""Fixed points of resolvent averages and scaled resolvent compositions."""
from ._backend import available_backends, get_backend, set_backend
from .catalog import (
    AbsSum, IndicatorAffine, IndicatorBall, IndicatorBox, IndicatorHalfspace, IndicatorPoint,
    Quadratic,
)
from .geometry import (
    GapData, GeometryReport, compute_geometry, counterexample_unscaled, decompose_fix,
    dual_objective, dual_solution, map_E_to_fix, map_F_to_fix, verify_relative_geometry,
    verify_subgradient_characterization,
)
from .operators import (
    AffineMonotone, Order, ResolventAverage, Subdifferential, Weights, resolvent, yosida,
)
from .solvers import (
    StoppingRule, run_alternating, run_composition, run_proximal_point,
)

__version__ = "0.1.0"

__all__ = [
    "AbsSum", "AffineMonotone", "GapData", "GeometryReport", "IndicatorAffine", "IndicatorBall",
    "IndicatorBox", "IndicatorHalfspace", "IndicatorPoint", "Order", "Quadratic",
    "ResolventAverage", "StoppingRule", "Subdifferential", "Weights", "available_backends",
    "compute_geometry", "counterexample_unscaled", "decompose_fix", "dual_objective",
    "dual_solution", "get_backend", "map_E_to_fix", "map_F_to_fix", "resolvent",
    "run_alternating", "run_composition", "run_proximal_point", "set_backend",
    "verify_relative_geometry", "verify_subgradient_characterization", "yosida",
]
