"""Numerical verification of Serrin-type overdetermined problems ``Δu + nku = -1`` on warped products."""

__version__ = "0.1.0"

from .errors import (
    DegenerateMetricError,
    DomainError,
    PoleError,
    PositivityError,
    ResonanceError,
    SerrinLabError,
    SolverError,
    UnsupportedError,
    UsageError,
)
from .geometry import WarpModel, curvature_sample, eval_warp, make_warp, model_from_name, space_form
from .radial import BallProblem, RadialSolution, SlabProblem, solve_ball, solve_slab
from .report import IdentityReport

__all__ = [
    "BallProblem",
    "DegenerateMetricError",
    "DomainError",
    "IdentityReport",
    "PoleError",
    "PositivityError",
    "RadialSolution",
    "ResonanceError",
    "SerrinLabError",
    "SlabProblem",
    "SolverError",
    "UnsupportedError",
    "UsageError",
    "WarpModel",
    "__version__",
    "curvature_sample",
    "eval_warp",
    "make_warp",
    "model_from_name",
    "solve_ball",
    "solve_slab",
    "space_form",
]
