"""Numerical laboratory for the one-dimensional time-fractional diffusion
equation ``d_t^alpha u = u_xx - p(x) u`` and the recovery of ``p`` from
lateral Cauchy data at ``x = 0``."""

__version__ = "0.1.0"

from .core import (
    CauchyTrace,
    CoefficientField,
    FieldSolution,
    ProblemConfig,
    SpatialGrid,
    TimeGrid,
    make_time_grid,
    make_uniform_grid,
)
from .exceptions import ConvergenceError, PreconditionViolation, SolverFailure
from .expressions import compile_expression
from .forward_l1 import extract_trace, solve_ibvp
from .goursat import TransmutationKernel, solve_kernel
from .mittag_leffler import ml_decay_table, ml_eval, mittag_leffler
from .spectral import eigendecompose, spectral_solve
from .transmutation import apply_transform, transformed_equation_residual

__all__ = [
    "__version__",
    "CauchyTrace",
    "CoefficientField",
    "FieldSolution",
    "ProblemConfig",
    "SpatialGrid",
    "TimeGrid",
    "make_time_grid",
    "make_uniform_grid",
    "ConvergenceError",
    "PreconditionViolation",
    "SolverFailure",
    "compile_expression",
    "extract_trace",
    "solve_ibvp",
    "TransmutationKernel",
    "solve_kernel",
    "ml_decay_table",
    "ml_eval",
    "mittag_leffler",
    "eigendecompose",
    "spectral_solve",
    "apply_transform",
    "transformed_equation_residual",
]
