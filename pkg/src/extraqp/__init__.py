"""Primal-dual interior-point QP solver with higher-order trajectory extrapolation."""

from .extrapolate import TaylorTerms, assemble, compute_terms, feasible_theta, newton_step
from .kkt import (
    INTERIOR_FLOOR,
    Iterate,
    KktFactorization,
    Residual,
    jacobian,
    max_feasible_scaling,
    merit,
    residual,
)
from .model import (
    PreprocessError,
    PreprocessReport,
    QpProblem,
    RawQp,
    StartingPoint,
    add_shifts,
    initial_point,
    make_problem,
    normalize,
    prepare,
)
from .qps import QpsParseError, load_qps, parse_qps, write_qps
from .randgen import RandomSpec, random_orthogonal, random_qp
from .solvers import SolveResult, SolverConfig, solve, solve_mehrotra, update_mu

__version__ = "0.1.0"

__all__ = [
    "INTERIOR_FLOOR", "Iterate", "KktFactorization", "PreprocessError",
    "PreprocessReport", "QpProblem", "QpsParseError", "RandomSpec", "RawQp",
    "Residual", "SolveResult", "SolverConfig", "StartingPoint", "TaylorTerms",
    "add_shifts", "assemble", "compute_terms", "feasible_theta",
    "initial_point", "jacobian", "load_qps", "make_problem",
    "max_feasible_scaling", "merit", "newton_step", "normalize", "parse_qps",
    "prepare", "random_orthogonal", "random_qp", "residual", "solve",
    "solve_mehrotra", "update_mu", "write_qps",
]
