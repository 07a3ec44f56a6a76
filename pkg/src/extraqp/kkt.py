"""Perturbed KKT residual, Jacobian factorization, merit and ratio test.

The root system at barrier parameter mu is

    F_mu(x, lam) = [ g(x) - A' lam
                     C_I(x) lam_I - mu e
                     c_E(x) ]

with the dual vector ordered inequality rows first, then equality rows.
The Jacobian does not depend on mu, so one factorization serves every
right-hand side an iteration needs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .model import QpProblem

#: Smallest strictly positive normal double, the default interiority floor.
INTERIOR_FLOOR = float(np.finfo(float).tiny)

SINGULARITY_RTOL = 1e-12
SPARSE_DENSITY_CUTOFF = 0.25


class SingularFactorizationError(Exception):
    """Solving was attempted with a factorization flagged singular."""


class InteriorLossError(Exception):
    """The base point itself violates the interiority floor."""


@dataclass(frozen=True)
class Iterate:
    """Primal-dual point w = (x, lam)."""

    x: np.ndarray
    lam: np.ndarray

    @property
    def w(self) -> np.ndarray:
        return np.concatenate([self.x, self.lam])

    @classmethod
    def from_vector(cls, w: np.ndarray, n: int) -> "Iterate":
        return cls(x=np.asarray(w[:n], dtype=float),
                   lam=np.asarray(w[n:], dtype=float))

    def lam_ineq(self, problem: QpProblem) -> np.ndarray:
        return self.lam[:problem.m_ineq]


@dataclass(frozen=True)
class Residual:
    """Blocks of F_mu(w) together with the mu they were evaluated at."""

    stationarity: np.ndarray
    complementarity: np.ndarray
    equality: np.ndarray
    mu: float

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.stationarity, self.complementarity, self.equality])

    def norm2(self) -> float:
        return float(np.linalg.norm(self.vector))

    def norm_inf(self) -> float:
        v = self.vector
        return float(np.max(np.abs(v))) if v.size else 0.0


class KktFactorization:
    """LU factorization of the KKT Jacobian, dense or sparse.

    Immutable after construction; a non-singular instance may be used for
    any number of right-hand sides.
    """

    def __init__(self, matrix, singular: bool, solver=None):
        self._matrix = matrix
        self._solver = solver
        self.singular = singular

    @property
    def matrix(self):
        return self._matrix

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.singular:
            raise SingularFactorizationError("KKT Jacobian flagged singular")
        return self._solver(np.asarray(rhs, dtype=float))


def residual(problem: QpProblem, w: Iterate, mu: float) -> Residual:
    """Evaluate F_mu(w); valid at any point, interior or not."""
    lam_i = w.lam[:problem.m_ineq]
    lam_full = w.lam
    stat = problem.gradient(w.x) - problem.constraint_matrix().T @ lam_full
    compl = problem.c_ineq(w.x) * lam_i - mu
    eq = problem.c_eq(w.x)
    return Residual(stationarity=stat, complementarity=compl, equality=eq, mu=float(mu))


def assemble_jacobian(problem: QpProblem, w: Iterate) -> np.ndarray:
    """Dense KKT Jacobian at w (independent of mu)."""
    n, mi, me = problem.n, problem.m_ineq, problem.m_eq
    m = mi + me
    jac = np.zeros((n + m, n + m))
    a = problem.constraint_matrix()
    jac[:n, :n] = problem.hessian
    jac[:n, n:] = -a.T
    lam_i = w.lam[:mi]
    jac[n:n + mi, :n] = lam_i[:, None] * problem.a_ineq
    jac[n:n + mi, n:n + mi] = np.diag(problem.c_ineq(w.x))
    jac[n + mi:, :n] = problem.a_eq
    return jac


def _use_sparse(problem: QpProblem, mode: str) -> bool:
    if mode == "dense":
        return False
    if mode == "sparse":
        return True
    total = problem.hessian.size + 2 * problem.constraint_matrix().size
    nnz = (np.count_nonzero(problem.hessian)
           + 2 * np.count_nonzero(problem.constraint_matrix()))
    return total > 0 and nnz / total < SPARSE_DENSITY_CUTOFF


def jacobian(problem: QpProblem, w: Iterate, mode: str = "auto",
             diag_shift: float = 0.0) -> KktFactorization:
    """Factorize the KKT Jacobian at w.

    Singularity is a flag, not an error: the driver branches on it.  A pivot
    is considered zero below SINGULARITY_RTOL times the largest entry of the
    matrix.  ``diag_shift`` adds to the complementarity diagonal, used by the
    solver's one-shot regularization retry.
    """
    jac = assemble_jacobian(problem, w)
    if diag_shift:
        n, mi = problem.n, problem.m_ineq
        idx = np.arange(n, n + mi)
        jac[idx, idx] += diag_shift
    scale = float(np.max(np.abs(jac))) if jac.size else 0.0
    tol = SINGULARITY_RTOL * scale
    if scale == 0.0:
        return KktFactorization(jac, singular=True)

    if _use_sparse(problem, mode):
        sp = scipy.sparse.csc_matrix(jac)
        try:
            lu = scipy.sparse.linalg.splu(sp)
        except RuntimeError:
            return KktFactorization(jac, singular=True)
        if np.min(np.abs(lu.U.diagonal())) < tol:
            return KktFactorization(jac, singular=True)
        return KktFactorization(jac, singular=False, solver=lu.solve)

    try:
        with warnings.catch_warnings():
            # singularity is reported through the flag, not a warning
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(jac)
    except (ValueError, np.linalg.LinAlgError):
        return KktFactorization(jac, singular=True)
    if np.min(np.abs(np.diag(lu))) < tol:
        return KktFactorization(jac, singular=True)
    return KktFactorization(
        jac, singular=False,
        solver=lambda rhs: scipy.linalg.lu_solve((lu, piv), rhs))


def solve(factorization: KktFactorization, rhs: np.ndarray) -> np.ndarray:
    """Solve J v = rhs using a previously computed factorization."""
    return factorization.solve(rhs)


def merit(res: Residual) -> float:
    """2-norm of the stacked residual blocks."""
    return res.norm2()


def max_feasible_scaling(problem: QpProblem, w: Iterate, delta: np.ndarray,
                         floor: float = INTERIOR_FLOOR) -> float:
    """Largest alpha in (0, 1] keeping all implicit quantities >= floor.

    Closed-form ratio test over the affine constraint values c_I(x + a dx)
    and the inequality multipliers.  Raises if w itself is below the floor.
    """
    n, mi = problem.n, problem.m_ineq
    dx, dlam = delta[:n], delta[n:]
    vals = np.concatenate([problem.c_ineq(w.x), w.lam[:mi]])
    rates = np.concatenate([problem.a_ineq @ dx, dlam[:mi]])
    if np.any(vals < floor):
        raise InteriorLossError("base point violates the interiority floor")
    alpha = 1.0
    decreasing = rates < 0
    if np.any(decreasing):
        alpha = min(alpha, float(np.min(
            (vals[decreasing] - floor) / -rates[decreasing])))
    return max(alpha, 0.0)


def strictly_interior(problem: QpProblem, w: Iterate, floor: float = 0.0) -> bool:
    mi = problem.m_ineq
    return bool(np.all(problem.c_ineq(w.x) > floor) and np.all(w.lam[:mi] > floor))
