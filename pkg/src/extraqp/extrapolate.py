"""Higher-order Taylor extrapolation steps along the barrier trajectory.

From an iterate w with residual r at barrier parameter mu, the solver
follows the implicitly defined curve that keeps the residual direction but
shrinks its norm to zero.  The curve's derivative terms all solve linear
systems in the same KKT Jacobian: the first term is the Newton step and,
for quadratic objectives with affine constraints, term q+1 has a
right-hand side built from bilinear products of the earlier terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from . import kkt
from .kkt import Iterate, KktFactorization
from .model import QpProblem

MAX_ORDER = 10
THETA_BACKTRACK_FACTOR = 0.9
THETA_MAX_TRIALS = 200


@dataclass(frozen=True)
class TaylorTerms:
    """Extrapolation terms w~1..w~p at a base iterate.

    ``terms[q-1]`` holds w~q = w^q / q!, so a partial step at fraction theta
    is the plain polynomial w + sum_q theta^q w~q.  All terms share the one
    Jacobian factorization computed at the base point.
    """

    base: Iterate
    mu: float
    residual_vector: np.ndarray
    terms: tuple[np.ndarray, ...]

    @property
    def order(self) -> int:
        return len(self.terms)


@dataclass
class StepCandidate:
    """A candidate next iterate produced by one of the step rules."""

    iterate: Iterate
    theta: float
    order: int
    label: str
    merit: float | None = None


def compute_terms(problem: QpProblem, w: Iterate, mu: float, order: int,
                  factorization: KktFactorization | None = None) -> TaylorTerms:
    """Compute the extrapolation terms up to the requested order.

    The first scaled derivative solves J w^1 = -r.  Each subsequent one
    solves, against the same factorization,

        J w^{q+1} = -sum_{i=1}^{q} C(q+1, i) [0; lam^{q+1-i}_I * (A_I x^i); 0]

    where lam^j_I and x^j are the dual-inequality and primal blocks of the
    earlier scaled derivatives.  Terms are stored divided by q!.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"order must be in 1..{MAX_ORDER}")
    if factorization is None:
        factorization = kkt.jacobian(problem, w)
    if factorization.singular:
        raise kkt.SingularFactorizationError(
            "cannot extrapolate from a singular KKT Jacobian")

    n, mi = problem.n, problem.m_ineq
    r = kkt.residual(problem, w, mu).vector
    hats = [factorization.solve(-r)]
    for q in range(1, order):
        rhs = np.zeros(n + problem.m)
        compl = np.zeros(mi)
        for i in range(1, q + 1):
            lam_block = hats[q - i][n:n + mi]
            x_block = hats[i - 1][:n]
            compl += comb(q + 1, i) * lam_block * (problem.a_ineq @ x_block)
        rhs[n:n + mi] = -compl
        hats.append(factorization.solve(rhs))

    factorials = np.cumprod(np.arange(1, order + 1, dtype=float))
    terms = tuple(h / f for h, f in zip(hats, factorials))
    return TaylorTerms(base=w, mu=float(mu), residual_vector=r, terms=terms)


def assemble(t: TaylorTerms, theta: float,
             uniform_scaling: bool = False) -> Iterate:
    """Evaluate the step polynomial at theta.

    theta=1 is the full extrapolation step, theta=0 returns the base
    iterate.  ``uniform_scaling`` multiplies every term by theta instead of
    theta^q; it is off by default because the uniformly scaled variant is
    not globally convergent.
    """
    n = t.base.x.shape[0]
    if uniform_scaling:
        step = theta * sum(t.terms)
    else:
        # Horner evaluation of sum_q theta^q w~q.
        step = np.zeros_like(t.terms[0])
        for term in reversed(t.terms):
            step = theta * (term + step)
    w = t.base.w + step
    return Iterate.from_vector(w, n)


def newton_step(t: TaylorTerms) -> Iterate:
    """Order-1 special case: the Newton step for the perturbed system."""
    n = t.base.x.shape[0]
    return Iterate.from_vector(t.base.w + t.terms[0], n)


def feasible_theta(problem: QpProblem, t: TaylorTerms,
                   floor: float = kkt.INTERIOR_FLOOR) -> float:
    """Largest theta on a geometric backtracking grid keeping interiority.

    The constraint path is a degree-p polynomial in theta, so instead of
    polynomial root-finding the grid theta <- 0.9 theta is searched from 1.
    Returns 0 when no grid point stays feasible.
    """
    theta = 1.0
    for _ in range(THETA_MAX_TRIALS):
        if _at_floor(problem, assemble(t, theta), floor):
            return theta
        theta *= THETA_BACKTRACK_FACTOR
    return 0.0


def _at_floor(problem: QpProblem, w: Iterate, floor: float) -> bool:
    mi = problem.m_ineq
    return bool(np.all(problem.c_ineq(w.x) >= floor)
                and np.all(w.lam[:mi] >= floor))
