"""Independent numerical oracles used by the tests.

These deliberately avoid the library's step computations: the trajectory is
traced by damped Newton continuation on the residual equations directly,
and derivatives come from central finite differences of that trajectory.
"""

import numpy as np

from extraqp import Iterate, jacobian, residual


def continuation_point(problem, w_start, mu, direction, rho, tol=1e-13,
                       max_iter=200):
    """Solve F_mu(w) = rho * direction by damped Newton from w_start."""
    n = problem.n
    w = np.array(w_start.w, dtype=float)
    for _ in range(max_iter):
        it = Iterate.from_vector(w, n)
        f = residual(problem, it, mu).vector - rho * direction
        if np.max(np.abs(f)) <= tol:
            return it
        jac = jacobian(problem, it, mode="dense")
        step = jac.solve(-f)
        alpha = 1.0
        base = np.linalg.norm(f)
        for _ in range(60):
            trial = Iterate.from_vector(w + alpha * step, n)
            if np.linalg.norm(residual(problem, trial, mu).vector
                              - rho * direction) < base:
                break
            alpha *= 0.5
        w = w + alpha * step
    raise RuntimeError("continuation Newton did not converge")


def trajectory_derivative_terms(problem, w, mu, orders, h=0.01):
    """Finite-difference estimates of the scaled step derivatives.

    Returns, for each q in ``orders``, the q-th derivative of the
    continuation curve at rho = ||r|| multiplied by (-||r||)^q, matching
    the solver's per-order step terms before the 1/q! scaling.
    """
    r = residual(problem, w, mu).vector
    rho0 = np.linalg.norm(r)
    direction = r / rho0
    step = h * rho0

    def point(offset):
        return continuation_point(problem, w, mu, direction,
                                  rho0 + offset * step).w

    cache = {k: point(k) for k in (-2, -1, 0, 1, 2)}
    out = {}
    for q in orders:
        if q == 1:
            d = (cache[1] - cache[-1]) / (2 * step)
        elif q == 2:
            d = (cache[1] - 2 * cache[0] + cache[-1]) / step ** 2
        elif q == 3:
            d = (cache[2] - 2 * cache[1] + 2 * cache[-1] - cache[-2]) \
                / (2 * step ** 3)
        else:
            raise ValueError("orders above 3 are not supported")
        out[q] = d * (-rho0) ** q
    return out
