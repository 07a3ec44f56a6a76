import numpy as np
import pytest

from extraqp import Iterate, StartingPoint, make_problem


@pytest.fixture
def toy():
    """min 1/2 x^2 subject to x >= 1, probed at w = (2, 1), mu = 0.5."""
    problem = make_problem([[1.0]], [0.0], a_ineq=[[1.0]], b_ineq=[-1.0],
                           name="toy")
    w = Iterate(np.array([2.0]), np.array([1.0]))
    return problem, w, 0.5


@pytest.fixture
def toy_start():
    return StartingPoint(x=np.array([2.0]), lam=np.array([1.0]), mu=0.5)


def random_interior_instance(rng, n, m_ineq, m_eq, name="rand"):
    """Feasible instance plus a strictly interior iterate near the data."""
    x = rng.standard_normal(n)
    g = rng.standard_normal((n, n))
    hessian = g @ g.T + n * np.eye(n)
    cost = rng.standard_normal(n)
    a_i = rng.standard_normal((m_ineq, n))
    b_i = rng.uniform(0.5, 1.5, m_ineq) - a_i @ x
    a_e = rng.standard_normal((m_eq, n))
    b_e = -a_e @ x
    problem = make_problem(hessian, cost, a_ineq=a_i, b_ineq=b_i,
                           a_eq=a_e, b_eq=b_e, name=name)
    lam = np.concatenate([rng.uniform(0.5, 1.5, m_ineq),
                          rng.standard_normal(m_eq)])
    return problem, Iterate(x, lam)
