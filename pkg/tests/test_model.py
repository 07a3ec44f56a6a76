import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extraqp import (
    PreprocessError,
    RawQp,
    add_shifts,
    initial_point,
    make_problem,
    normalize,
    prepare,
)


def raw_without_bounds(n=2):
    return RawQp(hessian=np.eye(n), linear_cost=np.zeros(n),
                 a_ineq=np.zeros((0, n)), b_ineq=np.zeros(0),
                 a_eq=np.zeros((0, n)), b_eq=np.zeros(0),
                 lower=np.full(n, -np.inf), upper=np.full(n, np.inf))


class TestNormalize:
    def test_no_bounds_is_identity(self):
        problem, report = normalize(raw_without_bounds())
        assert problem.m_ineq == 0 and problem.m_eq == 0
        assert report.fixed == []
        assert np.array_equal(report.kept_indices, [0, 1])

    def test_box_bounds_become_rows(self):
        raw = RawQp(hessian=np.eye(2), linear_cost=np.zeros(2),
                    a_ineq=np.zeros((0, 2)), b_ineq=np.zeros(0),
                    a_eq=np.zeros((0, 2)), b_eq=np.zeros(0),
                    lower=np.array([0.0, -np.inf]),
                    upper=np.array([1.0, np.inf]))
        problem, _ = normalize(raw)
        assert problem.m_ineq == 2
        # x1 >= 0 and 1 - x1 >= 0
        assert np.allclose(problem.a_ineq, [[1, 0], [-1, 0]])
        assert np.allclose(problem.b_ineq, [0, 1])

    def test_fixed_variable_substitution(self):
        raw = RawQp(hessian=np.eye(2), linear_cost=np.zeros(2),
                    a_ineq=np.zeros((0, 2)), b_ineq=np.zeros(0),
                    a_eq=np.zeros((0, 2)), b_eq=np.zeros(0),
                    lower=np.array([3.0, -np.inf]),
                    upper=np.array([3.0, np.inf]))
        problem, report = normalize(raw)
        assert problem.n == 1
        assert problem.offset == pytest.approx(4.5)
        assert report.fixed == [(0, 3.0)]
        # reduced objective evaluated at x2 must match the original at (3, x2)
        for x2 in (-1.0, 0.0, 2.5):
            original = 0.5 * (9.0 + x2 ** 2)
            assert problem.objective(np.array([x2])) == pytest.approx(original)

    def test_infeasible_bounds(self):
        raw = RawQp(hessian=np.eye(1), linear_cost=np.zeros(1),
                    a_ineq=np.zeros((0, 1)), b_ineq=np.zeros(0),
                    a_eq=np.zeros((0, 1)), b_eq=np.zeros(0),
                    lower=np.array([2.0]), upper=np.array([1.0]))
        with pytest.raises(PreprocessError):
            normalize(raw)

    def test_restore_round_trip(self):
        rng = np.random.default_rng(5)
        raw = RawQp(hessian=np.eye(4), linear_cost=rng.standard_normal(4),
                    a_ineq=rng.standard_normal((2, 4)),
                    b_ineq=rng.standard_normal(2),
                    a_eq=np.zeros((0, 4)), b_eq=np.zeros(0),
                    lower=np.array([-np.inf, 2.0, 0.0, -np.inf]),
                    upper=np.array([np.inf, 2.0, np.inf, 1.0]))
        problem, report = normalize(raw)
        x_norm = rng.standard_normal(problem.n)
        x_orig = report.restore(x_norm)
        assert x_orig[1] == 2.0
        # original row activity reproduced on corresponding rows
        orig_rows = raw.a_ineq @ x_orig + raw.b_ineq
        norm_rows = problem.c_ineq(x_norm)[:2]
        assert np.allclose(orig_rows, norm_rows)

    def test_idempotent_on_normalized_problem(self):
        raw = RawQp(hessian=np.eye(2), linear_cost=np.ones(2),
                    a_ineq=np.array([[1.0, 1.0]]), b_ineq=np.array([0.5]),
                    a_eq=np.zeros((0, 2)), b_eq=np.zeros(0),
                    lower=np.full(2, -np.inf), upper=np.full(2, np.inf))
        once, _ = normalize(raw)
        again, _ = normalize(RawQp(
            hessian=once.hessian, linear_cost=once.linear_cost,
            a_ineq=once.a_ineq, b_ineq=once.b_ineq, a_eq=once.a_eq,
            b_eq=once.b_eq, lower=np.full(2, -np.inf),
            upper=np.full(2, np.inf), offset=once.offset))
        assert np.array_equal(once.a_ineq, again.a_ineq)
        assert np.array_equal(once.b_ineq, again.b_ineq)
        assert np.array_equal(once.hessian, again.hessian)


class TestAddShifts:
    def test_no_violation_is_noop(self):
        problem = make_problem(np.eye(1), np.zeros(1), a_ineq=[[1.0]],
                               b_ineq=[0.0])
        extended, report, s0 = add_shifts(problem, np.array([1.0]), eps=0.4)
        assert extended is problem
        assert report.shift_count == 0 and s0.size == 0

    def test_single_violated_row(self):
        # c_1(x0) = -1 with eps = 0.4 needs a shift of 1.4
        problem = make_problem(np.eye(1), np.zeros(1), a_ineq=[[1.0]],
                               b_ineq=[-1.0])
        extended, report, s0 = add_shifts(problem, np.array([0.0]), eps=0.4)
        assert report.shift_count == 1
        assert s0 == pytest.approx([1.4])
        assert extended.n == 2 and extended.m_ineq == 2
        x0 = np.array([0.0, 1.4])
        assert extended.c_ineq(x0) == pytest.approx([0.4, 1.4])
        # shift variable carries no objective cost
        assert extended.linear_cost[1] == 0.0
        assert np.all(extended.hessian[1, :] == 0.0)

    def test_two_violated_rows(self):
        problem = make_problem(np.eye(2), np.zeros(2),
                               a_ineq=[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
                               b_ineq=[-1.0, -2.0, 5.0])
        extended, report, s0 = add_shifts(problem, np.zeros(2), eps=0.4)
        assert report.shift_count == 2
        assert report.shift_rows == [0, 1]
        # the two shifted rows keep their index, two positivity rows append
        assert extended.m_ineq == problem.m_ineq + 2
        assert s0 == pytest.approx([1.4, 2.4])


class TestInitialPoint:
    def test_all_components_eps_without_equalities(self):
        problem = make_problem(np.eye(3), np.zeros(3), a_ineq=np.eye(3),
                               b_ineq=np.ones(3))
        start = initial_point(problem, eps=0.4)
        assert np.allclose(start.x, 0.4)

    def test_least_norm_equality_solution(self):
        problem = make_problem(np.eye(2), np.zeros(2),
                               a_eq=[[1.0, 1.0]], b_eq=[-2.0])
        start = initial_point(problem)
        assert np.allclose(start.x, [1.0, 1.0])
        assert start.lam[-1] == 1.0

    def test_componentwise_mean_complementarity(self):
        problem = make_problem(np.eye(1), np.zeros(1), a_ineq=[[1.0]],
                               b_ineq=[0.6])
        start = initial_point(problem, eps=0.4, target_mean_compl=5.0)
        c0 = problem.c_ineq(start.x)
        assert c0 == pytest.approx([1.0])
        assert start.lam[0] == pytest.approx(5.0)
        assert start.mu == 5.0

    def test_rank_deficient_equalities_rejected(self):
        problem = make_problem(np.eye(2), np.zeros(2),
                               a_eq=[[1.0, 1.0], [1.0, 1.0]],
                               b_eq=[-1.0, -1.0])
        with pytest.raises(PreprocessError):
            initial_point(problem)


class TestPrepare:
    def test_start_is_strictly_interior(self):
        rng = np.random.default_rng(11)
        raw = RawQp(hessian=np.eye(3), linear_cost=rng.standard_normal(3),
                    a_ineq=rng.standard_normal((4, 3)),
                    b_ineq=rng.standard_normal(4) - 2.0,
                    a_eq=rng.standard_normal((1, 3)),
                    b_eq=rng.standard_normal(1),
                    lower=np.array([0.0, -np.inf, -1.0]),
                    upper=np.array([np.inf, 4.0, np.inf]))
        problem, start, report = prepare(raw)
        assert np.all(problem.c_ineq(start.x) > 0)
        assert np.all(start.lam[:problem.m_ineq] > 0)
        compl = problem.c_ineq(start.x) * start.lam[:problem.m_ineq]
        assert np.allclose(compl, 5.0)

    @given(eps=st.floats(0.05, 2.0))
    @settings(max_examples=25, deadline=None)
    def test_shifted_start_respects_floor(self, eps):
        raw = RawQp(hessian=np.eye(2), linear_cost=np.zeros(2),
                    a_ineq=np.array([[1.0, 0.0], [-1.0, -1.0]]),
                    b_ineq=np.array([-3.0, 0.1]),
                    a_eq=np.zeros((0, 2)), b_eq=np.zeros(0),
                    lower=np.full(2, -np.inf), upper=np.full(2, np.inf))
        problem, start, _ = prepare(raw, eps=eps)
        c0 = problem.c_ineq(start.x)
        assert np.all(c0 > 0)
