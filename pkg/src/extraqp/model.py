"""Convex QP instance representation and preprocessing.

Problems are stored in the normalized form

    minimize    1/2 x'Hx + c'x
    subject to  a_ineq x + b_ineq >= 0
                a_eq   x + b_eq   =  0

with variable bounds already folded into the inequality block and fixed
variables eliminated.  The preprocessing pipeline mirrors the solver's
expectations: bounds become general inequalities, fixed variables are
substituted out, shift variables make the starting point strictly feasible,
and the initial multipliers are centered on a target mean complementarity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

DEFAULT_SHIFT_EPS = 0.4
DEFAULT_MEAN_COMPLEMENTARITY = 5.0


class PreprocessError(Exception):
    """Raised when an instance cannot be brought to normalized form."""


@dataclass(frozen=True)
class QpProblem:
    """Normalized convex QP instance.

    The inequality rows encode c_I(x) = a_ineq @ x + b_ineq >= 0 and the
    equality rows c_E(x) = a_eq @ x + b_eq = 0.  ``offset`` is a constant
    added to reported objective values only; it never enters KKT quantities.
    """

    hessian: np.ndarray
    linear_cost: np.ndarray
    a_ineq: np.ndarray
    b_ineq: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    name: str = ""
    offset: float = 0.0

    def __post_init__(self):
        n = self.n
        if self.hessian.shape != (n, n):
            raise ValueError("hessian must be n-by-n")
        if not np.allclose(self.hessian, self.hessian.T, atol=0.0, rtol=0.0):
            object.__setattr__(self, "hessian", 0.5 * (self.hessian + self.hessian.T))
        for a, b, tag in ((self.a_ineq, self.b_ineq, "ineq"), (self.a_eq, self.b_eq, "eq")):
            if a.ndim != 2 or a.shape[1] != n:
                raise ValueError(f"a_{tag} must have {n} columns")
            if b.shape != (a.shape[0],):
                raise ValueError(f"b_{tag} length must match a_{tag} rows")

    @property
    def n(self) -> int:
        return self.linear_cost.shape[0]

    @property
    def m_ineq(self) -> int:
        return self.a_ineq.shape[0]

    @property
    def m_eq(self) -> int:
        return self.a_eq.shape[0]

    @property
    def m(self) -> int:
        return self.m_ineq + self.m_eq

    def objective(self, x: np.ndarray) -> float:
        """Objective value including the constant offset."""
        return float(0.5 * x @ self.hessian @ x + self.linear_cost @ x + self.offset)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.hessian @ x + self.linear_cost

    def c_ineq(self, x: np.ndarray) -> np.ndarray:
        return self.a_ineq @ x + self.b_ineq

    def c_eq(self, x: np.ndarray) -> np.ndarray:
        return self.a_eq @ x + self.b_eq

    def constraint_matrix(self) -> np.ndarray:
        """Stacked constraint Jacobian, inequality rows first."""
        return np.vstack([self.a_ineq, self.a_eq])

    def data_norm(self) -> float:
        """Max-magnitude over all problem data, used for relative stops."""
        parts = [self.hessian, self.linear_cost, self.a_ineq, self.b_ineq,
                 self.a_eq, self.b_eq]
        return max((float(np.max(np.abs(p))) for p in parts if p.size), default=0.0)


@dataclass(frozen=True)
class RawQp:
    """Pre-normalization instance with explicit variable bounds."""

    hessian: np.ndarray
    linear_cost: np.ndarray
    a_ineq: np.ndarray
    b_ineq: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    name: str = ""
    offset: float = 0.0

    @property
    def n(self) -> int:
        return self.linear_cost.shape[0]


@dataclass
class PreprocessReport:
    """Bookkeeping needed to map normalized solutions back to user space."""

    original_n: int
    kept_indices: np.ndarray
    fixed: list[tuple[int, float]] = field(default_factory=list)
    shift_count: int = 0
    shift_rows: list[int] = field(default_factory=list)
    shift_initial: np.ndarray = field(default_factory=lambda: np.zeros(0))
    offset: float = 0.0

    def restore(self, x_norm: np.ndarray) -> np.ndarray:
        """Reconstruct an original-space primal vector.

        Shift variables (appended last) are dropped; fixed variables get
        their recorded values back.
        """
        kept = len(self.kept_indices)
        x = np.empty(self.original_n)
        x[self.kept_indices] = x_norm[:kept]
        for j, v in self.fixed:
            x[j] = v
        return x

    def final_shifts(self, x_norm: np.ndarray) -> np.ndarray:
        kept = len(self.kept_indices)
        return np.asarray(x_norm[kept:kept + self.shift_count])


@dataclass(frozen=True)
class StartingPoint:
    """Strictly interior starting point for the solvers."""

    x: np.ndarray
    lam: np.ndarray
    mu: float


def make_problem(hessian, linear_cost, a_ineq=None, b_ineq=None, a_eq=None,
                 b_eq=None, name="", offset=0.0) -> QpProblem:
    """Convenience constructor accepting None for absent constraint blocks."""
    c = np.asarray(linear_cost, dtype=float)
    n = c.shape[0]
    h = np.asarray(hessian, dtype=float).reshape(n, n)
    ai = np.zeros((0, n)) if a_ineq is None else np.asarray(a_ineq, dtype=float).reshape(-1, n)
    bi = np.zeros(0) if b_ineq is None else np.asarray(b_ineq, dtype=float).ravel()
    ae = np.zeros((0, n)) if a_eq is None else np.asarray(a_eq, dtype=float).reshape(-1, n)
    be = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    return QpProblem(h, c, ai, bi, ae, be, name=name, offset=offset)


def normalize(raw: RawQp) -> tuple[QpProblem, PreprocessReport]:
    """Fold bounds into the inequality block and eliminate fixed variables.

    Finite lower bounds l_j become rows e_j'x - l_j >= 0, finite upper bounds
    u_j become -e_j'x + u_j >= 0.  Variables with l_j == u_j are substituted
    into the objective and constraints and recorded in the report.
    """
    n = raw.n
    lower = np.asarray(raw.lower, dtype=float)
    upper = np.asarray(raw.upper, dtype=float)
    if np.any(lower > upper):
        j = int(np.argmax(lower > upper))
        raise PreprocessError(f"infeasible bounds on variable {j}: "
                              f"lower {lower[j]} > upper {upper[j]}")

    fixed_mask = np.isfinite(lower) & (lower == upper)
    keep = np.flatnonzero(~fixed_mask)
    fixed_idx = np.flatnonzero(fixed_mask)
    x_fix = lower[fixed_idx]

    h = raw.hessian
    c = raw.linear_cost
    offset = raw.offset
    if fixed_idx.size:
        offset += float(0.5 * x_fix @ h[np.ix_(fixed_idx, fixed_idx)] @ x_fix
                        + c[fixed_idx] @ x_fix)
        c = c[keep] + h[np.ix_(keep, fixed_idx)] @ x_fix
        h = h[np.ix_(keep, keep)]
        a_ineq = raw.a_ineq[:, keep]
        b_ineq = raw.b_ineq + raw.a_ineq[:, fixed_idx] @ x_fix
        a_eq = raw.a_eq[:, keep]
        b_eq = raw.b_eq + raw.a_eq[:, fixed_idx] @ x_fix
    else:
        a_ineq, b_ineq = raw.a_ineq, raw.b_ineq
        a_eq, b_eq = raw.a_eq, raw.b_eq

    nk = keep.size
    bound_rows = []
    bound_rhs = []
    for new_j, j in enumerate(keep):
        if np.isfinite(lower[j]):
            row = np.zeros(nk)
            row[new_j] = 1.0
            bound_rows.append(row)
            bound_rhs.append(-lower[j])
        if np.isfinite(upper[j]):
            row = np.zeros(nk)
            row[new_j] = -1.0
            bound_rows.append(row)
            bound_rhs.append(upper[j])
    if bound_rows:
        a_ineq = np.vstack([a_ineq, np.array(bound_rows)])
        b_ineq = np.concatenate([b_ineq, np.array(bound_rhs)])

    problem = QpProblem(np.ascontiguousarray(h), np.ascontiguousarray(c),
                        np.ascontiguousarray(a_ineq), np.ascontiguousarray(b_ineq),
                        np.ascontiguousarray(a_eq), np.ascontiguousarray(b_eq),
                        name=raw.name, offset=offset)
    report = PreprocessReport(original_n=n, kept_indices=keep,
                              fixed=[(int(j), float(v)) for j, v in zip(fixed_idx, x_fix)],
                              offset=offset)
    return problem, report


def add_shifts(problem: QpProblem, x0: np.ndarray,
               eps: float = DEFAULT_SHIFT_EPS) -> tuple[QpProblem, PreprocessReport, np.ndarray]:
    """Append shift variables for inequality rows violated at x0.

    Every row i with c_i(x0) < eps gains a slack s_i with zero objective
    cost: the row becomes c_i(x) + s_i >= 0 and one positivity row s_i >= 0
    is appended.  Returns the extended problem, a report fragment recording
    the shifts, and the initial shift values eps - c_i(x0).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    c0 = problem.c_ineq(x0)
    violated = np.flatnonzero(c0 < eps)
    report = PreprocessReport(original_n=problem.n,
                              kept_indices=np.arange(problem.n))
    if violated.size == 0:
        return problem, report, np.zeros(0)

    n, k = problem.n, violated.size
    h = np.zeros((n + k, n + k))
    h[:n, :n] = problem.hessian
    c = np.concatenate([problem.linear_cost, np.zeros(k)])

    m_i = problem.m_ineq
    a_ineq = np.zeros((m_i + k, n + k))
    a_ineq[:m_i, :n] = problem.a_ineq
    b_ineq = np.concatenate([problem.b_ineq, np.zeros(k)])
    for s, row in enumerate(violated):
        a_ineq[row, n + s] = 1.0       # shifted row picks up +s_i
        a_ineq[m_i + s, n + s] = 1.0   # positivity row s_i >= 0
    a_eq = np.hstack([problem.a_eq, np.zeros((problem.m_eq, k))])

    extended = QpProblem(h, c, a_ineq, b_ineq, a_eq, problem.b_eq,
                         name=problem.name, offset=problem.offset)
    shift_initial = eps - c0[violated]
    report.shift_count = k
    report.shift_rows = [int(i) for i in violated]
    report.shift_initial = shift_initial
    return extended, report, shift_initial


def initial_point(problem: QpProblem, eps: float = DEFAULT_SHIFT_EPS,
                  target_mean_compl: float = DEFAULT_MEAN_COMPLEMENTARITY) -> StartingPoint:
    """Starting point from the normal-equation least-squares primal.

    With equality constraints, x0 is the least-norm solution of
    a_eq x = -b_eq; otherwise every component is set to eps.  Equality
    multipliers start at 1 and inequality multipliers are chosen
    componentwise so that every complementarity product equals the target.
    Requires c_I(x0) > 0, which the shift pipeline guarantees.
    """
    x0 = _least_norm_equality_solution(problem, eps)
    c0 = problem.c_ineq(x0)
    if np.any(c0 <= 0):
        raise PreprocessError("starting point not strictly feasible; "
                              "run add_shifts first")
    lam = np.empty(problem.m)
    lam[:problem.m_ineq] = target_mean_compl / c0
    lam[problem.m_ineq:] = 1.0
    return StartingPoint(x=x0, lam=lam, mu=float(target_mean_compl))


def _least_norm_equality_solution(problem: QpProblem, eps: float) -> np.ndarray:
    if problem.m_eq == 0:
        return np.full(problem.n, eps)
    a, b = problem.a_eq, problem.b_eq
    gram = a @ a.T
    pivot_tol = 1e-12 * max(np.max(np.abs(np.diag(gram))), 1.0)
    try:
        factor = cho_factor(gram)
    except np.linalg.LinAlgError as exc:
        raise PreprocessError("rank-deficient equality constraints: "
                              "normal equation not solvable") from exc
    if np.min(np.abs(np.diag(factor[0]))) ** 2 < pivot_tol:
        raise PreprocessError("rank-deficient equality constraints: "
                              "normal equation pivot below tolerance")
    return a.T @ cho_solve(factor, -b)


def prepare(raw: RawQp, eps: float = DEFAULT_SHIFT_EPS,
            target_mean_compl: float = DEFAULT_MEAN_COMPLEMENTARITY
            ) -> tuple[QpProblem, StartingPoint, PreprocessReport]:
    """Full preprocessing pipeline: normalize, pick x0, shift, center duals."""
    problem, report = normalize(raw)
    x0 = _least_norm_equality_solution(problem, eps)
    shifted, shift_report, s0 = add_shifts(problem, x0, eps)
    report.shift_count = shift_report.shift_count
    report.shift_rows = shift_report.shift_rows
    report.shift_initial = shift_report.shift_initial
    x0_full = np.concatenate([x0, s0])
    c0 = shifted.c_ineq(x0_full)
    lam = np.empty(shifted.m)
    lam[:shifted.m_ineq] = target_mean_compl / c0
    lam[shifted.m_ineq:] = 1.0
    start = StartingPoint(x=x0_full, lam=lam, mu=float(target_mean_compl))
    return shifted, start, report
