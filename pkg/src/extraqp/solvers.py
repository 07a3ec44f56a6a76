"""Interior-point drivers: extrapolation-accelerated, Newton baseline, Mehrotra.

The accelerated driver follows the outer/inner scheme: each outer iteration
works at a fixed barrier parameter mu_k, starts with the order-p
extrapolation step whenever the KKT Jacobian is invertible, compares it
against a line-searched Newton point on the residual 2-norm merit, and runs
further Newton inner iterations until the infinity norm of the perturbed
residual drops below mu_k.  The barrier parameter then decreases through
mu <- min(mu^kappa, mu/4).
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import extrapolate, kkt
from .kkt import Iterate
from .model import QpProblem, StartingPoint

STATUS_OPTIMAL = "optimal"
STATUS_TIMEOUT = "timeout"
STATUS_STAGNATION = "stagnation"
STATUS_LINALG = "linear-algebra-failure"
STATUS_ITERATIONS = "iteration-limit"

LABEL_EXTRAPOLATION = "extrapolation"
LABEL_NEWTON = "newton"
LABEL_MEHROTRA = "mehrotra"
LABEL_NONE = "none"

ALGORITHMS = ("extrapolation", "newton-baseline", "mehrotra")


@dataclass
class SolverConfig:
    """Tuning knobs for all three drivers; defaults match the benchmark CLI."""

    order: int = 4
    kappa: float = 5.0
    mu0: float | None = None
    mu_floor: float = 1e-12
    mu_divisor: float = 4.0
    armijo: float = 1e-9
    armijo_backtrack: float = 0.5
    max_armijo_backtracks: int = 60
    max_inner: int = 100
    max_outer: int = 500
    kkt_tol: float = 1e-8
    stagnation_tol: float = 1e-14
    stagnation_window: int = 3
    time_budget: float = 60.0
    factorization: str = "auto"
    algorithm: str = "extrapolation"
    extrapolate_every_inner: bool = True
    uniform_scaling: bool = False
    interior_floor: float = kkt.INTERIOR_FLOOR
    singular_retry_shift: float = 1e-10
    mehrotra_centering_exp: float = 3.0
    mehrotra_boundary: float = 0.995
    keep_iterates: bool = True

    def __post_init__(self):
        if not 1 <= self.order <= extrapolate.MAX_ORDER:
            raise ValueError(f"order must be in 1..{extrapolate.MAX_ORDER}")
        if self.kappa <= 1:
            raise ValueError("kappa must exceed 1")
        if self.kappa > self.order + 1:
            raise ValueError("kappa must be at most order + 1")
        if self.kappa == self.order + 1:
            warnings.warn(
                "kappa == order + 1 sits on the boundary of the convergence "
                "theory's open interval", stacklevel=2)
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")

    def inner_tol(self, mu: float) -> float:
        return mu


@dataclass
class TraceRecord:
    k: int
    mu: float
    inner_iterations: int
    #: inner-loop moves where the comparison fell back to the Newton point;
    #: zero means every move this outer iteration was an extrapolation step
    inner_newton_moves: int
    label: str
    merit_before: float
    merit_after: float
    res_inf_mu: float
    res_inf_0: float
    wall_time: float
    iterate: np.ndarray | None = None


@dataclass
class SolveResult:
    status: str
    iterate: Iterate
    mu: float
    objective: float
    trace: list[TraceRecord] = field(default_factory=list)
    message: str = ""

    @property
    def outer_iterations(self) -> int:
        return len(self.trace)

    @property
    def inner_iterations(self) -> int:
        return sum(rec.inner_iterations for rec in self.trace)


def update_mu(mu: float, cfg: SolverConfig) -> float:
    """Barrier update min(mu^kappa, mu/divisor), clamped at the floor."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    return max(cfg.mu_floor, min(mu ** cfg.kappa, mu / cfg.mu_divisor))


def solve(problem: QpProblem, start: StartingPoint, cfg: SolverConfig | None = None
          ) -> SolveResult:
    """Run the configured driver from a strictly interior starting point."""
    cfg = cfg or SolverConfig()
    if cfg.algorithm == "mehrotra":
        return solve_mehrotra(problem, start, cfg)

    t0 = time.monotonic()
    deadline = t0 + cfg.time_budget
    w = Iterate(np.asarray(start.x, dtype=float), np.asarray(start.lam, dtype=float))
    mu = float(cfg.mu0 if cfg.mu0 is not None else start.mu)
    data_scale = 1.0 + problem.data_norm()
    trace: list[TraceRecord] = []
    status = STATUS_ITERATIONS
    message = ""

    for k in range(cfg.max_outer):
        res0_inf = kkt.residual(problem, w, 0.0).norm_inf()
        if res0_inf <= cfg.kkt_tol * data_scale:
            status = STATUS_OPTIMAL
            break
        if time.monotonic() > deadline:
            status = STATUS_TIMEOUT
            break

        merit_before = kkt.merit(kkt.residual(problem, w, mu))
        w, inner, newton_moves, label, failure = _outer_iteration(
            problem, w, mu, cfg, deadline)
        res_mu = kkt.residual(problem, w, mu)
        trace.append(TraceRecord(
            k=k, mu=mu, inner_iterations=inner,
            inner_newton_moves=newton_moves, label=label,
            merit_before=merit_before, merit_after=kkt.merit(res_mu),
            res_inf_mu=res_mu.norm_inf(),
            res_inf_0=kkt.residual(problem, w, 0.0).norm_inf(),
            wall_time=time.monotonic() - t0,
            iterate=w.w.copy() if cfg.keep_iterates else None))
        if failure:
            status = failure
            break

        new_mu = update_mu(mu, cfg)
        if new_mu >= mu:
            # mu pinned at the floor; no further progress is possible here
            if kkt.residual(problem, w, 0.0).norm_inf() <= cfg.kkt_tol * data_scale:
                status = STATUS_OPTIMAL
            else:
                status = STATUS_STAGNATION
                message = "barrier parameter reached its floor"
            break
        mu = new_mu

    return SolveResult(status=status, iterate=w, mu=mu,
                       objective=problem.objective(w.x), trace=trace,
                       message=message)


def _outer_iteration(problem: QpProblem, w: Iterate, mu: float,
                     cfg: SolverConfig, deadline: float
                     ) -> tuple[Iterate, int, int, str, str | None]:
    """One pass at fixed mu.

    Returns (iterate, inner count, Newton-labeled inner move count, label of
    the initial move, failure status or None).
    """
    label = LABEL_NONE
    if cfg.algorithm == "extrapolation":
        fact = kkt.jacobian(problem, w, mode=cfg.factorization)
        if not fact.singular:
            w, label = _compare_step(problem, w, mu, cfg, fact)

    inner = 0
    newton_moves = 0
    stall = 0
    prev_merit = kkt.merit(kkt.residual(problem, w, mu))
    while kkt.residual(problem, w, mu).norm_inf() > cfg.inner_tol(mu):
        if inner >= cfg.max_inner:
            return w, inner, newton_moves, label, STATUS_ITERATIONS
        if time.monotonic() > deadline:
            return w, inner, newton_moves, label, STATUS_TIMEOUT
        fact = _factorize_with_retry(problem, w, mu, cfg)
        if fact is None:
            return w, inner, newton_moves, label, STATUS_LINALG

        if cfg.algorithm == "extrapolation" and cfg.extrapolate_every_inner:
            w_next, move_label = _compare_step(problem, w, mu, cfg, fact)
        else:
            terms = extrapolate.compute_terms(problem, w, mu, 1, factorization=fact)
            w_next = _armijo_newton(problem, w, mu, terms.terms[0], cfg)
            move_label = LABEL_NEWTON
        inner += 1
        if move_label != LABEL_EXTRAPOLATION:
            newton_moves += 1

        next_merit = kkt.merit(kkt.residual(problem, w_next, mu))
        step_norm = float(np.max(np.abs(w_next.w - w.w)))
        rel_change = step_norm / (1.0 + float(np.max(np.abs(w.w))))
        if rel_change < cfg.stagnation_tol and \
                abs(prev_merit - next_merit) < cfg.stagnation_tol * (1.0 + prev_merit):
            stall += 1
            if stall >= cfg.stagnation_window:
                return w_next, inner, newton_moves, label, STATUS_STAGNATION
        else:
            stall = 0
        w, prev_merit = w_next, next_merit
    return w, inner, newton_moves, label, None


def _compare_step(problem: QpProblem, w: Iterate, mu: float, cfg: SolverConfig,
                  fact: kkt.KktFactorization) -> tuple[Iterate, str]:
    """Extrapolation candidate vs line-searched Newton point, smaller merit wins."""
    terms = extrapolate.compute_terms(problem, w, mu, cfg.order, factorization=fact)
    theta = extrapolate.feasible_theta(problem, terms, floor=cfg.interior_floor)
    w_ext = extrapolate.assemble(terms, theta, uniform_scaling=cfg.uniform_scaling)
    w_newt = _armijo_newton(problem, w, mu, terms.terms[0], cfg)
    merit_ext = kkt.merit(kkt.residual(problem, w_ext, mu))
    merit_newt = kkt.merit(kkt.residual(problem, w_newt, mu))
    if theta > 0.0 and merit_ext <= merit_newt:
        return w_ext, LABEL_EXTRAPOLATION
    return w_newt, LABEL_NEWTON


def _armijo_newton(problem: QpProblem, w: Iterate, mu: float,
                   direction: np.ndarray, cfg: SolverConfig) -> Iterate:
    """Ratio-test-capped Newton step with Armijo backtracking on the merit.

    Accepts step length a when merit(w + a d) <= (1 - armijo * a) merit(w).
    Returns w unchanged when no trial length is accepted.
    """
    base_merit = kkt.merit(kkt.residual(problem, w, mu))
    alpha = kkt.max_feasible_scaling(problem, w, direction, floor=cfg.interior_floor)
    n = problem.n
    for _ in range(cfg.max_armijo_backtracks):
        if alpha <= 0.0:
            break
        candidate = Iterate.from_vector(w.w + alpha * direction, n)
        # the ratio test is exact in real arithmetic but rounding can land a
        # component on the boundary, so re-check interiority before accepting
        if kkt.strictly_interior(problem, candidate):
            cand_merit = kkt.merit(kkt.residual(problem, candidate, mu))
            if cand_merit <= (1.0 - cfg.armijo * alpha) * base_merit:
                return candidate
        alpha *= cfg.armijo_backtrack
    return w


def _factorize_with_retry(problem: QpProblem, w: Iterate, mu: float,
                          cfg: SolverConfig) -> kkt.KktFactorization | None:
    fact = kkt.jacobian(problem, w, mode=cfg.factorization)
    if not fact.singular:
        return fact
    fact = kkt.jacobian(problem, w, mode=cfg.factorization,
                        diag_shift=cfg.singular_retry_shift * max(mu, 1e-300))
    return None if fact.singular else fact


def inner_newton(problem: QpProblem, w: Iterate, mu: float,
                 cfg: SolverConfig | None = None) -> tuple[Iterate, int]:
    """Newton inner loop alone: iterate until the inf-norm residual <= mu."""
    cfg = cfg or SolverConfig(algorithm="newton-baseline", order=1, kappa=2.0)
    count = 0
    while kkt.residual(problem, w, mu).norm_inf() > cfg.inner_tol(mu):
        if count >= cfg.max_inner:
            raise RuntimeError("inner iteration limit reached")
        fact = _factorize_with_retry(problem, w, mu, cfg)
        if fact is None:
            raise kkt.SingularFactorizationError("singular KKT Jacobian")
        direction = fact.solve(-kkt.residual(problem, w, mu).vector)
        w = _armijo_newton(problem, w, mu, direction, cfg)
        count += 1
    return w, count


def solve_mehrotra(problem: QpProblem, start: StartingPoint,
                   cfg: SolverConfig | None = None,
                   mean_compl_target: float | None = None) -> SolveResult:
    """Mehrotra predictor-corrector sharing the KKT machinery.

    One factorization per iteration serves both the affine-scaling predictor
    and the centered corrector.  When ``mean_compl_target`` is given, the
    loop additionally stops once the mean complementarity drops below it
    (used by the benchmark warm-start phase).
    """
    cfg = cfg or SolverConfig(algorithm="mehrotra")
    t0 = time.monotonic()
    deadline = t0 + cfg.time_budget
    w = Iterate(np.asarray(start.x, dtype=float), np.asarray(start.lam, dtype=float))
    data_scale = 1.0 + problem.data_norm()
    n, mi = problem.n, problem.m_ineq
    trace: list[TraceRecord] = []
    status = STATUS_ITERATIONS
    message = ""
    prev_w = None
    mu_mean = float(start.mu)

    for k in range(cfg.max_outer):
        res0 = kkt.residual(problem, w, 0.0)
        if res0.norm_inf() <= cfg.kkt_tol * data_scale:
            status = STATUS_OPTIMAL
            break
        ci = problem.c_ineq(w.x)
        li = w.lam[:mi]
        mu_mean = float(ci @ li / mi) if mi else 0.0
        if mean_compl_target is not None and mi and mu_mean < mean_compl_target:
            status = STATUS_OPTIMAL
            message = "mean complementarity target reached"
            break
        if time.monotonic() > deadline:
            status = STATUS_TIMEOUT
            break

        fact = _factorize_with_retry(problem, w, max(mu_mean, 1e-16), cfg)
        if fact is None:
            status = STATUS_LINALG
            break
        merit_before = kkt.merit(res0)

        if mi == 0:
            # equality-only problem: plain Newton on the unperturbed system
            w_next = Iterate.from_vector(w.w + fact.solve(-res0.vector), n)
        else:
            d_aff = fact.solve(-res0.vector)
            dx_aff, dl_aff = d_aff[:n], d_aff[n:]
            dci_aff = problem.a_ineq @ dx_aff
            a_p = _boundary_step(ci, dci_aff, 1.0)
            a_d = _boundary_step(li, dl_aff[:mi], 1.0)
            mu_aff = float((ci + a_p * dci_aff) @ (li + a_d * dl_aff[:mi]) / mi)
            sigma = (max(mu_aff, 0.0) / mu_mean) ** cfg.mehrotra_centering_exp

            rhs = -res0.vector
            rhs[n:n + mi] += sigma * mu_mean - dci_aff * dl_aff[:mi]
            d = fact.solve(rhs)
            dx, dl = d[:n], d[n:]
            a_p = _boundary_step(ci, problem.a_ineq @ dx, cfg.mehrotra_boundary)
            a_d = _boundary_step(li, dl[:mi], cfg.mehrotra_boundary)
            w_next = Iterate(w.x + a_p * dx, w.lam + a_d * dl)

        res0_next = kkt.residual(problem, w_next, 0.0)
        trace.append(TraceRecord(
            k=k, mu=mu_mean, inner_iterations=1, inner_newton_moves=0,
            label=LABEL_MEHROTRA,
            merit_before=merit_before, merit_after=kkt.merit(res0_next),
            res_inf_mu=res0_next.norm_inf(), res_inf_0=res0_next.norm_inf(),
            wall_time=time.monotonic() - t0,
            iterate=w_next.w.copy() if cfg.keep_iterates else None))

        if prev_w is not None:
            rel = float(np.max(np.abs(w_next.w - w.w))) / (1.0 + float(np.max(np.abs(w.w))))
            if rel < cfg.stagnation_tol:
                status = STATUS_STAGNATION
                w = w_next
                break
        prev_w = w
        w = w_next

    return SolveResult(status=status, iterate=w, mu=max(mu_mean, 0.0),
                       objective=problem.objective(w.x), trace=trace,
                       message=message)


def _boundary_step(values: np.ndarray, rates: np.ndarray, fraction: float) -> float:
    """Fraction-to-boundary step length for componentwise positivity."""
    mask = rates < 0
    if not np.any(mask):
        return 1.0
    return float(min(1.0, fraction * np.min(values[mask] / -rates[mask])))
