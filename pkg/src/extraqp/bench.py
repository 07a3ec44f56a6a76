"""Batch benchmarking: warm starts, result tables, performance profiles.

The measured pipeline has two phases: problems are optionally pre-solved by
the Mehrotra driver until the mean complementarity
drops below 1, each configured solver is then timed from that common
starting point, and per-problem time ratios to the best solver feed a
cumulative performance profile.  Only problems solved by at least one
solver enter the profile.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kkt, solvers
from .model import QpProblem, StartingPoint, prepare
from .randgen import RandomSpec, random_qp

CSV_FIELDS = ["problem", "solver", "rep", "status", "outer_iterations",
              "inner_iterations", "time_ms", "res_inf_0", "objective"]

WARMSTART_MEAN_COMPL = 1.0


@dataclass
class BenchPlan:
    """What to run: instances, solvers, repetitions and phase budgets."""

    solvers: list[str]
    repetitions: int = 3
    warm_start: bool = False
    warm_start_budget: float = 60.0
    measured_budget: float = 60.0
    order: int = 4
    kappa: float = 5.0
    baseline_order: int = 1
    baseline_kappa: float = 2.0

    def __post_init__(self):
        if not self.solvers:
            raise ValueError("at least one solver is required")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")

    def config_for(self, algorithm: str) -> solvers.SolverConfig:
        if algorithm == "newton-baseline":
            return solvers.SolverConfig(algorithm=algorithm,
                                        order=self.baseline_order,
                                        kappa=self.baseline_kappa,
                                        time_budget=self.measured_budget,
                                        keep_iterates=False)
        return solvers.SolverConfig(algorithm=algorithm, order=self.order,
                                    kappa=self.kappa,
                                    time_budget=self.measured_budget,
                                    keep_iterates=False)


@dataclass
class ProfileData:
    """Per-solver cumulative distributions of time ratios to the best."""

    solver_names: list[str]
    problems: list[str]
    best_times: dict[tuple[str, str], float]
    ratios: dict[tuple[str, str], float]
    curves: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def fraction_within(self, solver: str, tau: float) -> float:
        if not self.problems:
            return 0.0
        hits = sum(1 for p in self.problems
                   if self.ratios[(p, solver)] <= tau)
        return hits / len(self.problems)


def warm_start_phase(problem: QpProblem, start: StartingPoint,
                     budget: float = 60.0) -> StartingPoint | None:
    """Run Mehrotra until the mean complementarity drops below 1.

    Returns the reached iterate as a starting point, or None when the phase
    times out or loses the interior (the instance is then excluded).
    """
    cfg = solvers.SolverConfig(algorithm="mehrotra", time_budget=budget,
                               keep_iterates=False)
    result = solvers.solve_mehrotra(problem, start, cfg,
                                    mean_compl_target=WARMSTART_MEAN_COMPL)
    if result.status not in (solvers.STATUS_OPTIMAL,):
        return None
    w = result.iterate
    mi = problem.m_ineq
    ci = problem.c_ineq(w.x)
    li = w.lam[:mi]
    if mi and (np.any(ci <= 0) or np.any(li <= 0)):
        return None
    mu = float(ci @ li / mi) if mi else 1.0
    return StartingPoint(x=w.x, lam=w.lam, mu=max(mu, 1e-8))


def run_cell(problem: QpProblem, start: StartingPoint, algorithm: str,
             cfg: solvers.SolverConfig) -> dict:
    """Solve one (problem, solver) cell and time the measured phase."""
    tic = time.perf_counter()
    result = solvers.solve(problem, start, cfg)
    elapsed_ms = (time.perf_counter() - tic) * 1e3
    final = kkt.residual(problem, result.iterate, 0.0).norm_inf()
    return {
        "problem": problem.name,
        "solver": algorithm,
        "status": result.status,
        "outer_iterations": result.outer_iterations,
        "inner_iterations": result.inner_iterations,
        "time_ms": elapsed_ms,
        "res_inf_0": final,
        "objective": result.objective,
    }


def run_bench(plan: BenchPlan,
              instances: list[tuple[QpProblem, StartingPoint]]) -> list[dict]:
    """Run every (problem, solver, rep) cell sequentially.

    Timing cells run one at a time so recorded times stay comparable.
    Instances whose warm-start phase fails are recorded with status
    "no-starting-point" and skipped.
    """
    rows: list[dict] = []
    for problem, start in instances:
        if plan.warm_start:
            start = warm_start_phase(problem, start, budget=plan.warm_start_budget)
            if start is None:
                for algorithm in plan.solvers:
                    rows.append({"problem": problem.name, "solver": algorithm,
                                 "rep": 0, "status": "no-starting-point",
                                 "outer_iterations": 0, "inner_iterations": 0,
                                 "time_ms": float("nan"),
                                 "res_inf_0": float("nan"),
                                 "objective": float("nan")})
                continue
        for algorithm in plan.solvers:
            cfg = plan.config_for(algorithm)
            for rep in range(plan.repetitions):
                row = run_cell(problem, start, algorithm, cfg)
                row["rep"] = rep
                rows.append(row)
    return rows


def generator_grid(ns: list[int], t_rule, seeds: list[int]) -> list[RandomSpec]:
    """Cartesian grid of random-instance specs; t_rule maps n to t."""
    return [RandomSpec(n=n, t=max(float(t_rule(n)), 1.0), seed=s)
            for n in ns for s in seeds]


def prepared_random_instances(specs: list[RandomSpec]
                              ) -> list[tuple[QpProblem, StartingPoint]]:
    from .model import initial_point
    out = []
    for spec in specs:
        problem = random_qp(spec)
        out.append((problem, initial_point(problem)))
    return out


def write_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as handle:
        _write_csv_handle(rows, handle)


def csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    _write_csv_handle(rows, buf)
    return buf.getvalue()


def _write_csv_handle(rows, handle) -> None:
    writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS)
    writer.writeheader()
    for row in rows:
        out = dict(row)
        out["time_ms"] = f"{row['time_ms']:.3f}" if math.isfinite(row["time_ms"]) else ""
        out["res_inf_0"] = f"{row['res_inf_0']:.6e}" if math.isfinite(row["res_inf_0"]) else ""
        out["objective"] = f"{row['objective']:.12e}" if math.isfinite(row["objective"]) else ""
        writer.writerow(out)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        rows = []
        for rec in reader:
            rows.append({
                "problem": rec["problem"],
                "solver": rec["solver"],
                "rep": int(rec["rep"]),
                "status": rec["status"],
                "outer_iterations": int(rec["outer_iterations"]),
                "inner_iterations": int(rec["inner_iterations"]),
                "time_ms": float(rec["time_ms"]) if rec["time_ms"] else float("nan"),
                "res_inf_0": float(rec["res_inf_0"]) if rec["res_inf_0"] else float("nan"),
                "objective": float(rec["objective"]) if rec["objective"] else float("nan"),
            })
        return rows


def build_profile(rows: list[dict]) -> ProfileData:
    """Best-of-reps times, ratios to the per-problem best and CDF curves.

    A (problem, solver) pair with no successful rep gets ratio +inf;
    problems unsolved by every solver are dropped from the profile.
    """
    if not rows:
        raise ValueError("empty result table")
    solver_names = sorted({row["solver"] for row in rows})
    best: dict[tuple[str, str], float] = {}
    for row in rows:
        key = (row["problem"], row["solver"])
        if row["status"] == solvers.STATUS_OPTIMAL and math.isfinite(row["time_ms"]):
            best[key] = min(best.get(key, float("inf")), row["time_ms"])
        else:
            best.setdefault(key, float("inf"))

    problems = sorted({p for p, _ in best})
    kept = [p for p in problems
            if any(math.isfinite(best.get((p, s), float("inf")))
                   for s in solver_names)]
    ratios: dict[tuple[str, str], float] = {}
    for p in kept:
        fastest = min(best.get((p, s), float("inf")) for s in solver_names)
        for s in solver_names:
            t = best.get((p, s), float("inf"))
            ratios[(p, s)] = t / fastest if math.isfinite(t) else float("inf")

    data = ProfileData(solver_names=solver_names, problems=kept,
                       best_times=best, ratios=ratios)
    finite = sorted({r for r in ratios.values() if math.isfinite(r)}) or [1.0]
    taus = np.array(finite)
    for s in solver_names:
        fracs = np.array([data.fraction_within(s, tau) for tau in taus])
        data.curves[s] = (taus, fracs)
    return data


def profile_svg(data: ProfileData, path) -> None:
    """Self-contained static SVG of the profile curves on a log2 tau axis."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for s in data.solver_names:
        taus, fracs = data.curves[s]
        ax.step(np.log2(taus), fracs, where="post", label=s)
    ax.set_xlabel("log2(time ratio to best solver)")
    ax.set_ylabel("fraction of problems solved")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def random_grid_summary(rows: list[dict]) -> list[dict]:
    """Mean and one-standard-deviation time per (problem, solver) over reps."""
    by_cell: dict[tuple[str, str], list[float]] = {}
    for row in rows:
        if math.isfinite(row["time_ms"]):
            by_cell.setdefault((row["problem"], row["solver"]), []).append(row["time_ms"])
    out = []
    for (problem, solver), times in sorted(by_cell.items()):
        arr = np.array(times)
        out.append({"problem": problem, "solver": solver,
                    "mean_ms": float(arr.mean()),
                    "std_ms": float(arr.std(ddof=1)) if arr.size > 1 else 0.0})
    return out
