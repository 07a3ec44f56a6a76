"""Command-line front end.

Subcommands:
  solve    solve one QPS file and print a JSON result record
  bench    run a batch over a directory of QPS files or a generator grid
  profile  turn a results CSV into performance-profile data and an SVG
  gen      write a random positivity-constrained instance as QPS
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

import numpy as np

from . import bench, qps, solvers
from .model import PreprocessError, StartingPoint, initial_point, prepare
from .randgen import RandomSpec, random_qp

FIXTURE_DIR_ENV = "EXTRAQP_FIXTURE_DIR"


def _error(message: str) -> int:
    json.dump({"error": message}, sys.stderr)
    sys.stderr.write("\n")
    return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="extraqp")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a single QPS instance")
    p_solve.add_argument("file")
    p_solve.add_argument("--algo", default="extrapolation",
                         choices=list(solvers.ALGORITHMS))
    p_solve.add_argument("--p", type=int, default=4, dest="order")
    p_solve.add_argument("--kappa", type=float, default=5.0)
    p_solve.add_argument("--mu0", type=float, default=None)
    p_solve.add_argument("--tol", type=float, default=1e-8)
    p_solve.add_argument("--timeout", type=float, default=60.0)
    fmt = p_solve.add_mutually_exclusive_group()
    fmt.add_argument("--dense", action="store_const", const="dense",
                     dest="factorization")
    fmt.add_argument("--sparse", action="store_const", const="sparse",
                     dest="factorization")
    p_solve.set_defaults(factorization="auto")
    p_solve.add_argument("--json", action="store_true", dest="json_out")

    p_bench = sub.add_parser("bench", help="run a benchmark batch")
    src = p_bench.add_mutually_exclusive_group(required=True)
    src.add_argument("--dir", help="directory of QPS files")
    src.add_argument("--random",
                     help="grid spec, e.g. 'n=50,100;t=n/100;reps=3;seeds=0:5'")
    p_bench.add_argument("--solvers", default=",".join(solvers.ALGORITHMS))
    p_bench.add_argument("--reps", type=int, default=3)
    p_bench.add_argument("--warmstart", default=None,
                         help="'mehrotra:meancompl<1' to enable the initial phase")
    p_bench.add_argument("--timeout", type=float, default=60.0)
    p_bench.add_argument("--out", default="results.csv")
    p_bench.add_argument("--summary", action="store_true",
                         help="print mean +- std times per cell")

    p_profile = sub.add_parser("profile", help="build a performance profile")
    p_profile.add_argument("results")
    p_profile.add_argument("--svg", default=None)

    p_gen = sub.add_parser("gen", help="generate a random instance")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--t", type=float, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    return parser


def _cmd_solve(args) -> int:
    try:
        raw = qps.load_qps(args.file)
    except (OSError, qps.QpsParseError) as exc:
        return _error(f"cannot read {args.file}: {exc}")
    try:
        problem, start, report = prepare(raw)
    except PreprocessError as exc:
        return _error(f"preprocessing failed: {exc}")

    order = 1 if args.algo == "newton-baseline" and args.order > 1 else args.order
    kappa = min(args.kappa, order + 1)
    cfg = solvers.SolverConfig(algorithm=args.algo, order=order, kappa=kappa,
                               mu0=args.mu0, kkt_tol=args.tol,
                               time_budget=args.timeout,
                               factorization=args.factorization,
                               keep_iterates=False)
    result = solvers.solve(problem, start, cfg)
    shifts = report.final_shifts(result.iterate.x)
    record = {
        "name": problem.name or os.path.basename(args.file),
        "algorithm": args.algo,
        "status": result.status,
        "objective": result.objective,
        "outer_iterations": result.outer_iterations,
        "inner_iterations": result.inner_iterations,
        "mu": result.mu,
        "kkt_residual_inf": result.trace[-1].res_inf_0 if result.trace else None,
        "x": report.restore(result.iterate.x).tolist(),
        "nonzero_final_shifts": bool(np.any(np.abs(shifts) > 1e-6)),
    }
    json.dump(record, sys.stdout, indent=2 if not args.json_out else None)
    sys.stdout.write("\n")
    return 0 if result.status == solvers.STATUS_OPTIMAL else 2


def _parse_random_grid(text: str):
    parts = dict(item.split("=", 1) for item in text.split(";") if item)
    try:
        ns = [int(v) for v in parts["n"].split(",")]
        reps = int(parts.get("reps", "3"))
        seeds_txt = parts.get("seeds", "0:3")
        if ":" in seeds_txt:
            lo, hi = seeds_txt.split(":")
            seeds = list(range(int(lo), int(hi)))
        else:
            seeds = [int(v) for v in seeds_txt.split(",")]
        t_txt = parts.get("t", "n/100").replace(" ", "")
        rules = {"n/100": lambda n: n / 100, "n/10": lambda n: n / 10,
                 "n": lambda n: float(n), "100n": lambda n: 100.0 * n,
                 "100*n": lambda n: 100.0 * n}
        if t_txt in rules:
            t_rule = rules[t_txt]
        else:
            t_value = float(t_txt)
            t_rule = lambda n: t_value
    except (KeyError, ValueError) as exc:
        raise ValueError(f"invalid grid spec {text!r}: {exc}") from None
    return ns, t_rule, seeds, reps


def _cmd_bench(args) -> int:
    solver_list = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for s in solver_list:
        if s not in solvers.ALGORITHMS:
            return _error(f"unknown solver {s!r}")
    warm = False
    if args.warmstart:
        if args.warmstart.replace(" ", "") != "mehrotra:meancompl<1":
            return _error(f"unsupported warm-start rule {args.warmstart!r}")
        warm = True

    reps = args.reps
    instances = []
    if args.dir:
        directory = args.dir or os.environ.get(FIXTURE_DIR_ENV, "")
        files = sorted(glob.glob(os.path.join(directory, "*")))
        if not files:
            return _error(f"no instance files in {directory!r}")
        for path in files:
            try:
                raw = qps.load_qps(path)
                problem, start, _ = prepare(raw)
            except (qps.QpsParseError, PreprocessError, OSError) as exc:
                sys.stderr.write(f"skipping {path}: {exc}\n")
                continue
            if not problem.name:
                import dataclasses
                problem = dataclasses.replace(problem, name=os.path.basename(path))
            instances.append((problem, start))
    else:
        try:
            ns, t_rule, seeds, reps = _parse_random_grid(args.random)
        except ValueError as exc:
            return _error(str(exc))
        specs = bench.generator_grid(ns, t_rule, seeds)
        for spec in specs:
            problem = random_qp(spec)
            instances.append((problem, initial_point(problem)))

    plan = bench.BenchPlan(solvers=solver_list, repetitions=reps,
                           warm_start=warm, measured_budget=args.timeout)
    rows = bench.run_bench(plan, instances)
    bench.write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    if args.summary:
        for cell in bench.random_grid_summary(rows):
            print(f"{cell['problem']:30s} {cell['solver']:18s} "
                  f"{cell['mean_ms']:10.2f} ms +- {cell['std_ms']:.2f}")
    return 0


def _cmd_profile(args) -> int:
    try:
        rows = bench.read_csv(args.results)
        data = bench.build_profile(rows)
    except (OSError, ValueError, KeyError) as exc:
        return _error(f"cannot profile {args.results}: {exc}")
    for s in data.solver_names:
        taus, fracs = data.curves[s]
        start = data.fraction_within(s, 1.0)
        print(f"{s}: starts at {start:.3f}, reaches {fracs[-1]:.3f} "
              f"at ratio {taus[-1]:.3g} over {len(data.problems)} problems")
    if args.svg:
        bench.profile_svg(data, args.svg)
        print(f"wrote {args.svg}")
    return 0


def _cmd_gen(args) -> int:
    try:
        spec = RandomSpec(n=args.n, t=args.t, seed=args.seed)
    except ValueError as exc:
        return _error(str(exc))
    problem = random_qp(spec)
    raw = _as_raw(problem)
    with open(args.out, "w") as handle:
        handle.write(qps.write_qps(raw, name=problem.name))
    print(f"wrote {args.out}")
    return 0


def _as_raw(problem):
    from .model import RawQp
    n = problem.n
    return RawQp(hessian=problem.hessian, linear_cost=problem.linear_cost,
                 a_ineq=problem.a_ineq, b_ineq=problem.b_ineq,
                 a_eq=problem.a_eq, b_eq=problem.b_eq,
                 lower=np.full(n, -np.inf), upper=np.full(n, np.inf),
                 name=problem.name, offset=problem.offset)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"solve": _cmd_solve, "bench": _cmd_bench,
                "profile": _cmd_profile, "gen": _cmd_gen}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
