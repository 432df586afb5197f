"""Command-line interface: ``bilinmax solve|gen|bench|bandit``.

Exit codes: 0 success, 2 bad input (arguments or instance file), 3 solver error.

Defaults for the shared options can be set through the environment:
``BILMAX_SEED``, ``BILMAX_JOBS``, ``BILMAX_OUT`` and ``BILMAX_EPS``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .bandit import (
    BanditEnv,
    run_eps_linucb_demo,
    run_eps_linucb_interval,
    run_optimistic,
)
from .bench import ROW_FIELDS, SUMMARY_FIELDS, SweepConfig, ordering_check, run_sweep, summarize
from .core import BilinearError, BilinearInstance, DiagonalForm, diagonalize
from .generators import DISTRIBUTIONS, generate_instance, instances_from_bandit_run, spectrum_histograms
from .io import (
    InstanceFormatError,
    diagonal_to_json,
    load_problem,
    metadata_line,
    solution_to_json,
    write_csv,
)
from .maxnorm import solve_maxnorm
from .newton import solve_newton
from .oracle import oracle_solve
from .special import (
    LpAlignedInstance,
    UnsupportedP,
    solve_centered_diagonal,
    solve_lp_aligned,
    solve_polytope,
)

logger = logging.getLogger("bilinmax")

EXIT_INPUT = 2
EXIT_SOLVER = 3
ENV_PREFIX = "BILMAX_"
SOLVER_CHOICES = ("maxnorm", "newton", "centered", "polytope", "lp", "oracle")
BANDIT_ALGS = ("oful-maxnorm", "oful-newton", "eps-linucb", "eps-linucb-interval")


class InputError(Exception):
    pass


def _env(name: str, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise SystemExit(f"bilinmax: {ENV_PREFIX}{name}={raw!r} is not a valid {cast.__name__}") from None


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _int_list(text: str) -> list[int]:
    return [int(float(v)) for v in text.split(",") if v]


def _emit_json(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
    else:
        print(text)


# -- solve ---------------------------------------------------------------


def _solve_problem(problem, args) -> tuple[dict, list]:
    solver = args.solver
    trace: list = []
    extra: dict = {}
    if isinstance(problem, tuple):
        if solver != "polytope":
            raise InputError(f"instance lists vertices: use --solver polytope, not {solver}")
        poly, ellipsoid = problem
        return solution_to_json(solve_polytope(poly, ellipsoid)), trace
    if isinstance(problem, LpAlignedInstance):
        if solver != "lp":
            raise InputError(f"instance has a 'p' field: use --solver lp, not {solver}")
        sol = solve_lp_aligned(problem, args.eps)
        return solution_to_json(sol, action_norm=sol.diagnostics["action_norm"]), trace
    if solver in ("polytope", "lp"):
        raise InputError(f"--solver {solver} needs a {'vertices' if solver == 'polytope' else 'p'} field")

    start = time.perf_counter()
    df = problem if isinstance(problem, DiagonalForm) else diagonalize(problem)
    transform = time.perf_counter() - start
    if solver == "oracle":
        inst = problem if isinstance(problem, BilinearInstance) else BilinearInstance.from_arrays(
            np.eye(df.dim), np.diag(df.lam), df.b)
        if inst.dim > 10:
            logger.warning("oracle at d = %d is multistart only; use it for testing", inst.dim)
        sol = oracle_solve(inst, seed=args.seed)
    elif solver == "centered" or not np.any(df.b):
        if solver != "centered":
            extra["routed"] = "centered"
            extra["note"] = "c = 0: solved by the centered closed form"
        sol = solve_centered_diagonal(df)
    elif solver == "maxnorm":
        sol = solve_maxnorm(df, args.eps, trace=trace if args.trace else None)
    else:
        sol = solve_newton(df, args.eps, eta=args.eta, trace=trace if args.trace else None)
        extra["phases"] = sol.diagnostics["phases"]
        extra["t0_variant"] = sol.diagnostics["t0_variant"]
    if args.time_transform:
        extra["transform_time_s"] = transform
        extra["solve_time_s"] = sol.wall_time_s
    return solution_to_json(sol, **extra), trace


def _write_trace(path: str, trace: list, args) -> None:
    params = {"command": "solve", "solver": args.solver, "eps": args.eps, "instance": args.instance}
    if args.solver == "maxnorm":
        rows = [(k, el, v) for el, k, v in trace]
        write_csv(path, ("iteration", "elapsed_s", "value"), rows, params)
    else:
        rows = [(k + 1, r["elapsed_s"], r["t"], r["steps_damped"], r["steps_quad"], r["local_norm"], r["value"])
                for k, r in enumerate(trace)]
        write_csv(path, ("phase", "elapsed_s", "t", "steps_damped", "steps_quad", "local_norm", "value"),
                  rows, params)


def cmd_solve(args) -> int:
    try:
        problem = load_problem(args.instance)
    except FileNotFoundError:
        print(f"bilinmax: instance file not found: {args.instance}", file=sys.stderr)
        return EXIT_INPUT
    except (InstanceFormatError, UnsupportedP, BilinearError, ValueError) as exc:
        print(f"bilinmax: invalid instance: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        result, trace = _solve_problem(problem, args)
    except InputError as exc:
        print(f"bilinmax: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (BilinearError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"bilinmax: solver {args.solver} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.no_timing:
        for key in ("wall_time_s", "transform_time_s", "solve_time_s"):
            result.pop(key, None)
    if args.trace:
        if args.solver in ("maxnorm", "newton") and trace:
            _write_trace(args.trace, trace, args)
        else:
            logger.warning("--trace only applies to maxnorm and newton; nothing written")
    _emit_json(result, args.out)
    return 0


# -- gen -----------------------------------------------------------------


def cmd_gen(args) -> int:
    try:
        df = generate_instance(args.dist, args.d, args.kappa, args.a, args.seed)
    except ValueError as exc:
        print(f"bilinmax: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _emit_json(diagonal_to_json(df), args.out)
    return 0


# -- bench ---------------------------------------------------------------


def cmd_bench(args) -> int:
    cfg = SweepConfig(
        dists=tuple(args.dist), kappas=tuple(args.kappa), dims=tuple(args.d), seeds=args.seeds,
        solvers=tuple(args.solvers), a=args.a, epsilon=args.eps, eta=args.eta, base_seed=args.seed,
    )
    rows = run_sweep(cfg, jobs=args.jobs)
    summary = summarize(rows)
    if args.no_timing:
        for r in rows:
            r["wall_time_s"] = None
        for s in summary:
            s["median_time_s"] = s["q90_time_s"] = None
    out = Path(args.out or "bench_out")
    params = {"command": "bench", "seed": args.seed, "dist": list(cfg.dists), "kappa": list(cfg.kappas),
              "d": list(cfg.dims), "seeds": cfg.seeds, "solvers": list(cfg.solvers), "a": cfg.a,
              "eps": cfg.epsilon, "eta": cfg.eta}
    write_csv(out / "bench.csv", ROW_FIELDS, ([r[k] for k in ROW_FIELDS] for r in rows), params)
    write_csv(out / "bench_summary.csv", SUMMARY_FIELDS, ([s[k] for k in SUMMARY_FIELDS] for s in summary),
              params)
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} rows ({failed} failed) -> {out / 'bench.csv'}")
    if not args.no_timing:
        for s in summary:
            print(f"{s['dist']:>9} d={s['d']:<6} kappa={s['kappa']:<8g} {s['solver']:>8} "
                  f"median={s['median_time_s']:.3e}s q90={s['q90_time_s']:.3e}s")
        wins, total = ordering_check(summary)
        if total:
            print(f"newton slower than maxnorm on {wins}/{total} cells")
    return 0


# -- bandit --------------------------------------------------------------


def _mean_ci(values) -> tuple[float, float, float]:
    v = np.asarray(values, dtype=float)
    m = float(np.mean(v))
    if v.size < 2:
        return m, math.nan, math.nan
    half = float(stats.t.ppf(0.975, v.size - 1) * np.std(v, ddof=1) / math.sqrt(v.size))
    return m, m - half, m + half


def _bandit_run(alg: str, seed: int, args) -> dict:
    """One seed; returns {label: trace}."""
    if alg == "eps-linucb":
        approx, exact = run_eps_linucb_demo(args.eps, args.T, seed, zeta=args.norm_zeta)
        return {"approx": approx, "exact": exact}
    if alg == "eps-linucb-interval":
        approx, exact = run_eps_linucb_interval(args.eps, args.T, seed=seed, zeta=args.norm_zeta)
        return {"approx": approx, "exact": exact}
    env = BanditEnv.random(args.d, args.norm_zeta, args.T, seed=seed)
    solver = alg.split("-", 1)[1]
    times = [t for t in (args.hist_times or []) if 1 <= t <= args.T]
    trace = run_optimistic(env, solver, regularizer=args.regularizer, delta=args.delta,
                           epsilon=args.solver_eps, snapshot_times=times)
    return {solver: trace}


def _bandit_job(payload):
    alg, seed, args = payload
    return _bandit_run(alg, seed, args)


def cmd_bandit(args) -> int:
    if args.alg.startswith("eps-linucb") and not 0.0 <= args.eps < 1.0:
        print("bilinmax: --eps must be in [0, 1)", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out or "bandit_out")
    seeds = [args.seed + k for k in range(args.seeds)]
    payloads = [(args.alg, s, args) for s in seeds]
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_bandit_job, payloads))
        else:
            results = [_bandit_job(p) for p in payloads]
    except BilinearError as exc:
        print(f"bilinmax: solver failed inside the bandit loop: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    base = {"command": "bandit", "alg": args.alg, "d": args.d, "T": args.T, "norm_zeta": args.norm_zeta,
            "eps": args.eps, "regularizer": args.regularizer, "delta": args.delta, "solver_eps": args.solver_eps}
    finals: dict[str, list[float]] = {}
    for seed, runs in zip(seeds, results):
        for label, trace in runs.items():
            rows = trace.rows()
            if args.no_timing:
                rows = (r[:4] + (None,) for r in rows)
            name = f"{args.alg}_{label}_seed{seed}.csv"
            write_csv(out / name, ("t", "played_value", "regret", "cumulative_regret", "solver_time_s"), rows,
                      dict(base, seed=seed, agent=label))
            finals.setdefault(label, []).append(trace.regret_at(trace.horizon))
            if trace.snapshots:
                ts = sorted(trace.snapshots)
                spectrum_histograms(instances_from_bandit_run(trace, ts), ts,
                                    out / f"{args.alg}_hist_seed{seed}.csv",
                                    header_comment=metadata_line(dict(base, seed=seed))[2:])
    summary_rows = []
    for label, vals in finals.items():
        m, lo, hi = _mean_ci(vals)
        summary_rows.append((args.alg, label, args.d, args.T, args.norm_zeta, args.eps, len(vals), m, lo, hi))
    write_csv(out / f"{args.alg}_summary.csv",
              ("alg", "agent", "d", "T", "norm_zeta", "eps", "n_seeds", "mean_regret", "ci95_low", "ci95_high"),
              summary_rows, dict(base, seed=args.seed, seeds=args.seeds))
    for row in summary_rows:
        print(f"{row[1]:>8}: mean R_T = {row[7]:.4g}  95% CI [{row[8]:.4g}, {row[9]:.4g}]  ({row[6]} seeds)")
    return 0


# -- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=_env("SEED", 0, int), help="base seed")
    common.add_argument("--out", default=_env("OUT", None), help="output file (solve/gen) or directory")
    common.add_argument("--jobs", type=int, default=_env("JOBS", 1, int), help="worker processes")
    common.add_argument("--no-timing", action="store_true",
                        help="omit wall-clock columns so repeated runs are byte-identical")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bilinmax", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bilinmax {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    eps_default = _env("EPS", 1e-8, float)

    p = sub.add_parser("solve", parents=[common], help="solve one instance file")
    p.add_argument("instance", help="JSON instance file")
    p.add_argument("--solver", choices=SOLVER_CHOICES, default="maxnorm")
    p.add_argument("--eps", type=float, default=eps_default)
    p.add_argument("--eta", type=float, default=None, help="barrier growth factor for newton")
    p.add_argument("--time-transform", action="store_true",
                   help="report diagonalization and solve times separately")
    p.add_argument("--trace", default=None, help="CSV file for per-iteration (maxnorm) or per-phase (newton) trace")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", parents=[common], help="write a generated pre-diagonalized instance")
    p.add_argument("--dist", choices=DISTRIBUTIONS, default="stacked")
    p.add_argument("--a", type=float, default=0.1)
    p.add_argument("--kappa", type=float, default=1e3)
    p.add_argument("--d", type=int, default=100)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", parents=[common], help="timing sweep over (dist, kappa, d)")
    p.add_argument("--dist", nargs="+", choices=DISTRIBUTIONS, default=["stacked"])
    p.add_argument("--kappa", type=_float_list, default=[10.0, 100.0, 1e3, 1e4, 1e5],
                   help="comma-separated list")
    p.add_argument("--d", type=_int_list, default=[500], help="comma-separated list")
    p.add_argument("--seeds", type=int, default=20, help="seeds per cell")
    p.add_argument("--solvers", nargs="+", choices=("maxnorm", "newton"), default=["maxnorm", "newton"])
    p.add_argument("--a", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=eps_default)
    p.add_argument("--eta", type=float, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("bandit", parents=[common], help="regret simulations")
    p.add_argument("--alg", choices=BANDIT_ALGS, default="oful-maxnorm")
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--T", type=int, default=10_000)
    p.add_argument("--norm-zeta", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.2, help="approximation slack for eps-linucb")
    p.add_argument("--seeds", type=int, default=10, help="number of seeds")
    p.add_argument("--regularizer", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=None, help="confidence level (default 1/T)")
    p.add_argument("--solver-eps", type=float, default=eps_default)
    p.add_argument("--hist-times", type=_int_list, default=None,
                   help="rounds whose instances are histogrammed (oful only)")
    p.set_defaults(func=cmd_bandit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if hasattr(args, "eps") and args.command in ("solve", "bench") and not args.eps > 0:
        parser.error("--eps must be positive")
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
