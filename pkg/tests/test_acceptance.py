"""Acceptance criteria, one test per criterion at its stated tolerance and budget.

Each test records a ``criterion N: PASS|FAIL`` line that appears in the
pytest terminal summary.
"""

import math
import time

import numpy as np
import pytest

from bilinmax.bandit import run_eps_linucb_demo
from bilinmax.bench import SweepConfig, ordering_check, run_sweep, summarize
from bilinmax.cli import main
from bilinmax.core import BilinearInstance, DiagonalForm
from bilinmax.generators import DISTRIBUTIONS, generate_instance, make_rng, random_instance, random_spd
from bilinmax.maxnorm import solve_maxnorm
from bilinmax.newton import barrier_objective, reduce_to_convex, solve_newton
from bilinmax.oracle import oracle_solve
from bilinmax.special import (
    LpAlignedInstance,
    lp_hessian_matvec,
    lp_objective,
    solve_centered,
    solve_lp_aligned,
)

EPS = 1e-8


def unit_ball_instances():
    for d in (1, 2, 10, 100):
        for seed in range(50):
            c = make_rng(seed, 50 + d).standard_normal(d)
            yield BilinearInstance.from_arrays(np.eye(d), np.eye(d), c)


def test_criterion_1_unit_balls(report):
    insts = list(unit_ball_instances())
    start = time.perf_counter()
    m_err = max(abs(solve_maxnorm(i, EPS).value - (np.linalg.norm(i.c) + 1)) for i in insts)
    elapsed = time.perf_counter() - start
    # the 1 s budget is for MaxNorm; newton is checked for correctness only
    n_err = max(abs(solve_newton(i, EPS).value - (np.linalg.norm(i.c) + 1)) for i in insts)
    ok = m_err <= EPS and n_err <= EPS and elapsed < 1.0
    report(1, ok, f"maxnorm max err {m_err:.2e}, newton max err {n_err:.2e}, maxnorm time {elapsed:.3f}s (< 1s)")
    assert ok


def test_criterion_2_worked_instance(report, worked, ref):
    m, n = solve_maxnorm(worked, EPS), solve_newton(worked, EPS)
    target = 4 / math.sqrt(3)
    assert target == pytest.approx(ref["worked_value"], abs=1e-15)
    errs = (abs(m.value - target), abs(n.value - target), abs(m.multiplier - 4.0))
    ok = errs[0] <= 1e-6 and errs[1] <= 1e-6 and errs[2] <= 1e-4
    report(2, ok, f"|maxnorm - 4/sqrt3| {errs[0]:.1e}, |newton - 4/sqrt3| {errs[1]:.1e}, |mu - 4| {errs[2]:.1e}")
    assert ok


def test_criterion_3_oracle(report):
    start = time.perf_counter()
    lo = {"maxnorm": math.inf, "newton": math.inf}
    hi = {"maxnorm": -math.inf, "newton": -math.inf}
    for seed in range(200):
        # each matrix has kappa <= sqrt(1e3), so the rotated spectrum has kappa <= 1e3
        inst = random_instance(1 + seed % 3, 7000 + seed, kappa=math.sqrt(1e3))
        o = oracle_solve(inst).value
        for name, solve in (("maxnorm", solve_maxnorm), ("newton", solve_newton)):
            diff = solve(inst, EPS).value - o
            lo[name], hi[name] = min(lo[name], diff), max(hi[name], diff)
    elapsed = time.perf_counter() - start
    ok = all(lo[k] >= -EPS - 1e-9 and hi[k] <= 1e-5 for k in lo) and elapsed < 30.0
    report(3, ok, "solver - oracle in " + ", ".join(f"{k} [{lo[k]:.1e}, {hi[k]:.1e}]" for k in lo)
           + f", time {elapsed:.1f}s (< 30s)")
    assert ok


@pytest.fixture(scope="module")
def cross_solver_runs():
    """100 seeds per (family, d); kappa cycles through 1e1 .. 1e5."""
    runs = []
    start = time.perf_counter()
    for kind in DISTRIBUTIONS:
        for d in (2, 5, 20, 100):
            for seed in range(100):
                df = generate_instance(kind, d, 10.0 ** (1 + seed % 5), 1.0, seed)
                runs.append((df, solve_maxnorm(df, EPS), solve_newton(df, EPS)))
    return runs, time.perf_counter() - start


def test_criterion_4_cross_solver(report, cross_solver_runs):
    runs, elapsed = cross_solver_runs
    worst = max(abs(m.value - n.value) for _, m, n in runs)
    ok = worst <= 2 * EPS and elapsed < 120.0
    report(4, ok, f"{len(runs)} instances, max |maxnorm - newton| {worst:.2e} (<= 2e-8), time {elapsed:.1f}s (< 120s)")
    assert ok


def test_criterion_5_newton_internals(report, cross_solver_runs):
    runs, _ = cross_solver_runs
    totals = dict(decrease=0, retry=0, contraction=0, gap=0, steps=0, safeguard=0, stalled=0)
    for df, _, n in runs:
        dg = n.diagnostics
        totals["decrease"] += dg["decrease_violations"]
        totals["retry"] += dg["retry_decrease_violations"]
        totals["contraction"] += dg["contraction_violations"]
        totals["gap"] += int((df.dim + 1) / dg["t_final"] > EPS / 2)
        totals["steps"] += int(n.iterations > dg["step_bound"])
        totals["safeguard"] += dg["safeguard_halvings"]
        totals["stalled"] += dg["stalled_phases"]
    ok = all(v == 0 for k, v in totals.items() if k != "stalled")
    report(5, ok, "violations " + ", ".join(f"{k}={v}" for k, v in totals.items()) + f" over {len(runs)} solves")
    assert ok


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_criterion_6_finite_differences(report):
    rng = make_rng(0, 60)
    h = 1e-6
    worst_g = worst_h = 0.0
    for k in range(50):
        d = 2 + k % 6
        df = DiagonalForm(np.sort(rng.uniform(0.1, 10.0, d))[::-1], rng.standard_normal(d))
        red = reduce_to_convex(df)
        w = rng.dirichlet(np.ones(d + 1))
        y = red.B + (1.0 - red.B.sum()) * w[:-1]
        t = red.t0 * rng.uniform(1.0, 100.0)
        _, g, H = barrier_objective(y, t, red)
        # step relative to the distance to the boundary keeps truncation error small near it
        hb = 1e-4 * min(float(np.min(y - red.B)), 1.0 - float(y.sum()))
        fd = np.array([(barrier_objective(y + hb * e, t, red)[0] - barrier_objective(y - hb * e, t, red)[0])
                       / (2 * hb) for e in np.eye(d)])
        v = rng.standard_normal(d)
        step = hb / np.linalg.norm(v)
        fdh = (barrier_objective(y + step * v, t, red)[1] - barrier_objective(y - step * v, t, red)[1]) / (2 * step)
        worst_g, worst_h = max(worst_g, _rel(fd, g)), max(worst_h, _rel(fdh, H.matvec(v)))
        step = h / np.linalg.norm(v)

        inst = LpAlignedInstance((2.0, 3.0, 4.0)[k % 3], rng.standard_normal(d), rng.uniform(0.5, 5.0, d))
        y = 0.05 / d + 0.9 * rng.dirichlet(np.ones(d))
        _, g = lp_objective(y, inst)
        fd = np.array([(lp_objective(y + h * e, inst)[0] - lp_objective(y - h * e, inst)[0]) / (2 * h)
                       for e in np.eye(d)])
        fdh = (lp_objective(y + step * v, inst)[1] - lp_objective(y - step * v, inst)[1]) / (2 * step)
        worst_g, worst_h = max(worst_g, _rel(fd, g)), max(worst_h, _rel(fdh, lp_hessian_matvec(y, v, inst)))
    ok = worst_g <= 1e-5 and worst_h <= 1e-4
    report(6, ok, f"50 points each for F_t and H: worst gradient rel err {worst_g:.1e} (<= 1e-5), "
                  f"Hessian-vector {worst_h:.1e} (<= 1e-4)")
    assert ok


def _median_time(df, repeats=5):
    times = []
    for _ in range(repeats):
        times.append(solve_maxnorm(df, EPS).wall_time_s)
    return float(np.median(times))


def test_criterion_7_scale(report):
    t1600 = _median_time(generate_instance("stacked", 1600, 1e5, 0.1, 0))
    t10k = _median_time(generate_instance("stacked", 10_000, 1e5, 0.1, 0))
    cfg = SweepConfig(dists=DISTRIBUTIONS, kappas=(1e5,), dims=(500,), seeds=5)
    summary = summarize(run_sweep(cfg))
    wins, total = ordering_check(summary)
    newton_faster = total - wins
    failed = sum(s["failed"] for s in summary)
    ok = t1600 < 0.05 and t10k < 1.0 and 2 * newton_faster <= total and failed == 0
    report(7, ok, f"maxnorm d=1600 {1e3 * t1600:.1f}ms (< 50ms), d=1e4 {1e3 * t10k:.1f}ms (< 1s); "
                  f"newton slower on {wins}/{total} cells at d=500, kappa=1e5")
    assert ok


@pytest.fixture(scope="module")
def eps_demo():
    start = time.perf_counter()
    runs = [run_eps_linucb_demo(0.2, 10_000, seed) for seed in range(10)]
    return runs, time.perf_counter() - start


def test_criterion_8_eps_linucb_linear_regret(report, eps_demo, ref):
    runs, elapsed = eps_demo
    mean = float(np.mean([a.regret_at(10_000) for a, _ in runs]))
    certs = all(a.meta["certificate_ok"].all() for a, _ in runs)
    ok = mean >= 1800 and certs and elapsed < 60.0
    report("8a", ok, f"approx mean R_T {mean:.1f} (>= 1800; bound {ref['eps_linucb_regret_bound']:.1f}), "
                     f"certificates {'ok' if certs else 'violated'}, time {elapsed:.1f}s (< 60s)")
    assert ok


@pytest.mark.xfail(strict=True, reason="exact agent's regret is identically 0 in the {1-eps, 1} construction, "
                                       "so the strict ratio inequality reads 0 < 0")
def test_criterion_8_exact_agent_ratio(report, eps_demo):
    runs, _ = eps_demo
    T = 10_000
    late = float(np.mean([e.regret_at(T) / T for _, e in runs]))
    early = float(np.mean([e.regret_at(T // 4) / (T // 4) for _, e in runs]))
    ok = late < 0.5 * early
    report("8b", ok, f"exact agent R_T/T {late:.3g} vs half of R_(T/4)/(T/4) {0.5 * early:.3g} "
                     f"(literal strict inequality; exact regret is zero on all 10 seeds)")
    assert ok


def _random_simplex_point(rng, d):
    return rng.dirichlet(np.ones(d))


def test_criterion_9_convexity_and_reductions(report):
    rng = make_rng(0, 90)
    worst_mid = -math.inf
    for p in (2.0, 3.0, 4.0):
        for _ in range(300):
            d = int(rng.integers(2, 9))
            inst = LpAlignedInstance(p, rng.standard_normal(d), rng.uniform(0.1, 10.0, d))
            y, z = _random_simplex_point(rng, d), _random_simplex_point(rng, d)
            gap = lp_objective((y + z) / 2, inst)[0] - (lp_objective(y, inst)[0] + lp_objective(z, inst)[0]) / 2
            worst_mid = max(worst_mid, gap)
    worst_p2 = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 9))
        lam = np.sort(rng.uniform(0.1, 10.0, d))[::-1]
        c = rng.standard_normal(d)
        lp = solve_lp_aligned(LpAlignedInstance(2.0, c, lam), EPS).value
        worst_p2 = max(worst_p2, abs(lp - solve_maxnorm(DiagonalForm(lam, c), EPS).value))
    worst_c = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 9))
        A, W = random_spd(d, rng, 100.0), random_spd(d, rng, 100.0)
        eig = math.sqrt(np.max(np.linalg.eigvals(np.linalg.inv(A) @ np.linalg.inv(W)).real))
        worst_c = max(worst_c, abs(solve_centered(A, W).value - eig))
    ok = worst_mid <= 1e-12 and worst_p2 <= 2 * EPS and worst_c <= 1e-8
    report(9, ok, f"midpoint gap max {worst_mid:.1e} (<= 0), |lp(p=2) - maxnorm| {worst_p2:.1e} (<= 2e-8), "
                  f"|centered - eigen| {worst_c:.1e} (<= 1e-8)")
    assert ok


def test_criterion_10_reproducible_csv(report, tmp_path):
    commands = {
        "eps-linucb": ["bandit", "--alg", "eps-linucb", "--T", "2000", "--seeds", "3"],
        "oful": ["bandit", "--alg", "oful-maxnorm", "--d", "3", "--T", "300", "--seeds", "2",
                 "--hist-times", "100,300", "--no-timing"],
        "bench": ["bench", "--dist", "stacked", "oexp", "--kappa", "10,1e4", "--d", "20", "--seeds", "3",
                  "--no-timing"],
    }
    mismatched, compared = [], 0
    for name, argv in commands.items():
        for run in ("a", "b"):
            assert main(argv + ["--seed", "11", "--out", str(tmp_path / run / name)]) == 0
        for f in sorted((tmp_path / "a" / name).iterdir()):
            compared += 1
            if f.read_bytes() != (tmp_path / "b" / name / f.name).read_bytes():
                mismatched.append(f.name)
    ok = compared > 0 and not mismatched
    report(10, ok, f"{compared} CSV files compared across two runs, {len(mismatched)} differ")
    assert ok
