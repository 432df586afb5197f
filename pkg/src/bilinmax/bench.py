"""Timing sweeps over generated instances.

Each row is one (dist, d, kappa, seed, solver) solve on a pre-diagonalized
instance, so reported times exclude any factorization.
"""

from __future__ import annotations

import dataclasses
import itertools
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .core import BilinearError
from .generators import generate_instance
from .maxnorm import solve_maxnorm
from .newton import solve_newton

ROW_FIELDS = ("dist", "d", "kappa", "seed", "solver", "value", "wall_time_s", "iterations", "error")
SUMMARY_FIELDS = ("dist", "d", "kappa", "solver", "n", "failed", "median_time_s", "q90_time_s",
                  "median_iterations")


@dataclasses.dataclass(frozen=True)
class SweepConfig:
    dists: Sequence[str] = ("stacked",)
    kappas: Sequence[float] = (10.0, 100.0, 1e3, 1e4, 1e5)
    dims: Sequence[int] = (500,)
    seeds: int = 20
    solvers: Sequence[str] = ("maxnorm", "newton")
    a: float = 0.1
    epsilon: float = 1e-8
    eta: float | None = None
    base_seed: int = 0

    def cells(self):
        return list(itertools.product(self.dists, self.dims, self.kappas))


def _solve(solver: str, df, cfg: SweepConfig):
    if solver == "maxnorm":
        return solve_maxnorm(df, cfg.epsilon)
    if solver == "newton":
        return solve_newton(df, cfg.epsilon, eta=cfg.eta)
    raise ValueError(f"unknown solver {solver!r}")


def run_cell(cell, cfg: SweepConfig) -> list[dict]:
    """All seeds and solvers of one (dist, d, kappa) cell; failures become rows with an error."""
    dist, d, kappa = cell
    rows = []
    for k in range(cfg.seeds):
        seed = cfg.base_seed + k
        df = generate_instance(dist, d, kappa, cfg.a, seed)
        for solver in cfg.solvers:
            row = {"dist": dist, "d": d, "kappa": kappa, "seed": seed, "solver": solver,
                   "value": np.nan, "wall_time_s": np.nan, "iterations": 0, "error": ""}
            try:
                sol = _solve(solver, df, cfg)
            except (BilinearError, FloatingPointError, np.linalg.LinAlgError) as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            else:
                row.update(value=sol.value, wall_time_s=sol.wall_time_s, iterations=sol.iterations)
            rows.append(row)
    return rows


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> list[dict]:
    cells = cfg.cells()
    if jobs <= 1:
        chunks = [run_cell(c, cfg) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map preserves cell order, so output is independent of scheduling
            chunks = list(pool.map(run_cell, cells, itertools.repeat(cfg)))
    return [row for chunk in chunks for row in chunk]


def summarize(rows: Sequence[dict]) -> list[dict]:
    """Median and 90% quantile of wall time per (dist, d, kappa, solver)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["dist"], r["d"], r["kappa"], r["solver"]), []).append(r)
    out = []
    for (dist, d, kappa, solver), grp in groups.items():
        ok = [r for r in grp if not r["error"]]
        times = np.array([r["wall_time_s"] for r in ok], dtype=float)
        its = np.array([r["iterations"] for r in ok], dtype=float)
        out.append({
            "dist": dist, "d": d, "kappa": kappa, "solver": solver,
            "n": len(grp), "failed": len(grp) - len(ok),
            "median_time_s": float(np.median(times)) if times.size else np.nan,
            "q90_time_s": float(np.quantile(times, 0.9)) if times.size else np.nan,
            "median_iterations": float(np.median(its)) if its.size else np.nan,
        })
    return out


def ordering_check(summary: Sequence[dict], fast: str = "maxnorm", slow: str = "newton") -> tuple[int, int]:
    """Return (cells where ``slow`` has the larger median time, cells compared)."""
    by_cell: dict[tuple, dict] = {}
    for s in summary:
        by_cell.setdefault((s["dist"], s["d"], s["kappa"]), {})[s["solver"]] = s["median_time_s"]
    wins = total = 0
    for solvers in by_cell.values():
        if fast in solvers and slow in solvers:
            total += 1
            wins += int(solvers[slow] > solvers[fast])
    return wins, total


def loglog_slope(ds: Sequence[float], times: Sequence[float]) -> float:
    """Least-squares slope of log(time) against log(d)."""
    return float(np.polyfit(np.log(ds), np.log(times), 1)[0])
