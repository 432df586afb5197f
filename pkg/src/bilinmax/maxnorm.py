"""MaxNorm: secular-equation bisection for the optimal KKT multiplier.

After rotation the problem becomes ``max ||phi||_2`` subject to
``||phi - b||_lam <= 1``. Clipping b away from zero makes every KKT
multiplier satisfy ``mu > 1/lam_d``, where the constraint reduces to the
scalar equation ``sum_i lam_i b_i^2 / (mu lam_i - 1)^2 = 1``.

The bisection runs on ``delta = mu lam_d - 1`` rather than on mu. The two
are affinely related, so halving steps coincide, but ``mu lam_i - 1`` is
then formed as ``(lam_i - lam_d)/lam_d + delta lam_i/lam_d`` without the
cancellation that ruins it when mu sits just above ``1/lam_d``.
"""

from __future__ import annotations

import dataclasses
import math
import time

import numpy as np

from .core import BilinearError, Solution, as_diagonal, solution_from_u

DEFAULT_EPSILON = 1e-8
MAX_BISECTIONS = 200


class PoleHit(BilinearError):
    pass


@dataclasses.dataclass(frozen=True)
class ClippedCenter:
    b_plus: np.ndarray
    epsilon: float


@dataclasses.dataclass(frozen=True)
class Bracket:
    lower: float
    upper: float
    iterations: int


def clip_center(b, epsilon: float) -> ClippedCenter:
    """Floor every ``|b_i|`` at ``epsilon / (2 sqrt(d))``, keeping signs (0 -> +)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    b = np.asarray(b, dtype=float)
    floor = epsilon / (2.0 * math.sqrt(b.size))
    sign = np.where(b < 0, -1.0, 1.0)
    return ClippedCenter(sign * np.maximum(np.abs(b), floor), epsilon)


def secular_value(mu: float, lam, b_plus) -> float:
    """``s(mu) = sum_i lam_i b_i^2 / (mu lam_i - 1)^2``."""
    lam = np.asarray(lam, dtype=float)
    b_plus = np.asarray(b_plus, dtype=float)
    gap = mu * lam - 1.0
    if np.any(gap == 0.0):
        raise PoleHit(f"mu = {mu!r} hits a pole 1/lambda_i")
    return float(np.sum(lam * b_plus**2 / gap**2))


def _gaps(delta: float, lam: np.ndarray) -> np.ndarray:
    # mu * lam_i - 1 with mu = (1 + delta) / lam_d
    lam_d = lam[-1]
    return (lam - lam_d) / lam_d + delta * (lam / lam_d)


def _secular_delta(delta: float, lam: np.ndarray, wb2: np.ndarray) -> float:
    return float(np.sum(wb2 / _gaps(delta, lam) ** 2))


def iteration_count(lam, b_plus, epsilon: float, width: float) -> int:
    """Halvings needed so the multiplier error costs at most ``epsilon / 2``.

    ``ceil(log2(2 |M - m| sqrt(sum lam_i^2 b_i^2) / (epsilon lam_d b_d^2)))``,
    clamped to ``[1, MAX_BISECTIONS]``.
    """
    lam = np.asarray(lam, dtype=float)
    b_plus = np.asarray(b_plus, dtype=float)
    if width <= 0:
        return 1
    num = 2.0 * width * math.sqrt(float(np.sum(lam**2 * b_plus**2)))
    den = epsilon * lam[-1] * b_plus[-1] ** 2
    with np.errstate(divide="ignore", over="ignore"):
        ratio = num / den
    if not math.isfinite(ratio):
        return MAX_BISECTIONS
    if ratio <= 1.0:
        return 1
    return int(min(max(math.ceil(math.log2(ratio)), 1), MAX_BISECTIONS))


def bracket_and_iterations(lam, b_plus, epsilon: float) -> Bracket:
    """Interval ``[m, M]`` containing the root, and the bisection budget J."""
    lam = np.asarray(lam, dtype=float)
    b_plus = np.asarray(b_plus, dtype=float)
    lam_d = lam[-1]
    lower = (math.sqrt(lam_d) * abs(b_plus[-1]) + 1.0) / lam_d
    upper = (math.sqrt(float(np.sum(lam * b_plus**2))) + 1.0) / lam_d
    upper = max(upper, lower)
    return Bracket(lower, upper, iteration_count(lam, b_plus, epsilon, upper - lower))


def _bisect(lam: np.ndarray, b_plus: np.ndarray, J: int, trace=None):
    """Run J halvings on delta; return (delta_hat, halvings performed)."""
    lam_d = lam[-1]
    wb2 = lam * b_plus**2
    lo = math.sqrt(lam_d) * abs(b_plus[-1])
    hi = max(math.sqrt(float(np.sum(wb2))), lo)
    done = 0
    for _ in range(J):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _secular_delta(mid, lam, wb2) <= 1.0:
            hi = mid
        else:
            lo = mid
        done += 1
        if trace is not None:
            trace(done, hi)
    return hi, done


def _phi_plus(delta: float, lam: np.ndarray, b_plus: np.ndarray) -> np.ndarray:
    # mu lam_i b_i / (mu lam_i - 1)
    g = _gaps(delta, lam)
    return (1.0 + g) * b_plus / g


def solve_maxnorm(problem, epsilon: float = DEFAULT_EPSILON, trace=None) -> Solution:
    """Epsilon-optimal solution by bisection on the secular equation.

    ``problem`` may be a :class:`BilinearInstance` or a pre-computed
    :class:`DiagonalForm`; in the latter case no factorization is done.
    ``trace``, when given, is a list that receives one
    ``(elapsed_s, iteration, value)`` row per bisection step.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    start = time.perf_counter()
    df = as_diagonal(problem)
    setup = time.perf_counter() - start
    lam = df.lam
    clipped = clip_center(df.b, epsilon)
    b_plus = clipped.b_plus
    bracket = bracket_and_iterations(lam, b_plus, epsilon)

    hook = None
    if trace is not None:
        t0 = time.perf_counter()

        def hook(k, delta):
            u = _phi_plus(delta, lam, b_plus)
            u = u / np.linalg.norm(u)
            trace.append((time.perf_counter() - t0, k, df.pair_value(u)))

    if bracket.upper - bracket.lower <= 0.0:
        delta_hat, halvings = math.sqrt(lam[-1]) * abs(b_plus[-1]), 0
    else:
        delta_hat, halvings = _bisect(lam, b_plus, bracket.iterations, hook)
    mu_hat = (1.0 + delta_hat) / lam[-1]
    phi_plus = _phi_plus(delta_hat, lam, b_plus)
    u = phi_plus / np.linalg.norm(phi_plus)
    sol = solution_from_u(
        df,
        u,
        "maxnorm",
        multiplier=mu_hat,
        iterations=bracket.iterations,
    )
    sol.wall_time_s = time.perf_counter() - start
    sol.diagnostics.update(
        {
            "transform_time_s": setup,
            "bracket": (bracket.lower, bracket.upper),
            "halvings": halvings,
            "delta": delta_hat,
            "phi_plus": phi_plus,
            "b_plus": b_plus,
            "secular_at_mu": _secular_delta(delta_hat, lam, lam * b_plus**2),
        }
    )
    return sol
