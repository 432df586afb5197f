"""Newton: log-barrier path following on the convex simplex reduction.

In rotated coordinates the bilinear problem is equivalent to minimizing

    F(y) = -sum_i |b_i| sqrt(y_i) - sqrt(sum_i y_i / lam_i)

over the probability simplex, with the action recovered as
``u_i = sqrt(y_i) sign(b_i)``. The minimizer satisfies ``y >= B`` with
``B_i = b_i^2 / (||b|| + lam_d^{-1/2})^2``, so the solver minimizes the
barrier-penalized objective

    F_t(y) = t F(y) - sum_i log(y_i - B_i) - log(1 - sum_i y_i)

for a geometrically increasing sequence of weights t, each phase using the
two-stage Newton method for self-concordant functions (damped steps while
the Newton decrement is at least 1/4, then intermediate steps).

The Hessian of F_t is ``diag(D) + rho v v^T + tau 1 1^T`` with all terms
positive, so every Newton system is solved in O(d) by applying the
Sherman-Morrison formula twice.

Iterates are stored as slacks ``z = y - B`` and ``s = 1 - sum(y)`` so that the
barrier arguments keep full relative precision when the path approaches
the boundary.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time

import numpy as np

from .core import BilinearError, DiagonalForm, Solution, as_diagonal, solution_from_u

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-8
DAMPED_THRESHOLD = 0.25
DECREASE_SLACK = 1e-6
CONTRACTION_SLACK = 1e-9
MAX_SAFEGUARD_HALVINGS = 60
HARD_STEP_CAP = 200_000
STALL_STEPS = 6


class AllZeroCenter(BilinearError):
    pass


class DomainViolation(BilinearError):
    pass


class MaxIterations(BilinearError):
    pass


def omega(x: float) -> float:
    """Guaranteed decrease of a damped step: ``x - ln(1 + x)``."""
    return x - math.log1p(x)


def _sign(b: np.ndarray) -> np.ndarray:
    return np.where(b < 0, -1.0, 1.0)


@dataclasses.dataclass(frozen=True)
class ConvexReduction:
    lam: np.ndarray
    b: np.ndarray
    B: np.ndarray
    support: np.ndarray
    t0: float
    y0: np.ndarray
    scale: float  # ||b|| + lam_d^{-1/2}
    t0_variant: str = "barrier"
    y0_capped: bool = False

    @property
    def dim(self) -> int:
        return self.lam.shape[0]

    @property
    def abs_b(self) -> np.ndarray:
        return np.abs(self.b)


def reduce_to_convex(df: DiagonalForm, t0_variant: str = "barrier") -> ConvexReduction:
    """Lower bounds B, starting point y0 and initial barrier weight t0.

    t0 variants:

    * ``"printed"``: ``9 max(max_I (b_i^2 B_i)^{-1/2}, min_I (B_i / lam_i)^{-1/2})``
    * ``"max"``: as printed with the inner min replaced by a max
    * ``"barrier"`` (default): ``9 min_I (B_i / lam_i)^{-1/2}``. Each
      ``-t|b_i| sqrt(y_i) - log(y_i - B_i)`` is self-concordant for every
      ``t >= 0`` because ``y_i - B_i <= y_i``, so only the coupled term
      ``-t sqrt(sum y_i / lam_i)`` constrains t. The first printed term
      grows like ``1 / b_i^2`` for small ``b_i`` and makes centering cost
      ``O(sqrt(t0))`` damped steps.
    """
    lam, b = df.lam, df.b
    support = np.flatnonzero(b != 0.0)
    if support.size == 0:
        raise AllZeroCenter("b = 0: the convex reduction is undefined, use the centered solver")
    lam_d = lam[-1]
    scale = float(np.linalg.norm(b)) + 1.0 / math.sqrt(lam_d)
    B = (b / scale) ** 2
    offset = (0.5 / lam_d) / scale**2
    # the printed offset overshoots the simplex once d / (2 lam_d) is large;
    # cap it at half the slack left by B so y0 stays interior
    cap = 0.5 * (1.0 - float(np.sum(B))) / b.size
    y0_capped = offset >= cap
    y0 = B + min(offset, cap)
    bs, Bs, ls = b[support], B[support], lam[support]
    first = float(np.max((bs**2 * Bs) ** -0.5))
    inner = (Bs / ls) ** -0.5
    if t0_variant == "printed":
        t0 = 9.0 * max(first, float(np.min(inner)))
    elif t0_variant == "max":
        t0 = 9.0 * max(first, float(np.max(inner)))
    elif t0_variant == "barrier":
        t0 = 9.0 * float(np.min(inner))
    else:
        raise ValueError(f"unknown t0 variant {t0_variant!r}")
    return ConvexReduction(lam, b, B, support, t0, y0, scale, t0_variant, y0_capped)


def convex_objective(y, red: ConvexReduction) -> float:
    """``F(y) = -sum |b_i| sqrt(y_i) - sqrt(sum y_i / lam_i)``."""
    y = np.asarray(y, dtype=float)
    return float(-(red.abs_b @ np.sqrt(y)) - math.sqrt(float(np.sum(y / red.lam))))


@dataclasses.dataclass(frozen=True)
class HessianFactors:
    """``diag(diag) + rho v v^T + tau 1 1^T``."""

    diag: np.ndarray
    rho: float
    v: np.ndarray
    tau: float

    def matvec(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        return self.diag * h + self.rho * self.v * (self.v @ h) + self.tau * np.sum(h)

    def _k_solve(self, w: np.ndarray) -> np.ndarray:
        dw = w / self.diag
        dv = self.v / self.diag
        return dw - dv * (self.rho * (self.v @ dw) / (1.0 + self.rho * (self.v @ dv)))

    def solve(self, g) -> tuple[np.ndarray, float]:
        """Return ``H^{-1} g`` and ``1^T H^{-1} g`` (the latter without cancellation)."""
        g = np.asarray(g, dtype=float)
        kg = self._k_solve(g)
        k1 = self._k_solve(np.ones_like(g))
        s_kg, s_k1 = float(np.sum(kg)), float(np.sum(k1))
        coef = self.tau * s_kg / (1.0 + self.tau * s_k1)
        return kg - coef * k1, s_kg / (1.0 + self.tau * s_k1)

    def dense(self) -> np.ndarray:
        n = self.diag.size
        return np.diag(self.diag) + self.rho * np.outer(self.v, self.v) + self.tau * np.ones((n, n))


def _evaluate(z: np.ndarray, s: float, t: float, red: ConvexReduction):
    if s <= 0.0 or np.any(z <= 0.0):
        raise DomainViolation("iterate left the barrier domain")
    y = red.B + z
    sy = np.sqrt(y)
    inv_lam = 1.0 / red.lam
    S = float(np.sum(y * inv_lam))
    sqS = math.sqrt(S)
    F = -(red.abs_b @ sy) - sqS
    value = t * F - float(np.sum(np.log(z))) - math.log(s)
    grad = t * (-0.5 * red.abs_b / sy - 0.5 * inv_lam / sqS) - 1.0 / z + 1.0 / s
    diag = t * 0.25 * red.abs_b / (y * sy) + 1.0 / z**2
    factors = HessianFactors(diag, t * 0.25 / (S * sqS), inv_lam, 1.0 / s**2)
    return value, grad, factors


def barrier_objective(y, t: float, red: ConvexReduction):
    """Value, gradient and factored Hessian of ``F_t`` at an interior y."""
    y = np.asarray(y, dtype=float)
    return _evaluate(y - red.B, 1.0 - float(np.sum(y)), t, red)


def _decrease(z, s, step, step_sum, t, red: ConvexReduction) -> float:
    """``F_t(y) - F_t(y + step)`` formed from differences, not from two large values."""
    y = red.B + z
    y_new = y + step
    d_sqrt = step / (np.sqrt(y_new) + np.sqrt(y))
    S = float(np.sum(y / red.lam))
    dS = float(np.sum(step / red.lam))
    d_sqS = dS / (math.sqrt(S + dS) + math.sqrt(S))
    dF = -(red.abs_b @ d_sqrt) - d_sqS
    d_barrier = -float(np.sum(np.log1p(step / z))) - math.log1p(-step_sum / s)
    return -(t * dF + d_barrier)


@dataclasses.dataclass
class BarrierState:
    z: np.ndarray
    s: float
    t: float
    last_local_norm: float = math.inf
    damped_steps: int = 0
    quad_steps: int = 0

    def y(self, red: ConvexReduction) -> np.ndarray:
        return red.B + self.z


@dataclasses.dataclass
class InnerReport:
    t: float
    damped_steps: int = 0
    quad_steps: int = 0
    local_norms: list = dataclasses.field(default_factory=list)
    decrease_violations: int = 0
    worst_decrease_margin: float = math.inf
    contraction_violations: int = 0
    safeguard_halvings: int = 0
    stalled: bool = False
    final_local_norm: float = math.nan

    @property
    def steps(self) -> int:
        return self.damped_steps + self.quad_steps


def _step_length(state: BarrierState, direction, dir_sum, alpha, report) -> float:
    """Shrink alpha until the step stays interior; counts any shrinking."""
    for _ in range(MAX_SAFEGUARD_HALVINGS + 1):
        if state.s - alpha * dir_sum > 0.0 and np.all(state.z + alpha * direction > 0.0):
            return alpha
        report.safeguard_halvings += 1
        alpha *= 0.5
    raise DomainViolation("no interior point along the Newton direction after 60 halvings")


def _run_inner(red: ConvexReduction, state: BarrierState, tol: float, max_steps: int) -> InnerReport:
    t = state.t
    report = InnerReport(t=t)
    _, grad, hess = _evaluate(state.z, state.s, t, red)
    prev_quad = None
    best = math.inf
    since_best = 0
    while True:
        h_grad, h_sum = hess.solve(grad)
        lam2 = max(float(grad @ h_grad), 0.0)
        lf = math.sqrt(lam2)
        report.local_norms.append(lf)
        state.last_local_norm = lf
        if prev_quad is not None and lf > prev_quad**2 * (1.0 + 2.0 * prev_quad) + CONTRACTION_SLACK:
            report.contraction_violations += 1
        if lf < DAMPED_THRESHOLD and lam2 <= tol:
            break
        if report.steps >= max_steps:
            raise MaxIterations(
                f"Newton phase at t={t:.3g} exceeded {max_steps} steps (local norm {lf:.3g})"
            )
        direction, dir_sum = -h_grad, -h_sum
        damped = lf >= DAMPED_THRESHOLD
        if damped:
            alpha = 1.0 / (1.0 + lf)
        else:
            # below ~1e-3 relative progress the decrement is at its rounding floor
            if lf < best * (1.0 - 1e-3):
                best, since_best = lf, 0
            else:
                since_best += 1
                if since_best >= STALL_STEPS:
                    report.stalled = True
                    break
            alpha = 1.0 / (1.0 + lam2 / (1.0 + lf))
        alpha = _step_length(state, direction, dir_sum, alpha, report)
        step = alpha * direction
        step_sum = alpha * dir_sum
        if damped:
            margin = _decrease(state.z, state.s, step, step_sum, t, red) - max(omega(lf), 1.0 / 38.0)
            report.worst_decrease_margin = min(report.worst_decrease_margin, margin)
            if margin < -DECREASE_SLACK:
                report.decrease_violations += 1
            report.damped_steps += 1
            state.damped_steps += 1
            prev_quad = None
        else:
            report.quad_steps += 1
            state.quad_steps += 1
            prev_quad = lf
        state.z = state.z + step
        state.s = state.s - step_sum
        _, grad, hess = _evaluate(state.z, state.s, t, red)
    report.final_local_norm = state.last_local_norm
    return report


def newton_inner(red: ConvexReduction, t: float, y_start, tol: float, max_steps: int = HARD_STEP_CAP):
    """Minimize ``F_t`` from an interior point until the squared decrement is <= tol.

    Returns the final y and an :class:`InnerReport` with per-stage step counts.
    """
    y_start = np.asarray(y_start, dtype=float)
    state = BarrierState(z=y_start - red.B, s=1.0 - float(np.sum(y_start)), t=t)
    if state.s <= 0.0 or np.any(state.z <= 0.0):
        raise DomainViolation("starting point is not strictly inside the barrier domain")
    report = _run_inner(red, state, tol, max_steps)
    return state.y(red), report


def phase_count_bound(red: ConvexReduction, epsilon: float, eta: float) -> int:
    """Number of barrier increases until ``(d+1)/t <= epsilon/2``."""
    ratio = 2.0 * (red.dim + 1) / (epsilon * red.t0)
    if ratio <= 1.0:
        return 0
    return math.ceil(math.log(ratio) / math.log(eta))


def step_bound(red: ConvexReduction, epsilon: float, eta: float) -> float:
    """Worst-case total Newton steps: centering plus barrier phases.

    The centering gap bound takes the larger of the two printed forms of the
    ``d log(2 d lam_d^{+-1} (...)^2)`` term.
    """
    d = red.dim
    lam_d = red.lam[-1]
    nb = float(np.linalg.norm(red.b))
    sc2 = red.scale**2
    log_term = max(math.log(2 * d * lam_d * sc2), math.log(2 * d * sc2 / lam_d), 0.0)
    gap = (
        red.t0 * red.scale
        + d * log_term
        + max(math.log(lam_d * sc2 / (2 * nb**2 + 0.5)), 0.0)
    )
    loglog = lambda v: math.log2(max(math.log2(v), 1.0))  # noqa: E731
    centering = 38.0 * gap + loglog(2.0 / epsilon)
    per_phase = 38.0 * (d + 1) * (eta - 1.0 - math.log(eta)) + loglog(2.0 / epsilon)
    return centering + per_phase * phase_count_bound(red, epsilon, eta)


def default_eta(d: int) -> float:
    return 1.0 + 1.0 / math.sqrt(d + 1)


def _path_follow(red: ConvexReduction, epsilon: float, eta: float, tol: float, on_phase=None):
    d = red.dim
    budget = min(step_bound(red, epsilon, eta) + 100, HARD_STEP_CAP)
    state = BarrierState(z=red.y0 - red.B, s=1.0 - float(np.sum(red.y0)), t=red.t0)
    reports = []
    used = 0
    while True:
        rep = _run_inner(red, state, tol, int(budget - used))
        used += rep.steps
        reports.append(rep)
        if on_phase is not None:
            on_phase(state, rep)
        if (d + 1) / state.t <= epsilon / 2:
            break
        state.t *= eta
    return state, reports


def solve_newton(problem, epsilon: float = DEFAULT_EPSILON, eta: float | None = None,
                 trace=None, t0_variant: str = "barrier") -> Solution:
    """Epsilon-optimal solution via barrier path following on the simplex.

    ``trace``, when given, is a list receiving one dict per barrier phase
    (t, steps per stage, final decrement, elapsed time, current value).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    start = time.perf_counter()
    df = as_diagonal(problem)
    setup = time.perf_counter() - start
    if not np.any(df.b):
        from .special import solve_centered_diagonal

        sol = solve_centered_diagonal(df)
        sol.diagnostics["routed_from"] = "newton"
        sol.wall_time_s = time.perf_counter() - start
        return sol
    if eta is None:
        eta = default_eta(df.dim)
    if eta <= 1.0:
        raise ValueError("eta must exceed 1")
    tol = epsilon / 2.0

    hook = None
    if trace is not None:
        t_start = time.perf_counter()

        def hook(state, rep):
            y = state.y(red)
            trace.append({
                "elapsed_s": time.perf_counter() - t_start,
                "t": state.t,
                "steps_damped": rep.damped_steps,
                "steps_quad": rep.quad_steps,
                "local_norm": rep.final_local_norm,
                "value": -convex_objective(y, red),
            })

    red = reduce_to_convex(df, t0_variant)
    state, reports = _path_follow(red, epsilon, eta, tol, hook)
    discarded_violations = 0
    if reports[0].decrease_violations and t0_variant != "max":
        discarded_violations = reports[0].decrease_violations
        logger.warning("damped decrease below 1/38 at t0; retrying with the conservative t0")
        red = reduce_to_convex(df, t0_variant="max")
        if trace is not None:
            trace.clear()
        state, reports = _path_follow(red, epsilon, eta, tol, hook)

    y = state.y(red)
    u = np.sqrt(y) * _sign(df.b)
    steps = sum(r.steps for r in reports)
    sol = solution_from_u(df, u, "newton", iterations=steps)
    sol.wall_time_s = time.perf_counter() - start
    sol.diagnostics.update({
        "transform_time_s": setup,
        "y": y,
        "t_final": state.t,
        "t0": red.t0,
        "t0_variant": red.t0_variant,
        "y0_capped": red.y0_capped,
        "eta": eta,
        "phases": len(reports) - 1,
        "reports": reports,
        "steps_damped": sum(r.damped_steps for r in reports),
        "steps_quad": sum(r.quad_steps for r in reports),
        "step_bound": step_bound(red, epsilon, eta),
        "phase_bound": phase_count_bound(red, epsilon, eta),
        "safeguard_halvings": sum(r.safeguard_halvings for r in reports),
        "decrease_violations": sum(r.decrease_violations for r in reports),
        "contraction_violations": sum(r.contraction_violations for r in reports),
        "stalled_phases": sum(r.stalled for r in reports),
        # violations of an abandoned first attempt, kept so a retry cannot hide them
        "retry_decrease_violations": discarded_violations,
        "B": red.B,
    })
    return sol
