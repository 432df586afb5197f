"""Closed forms and reductions for special action sets.

* centered ellipsoids (c = 0): one eigenvector problem,
* polytopes given by their vertex list: exhaustive search over vertices,
* l_p balls (p >= 2) against an axis-aligned ellipsoid: a convex program on
  the simplex, solved by barrier path following.
"""

from __future__ import annotations

import dataclasses
import math
import time
from collections.abc import Sequence

import numpy as np

from .core import (
    BilinearError,
    BilinearInstance,
    DimensionMismatch,
    DiagonalForm,
    Ellipsoid,
    Solution,
    diagonalize,
    solution_from_u,
    theta_from_x,
)
from .newton import HessianFactors


class UnsupportedP(BilinearError):
    pass


def solve_centered_diagonal(df: DiagonalForm) -> Solution:
    """Optimum when the confidence ellipsoid is centered (b ignored).

    The value is ``lam_d^{-1/2}``, attained by the weakest eigendirection.
    """
    start = time.perf_counter()
    u = np.zeros(df.dim)
    u[-1] = 1.0
    centered = dataclasses.replace(df, b=np.zeros(df.dim))
    sol = solution_from_u(centered, u, "centered")
    sol.wall_time_s = time.perf_counter() - start
    return sol


def solve_centered(A, W) -> Solution:
    """Centered ellipsoids: ``x = A^{-1/2} psi`` for the top eigenvector psi.

    psi is taken from the symmetric matrix ``A^{1/2} W A^{1/2}`` (smallest
    eigenvalue), which is similar to ``WA``; the value is the largest
    eigenvalue of ``(WA)^{-1/2}``.
    """
    start = time.perf_counter()
    W = np.asarray(W, dtype=float)
    inst = BilinearInstance.from_arrays(A, W, np.zeros(W.shape[0]))
    sol = solve_centered_diagonal(diagonalize(inst))
    sol.wall_time_s = time.perf_counter() - start
    return sol


@dataclasses.dataclass(frozen=True)
class VertexPolytope:
    vertices: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if V.shape[0] == 0 or V.size == 0:
            raise ValueError("a polytope needs at least one vertex")
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]


def solve_polytope(poly: VertexPolytope | Sequence, confidence: Ellipsoid) -> Solution:
    """Exhaustive search over vertices; ties go to the lowest index."""
    start = time.perf_counter()
    if not isinstance(poly, VertexPolytope):
        poly = VertexPolytope(poly)
    if poly.dim != confidence.dim:
        raise DimensionMismatch(f"vertices have dimension {poly.dim}, ellipsoid {confidence.dim}")
    V = poly.vertices
    winv_V = np.linalg.solve(confidence.shape, V.T).T
    scores = V @ confidence.center + np.sqrt(np.maximum(np.sum(V * winv_V, axis=1), 0.0))
    best = int(np.argmax(scores))
    x = V[best].copy()
    if np.any(x):
        inst = BilinearInstance(np.eye(poly.dim), confidence)
        theta = theta_from_x(x, inst)
    else:
        theta = confidence.center.copy()
    sol = Solution(x=x, theta=theta, value=float(x @ theta), solver="polytope",
                   iterations=V.shape[0])
    sol.diagnostics["vertex_index"] = best
    sol.wall_time_s = time.perf_counter() - start
    return sol


@dataclasses.dataclass(frozen=True)
class LpAlignedInstance:
    """l_p unit ball against ``{theta : ||theta - c||_diag(lam) <= 1}``."""

    p: float
    c: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        if not self.p >= 2:
            raise UnsupportedP(f"p = {self.p} < 2: the simplex program is not convex")
        c = np.asarray(self.c, dtype=float).reshape(-1)
        lam = np.asarray(self.lam, dtype=float).reshape(-1)
        if c.shape != lam.shape:
            raise DimensionMismatch(f"c has length {c.size}, lambda has length {lam.size}")
        if np.any(lam <= 0):
            raise ValueError("lambda must be positive")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "lam", lam)

    @property
    def dim(self) -> int:
        return self.c.shape[0]


def lp_objective(y, inst: LpAlignedInstance):
    """Value and gradient of ``H(y) = -sum y_i^{1/p}|c_i| - sqrt(sum y_i^{2/p}/lam_i)``."""
    y = np.asarray(y, dtype=float)
    p = inst.p
    ac = np.abs(inst.c)
    yq = y ** (1.0 / p)
    G = float(np.sum(yq**2 / inst.lam))
    sqG = math.sqrt(G)
    value = -float(ac @ yq) - sqG
    dG = (2.0 / p) * y ** (2.0 / p - 1.0) / inst.lam
    grad = -(ac / p) * y ** (1.0 / p - 1.0) - dG / (2.0 * sqG)
    return value, grad


def _lp_hessian(y, inst: LpAlignedInstance):
    """Hessian of H as ``diag(D) + rho v v^T``; returns (D, rho, v)."""
    p = inst.p
    q, r = 1.0 / p, 2.0 / p
    ac = np.abs(inst.c)
    G = float(np.sum(y**r / inst.lam))
    sqG = math.sqrt(G)
    D = ac * q * (1.0 - q) * y ** (q - 2.0) + r * (1.0 - r) * y ** (r - 2.0) / (2.0 * inst.lam * sqG)
    v = r * y ** (r - 1.0) / inst.lam
    return D, 1.0 / (4.0 * G * sqG), v


def lp_hessian_matvec(y, h, inst: LpAlignedInstance) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    D, rho, v = _lp_hessian(y, inst)
    return D * h + rho * v * (v @ h)


def _lp_barrier(y, s, t, inst):
    val, grad = lp_objective(y, inst)
    D, rho, v = _lp_hessian(y, inst)
    fval = t * val - float(np.sum(np.log(y))) - math.log(s)
    fgrad = t * grad - 1.0 / y + 1.0 / s
    return fval, fgrad, HessianFactors(t * D + 1.0 / y**2, t * rho, v, 1.0 / s**2)


def _lp_center(y, s, t, inst, tol, max_steps):
    """Minimize ``t H - sum log y - log(1 - sum y)`` from an interior point.

    Armijo backtracking while the Newton decrement is >= 1/4, full
    (interior-clipped) steps below that. Returns (y, s, steps).
    """
    fval, grad, hess = _lp_barrier(y, s, t, inst)
    steps = 0
    best, since_best = math.inf, 0
    while steps < max_steps:
        h_grad, h_sum = hess.solve(grad)
        lam2 = max(float(grad @ h_grad), 0.0)
        if lam2 <= tol:
            break
        lf = math.sqrt(lam2)
        if lf < 0.25:
            # decrement stuck at its rounding floor
            if lf < best * (1.0 - 1e-3):
                best, since_best = lf, 0
            else:
                since_best += 1
                if since_best >= 6:
                    break
        alpha = 1.0
        while not (s + alpha * h_sum > 0.0 and np.all(y - alpha * h_grad > 0.0)):
            alpha *= 0.5
        if lf >= 0.25:
            while alpha > 1e-14:
                f_new = _lp_barrier(y - alpha * h_grad, s + alpha * h_sum, t, inst)[0]
                if f_new <= fval - 0.25 * alpha * lam2:
                    break
                alpha *= 0.5
        y, s = y - alpha * h_grad, s + alpha * h_sum
        fval, grad, hess = _lp_barrier(y, s, t, inst)
        steps += 1
    return y, s, steps


def solve_lp_aligned(inst: LpAlignedInstance, epsilon: float = 1e-8,
                     max_steps: int = 100_000) -> Solution:
    """Minimize H over the simplex by log-barrier path following.

    H is convex for p >= 2 and its Hessian is diagonal plus rank one, so
    every Newton system is O(d). The barrier weight grows by
    ``1 + 1/sqrt(d+1)`` until ``(d+1)/t <= epsilon/2``; each centering stops
    at squared decrement ``epsilon/2``.
    """
    start = time.perf_counter()
    d, p = inst.dim, inst.p
    steps = 0
    if d == 1:
        y = np.ones(1)
    else:
        y = np.full(d, 0.5 / d)
        s = 0.5
        t = 1.0
        eta = 1.0 + 1.0 / math.sqrt(d + 1)
        while True:
            y, s, n = _lp_center(y, s, t, inst, epsilon / 2.0, max_steps - steps)
            steps += n
            if (d + 1) / t <= epsilon / 2:
                break
            t *= eta
    x = y ** (1.0 / p) * np.where(inst.c < 0, -1.0, 1.0)
    scaled = x / inst.lam
    theta = inst.c + scaled / math.sqrt(float(x @ scaled))
    sol = Solution(x=x, theta=theta, value=float(x @ theta), solver="lp", iterations=steps)
    sol.diagnostics["y"] = y
    sol.diagnostics["action_norm"] = float(np.sum(np.abs(x) ** p) ** (1.0 / p))
    sol.wall_time_s = time.perf_counter() - start
    return sol


def lp_px_objective(x, inst: LpAlignedInstance) -> float:
    """``x^T c + ||x||_{diag(lam)^{-1}}``."""
    x = np.asarray(x, dtype=float)
    return float(x @ inst.c + np.sqrt(x @ (x / inst.lam)))

