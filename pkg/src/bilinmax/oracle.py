"""Reference solvers for testing: alternate maximization with restarts, and angular grids.

Nothing here relies on the spectral reduction used by the main solvers, so
agreement is an independent check.
"""

from __future__ import annotations

import logging
import math
import time

import numpy as np

from .core import BilinearInstance, Solution, ZeroVector, px_objective

logger = logging.getLogger(__name__)

N_RESTARTS = 64
MAX_ALTERNATIONS = 20_000
GRID_2D = 10_000
GRID_3D = 400


def _best_x(theta: np.ndarray, A_inv: np.ndarray) -> np.ndarray:
    """Row-wise ``argmax_{||x||_A <= 1} x^T theta = A^{-1} theta / ||theta||_{A^{-1}}``."""
    z = theta @ A_inv
    return z / np.sqrt(np.sum(z * theta, axis=-1, keepdims=True))


def _best_theta(x: np.ndarray, c: np.ndarray, W_inv: np.ndarray) -> np.ndarray:
    z = x @ W_inv
    return c + z / np.sqrt(np.sum(z * x, axis=-1, keepdims=True))


def alternate_maximization(instance: BilinearInstance, theta0, epsilon: float = 1e-10,
                           max_iter: int = MAX_ALTERNATIONS, history: list | None = None) -> Solution:
    """Exact best responses in x then theta until theta moves by at most epsilon.

    Converges to a local maximum only. ``history`` receives the objective
    after every full alternation.
    """
    theta = np.asarray(theta0, dtype=float).reshape(1, -1)
    if not np.any(theta):
        raise ZeroVector("theta0 must be nonzero")
    start = time.perf_counter()
    A_inv = np.linalg.inv(instance.A)
    W_inv = np.linalg.inv(instance.W)
    c = instance.c
    it = 0
    for it in range(1, max_iter + 1):
        x = _best_x(theta, A_inv)
        new = _best_theta(x, c, W_inv)
        if history is not None:
            history.append(float(x[0] @ new[0]))
        moved = float(np.linalg.norm(new - theta))
        theta = new
        if moved <= epsilon:
            break
    x = _best_x(theta, A_inv)[0]
    theta = _best_theta(x[None, :], c, W_inv)[0]
    sol = Solution(x=x, theta=theta, value=float(x @ theta), solver="alternate", iterations=it)
    sol.wall_time_s = time.perf_counter() - start
    return sol


def multistart(instance: BilinearInstance, epsilon: float = 1e-10, restarts: int = N_RESTARTS,
               seed: int = 0, max_iter: int = MAX_ALTERNATIONS) -> tuple[np.ndarray, np.ndarray]:
    """All restarts at once; returns (values, x rows) indexed by restart.

    Starting points are ``c + W^{-1/2} g`` with g standard normal.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 17])))
    d = instance.dim
    A_inv = np.linalg.inv(instance.A)
    W_inv = np.linalg.inv(instance.W)
    w, V = np.linalg.eigh(instance.W)
    W_inv_sqrt = (V / np.sqrt(w)) @ V.T
    c = instance.c
    theta = c + rng.standard_normal((restarts, d)) @ W_inv_sqrt
    # a zero start has no best response; nudge it
    zero = ~np.any(theta, axis=1)
    theta[zero] = c + 1e-3
    active = np.ones(restarts, dtype=bool)
    for _ in range(max_iter):
        x = _best_x(theta[active], A_inv)
        new = _best_theta(x, c, W_inv)
        moved = np.linalg.norm(new - theta[active], axis=1)
        theta[active] = new
        idx = np.flatnonzero(active)
        active[idx[moved <= epsilon]] = False
        if not active.any():
            break
    x = _best_x(theta, A_inv)
    th = _best_theta(x, c, W_inv)
    return np.sum(x * th, axis=1), x


def _sphere_grid(d: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        a = np.linspace(0.0, 2.0 * np.pi, GRID_2D, endpoint=False)
        return np.column_stack([np.cos(a), np.sin(a)])
    if d == 3:
        polar = np.linspace(0.0, np.pi, GRID_3D)
        azim = np.linspace(0.0, 2.0 * np.pi, GRID_3D, endpoint=False)
        P, Z = np.meshgrid(polar, azim, indexing="ij")
        return np.column_stack([
            (np.sin(P) * np.cos(Z)).ravel(), (np.sin(P) * np.sin(Z)).ravel(), np.cos(P).ravel()
        ])
    raise ValueError("grid search only for d <= 3")


def grid_search(instance: BilinearInstance) -> tuple[float, np.ndarray]:
    """Best ``x^T c + ||x||_{W^{-1}}`` over a grid on the A-unit sphere."""
    w, V = np.linalg.eigh(instance.A)
    A_inv_sqrt = (V / np.sqrt(w)) @ V.T
    X = _sphere_grid(instance.dim) @ A_inv_sqrt
    W_inv = np.linalg.inv(instance.W)
    scores = X @ instance.c + np.sqrt(np.sum((X @ W_inv) * X, axis=1))
    k = int(np.argmax(scores))
    return float(scores[k]), X[k]


def oracle_solve(instance: BilinearInstance, epsilon: float = 1e-10, seed: int = 0,
                 restarts: int = N_RESTARTS) -> Solution:
    """Best of seeded multistart and, for d <= 3, a polished grid search."""
    start = time.perf_counter()
    d = instance.dim
    if d > 10:
        logger.warning("oracle_solve at d = %d: multistart only, no global guarantee", d)
    values, X = multistart(instance, epsilon, restarts, seed)
    k = int(np.argmax(values))
    best_x, best_val, source = X[k], float(values[k]), "multistart"
    grid_val = math.nan
    if d <= 3:
        grid_val, gx = grid_search(instance)
        W_inv = np.linalg.inv(instance.W)
        polished = alternate_maximization(instance, _best_theta(gx[None, :], instance.c, W_inv)[0],
                                          epsilon)
        for cand_x, cand_val, name in ((gx, grid_val, "grid"),
                                       (polished.x, polished.value, "grid+polish")):
            if cand_val > best_val:
                best_x, best_val, source = cand_x, cand_val, name
    W_inv = np.linalg.inv(instance.W)
    theta = _best_theta(best_x[None, :], instance.c, W_inv)[0]
    sol = Solution(x=best_x, theta=theta, value=float(best_x @ theta), solver="oracle",
                   iterations=restarts)
    sol.diagnostics.update({"source": source, "restart_values": values, "grid_value": grid_val,
                            "px_value": px_objective(best_x, instance)})
    sol.wall_time_s = time.perf_counter() - start
    return sol
