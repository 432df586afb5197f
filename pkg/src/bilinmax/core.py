"""Problem representation for bilinear maximization over two ellipsoids.

The problem is

    maximize x^T theta   subject to   ||x||_A <= 1,   ||theta - c||_W <= 1.

Every solver works in the rotated coordinates produced by :func:`diagonalize`:
with ``A^{1/2} W A^{1/2} = U^T diag(lam) U`` and ``b = U A^{-1/2} c``, the
substitution ``u = U A^{1/2} x``, ``phi = U A^{-1/2} theta`` turns the problem
into maximizing ``u^T phi`` over the unit ball and the axis-aligned ellipsoid
``||phi - b||_diag(lam) <= 1``.
"""

from __future__ import annotations

import dataclasses
from typing import Any

import numpy as np

SPD_RELATIVE_TOL = 1e-12
SYMMETRY_TOL = 1e-12


class BilinearError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefinite(BilinearError):
    pass


class DimensionMismatch(BilinearError):
    pass


class ZeroVector(BilinearError):
    pass


def _as_spd(name: str, M) -> np.ndarray:
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if np.max(np.abs(M - M.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NotPositiveDefinite(f"{name} is not symmetric")
    M = 0.5 * (M + M.T)
    w = np.linalg.eigvalsh(M)
    if not np.all(np.isfinite(w)) or w[0] <= SPD_RELATIVE_TOL * max(w[-1], 0.0) or w[-1] <= 0:
        raise NotPositiveDefinite(
            f"{name} is not positive definite (eigenvalue range [{w[0]:.3g}, {w[-1]:.3g}])"
        )
    return M


@dataclasses.dataclass(frozen=True)
class Ellipsoid:
    """The set ``{theta : (theta - center)^T shape (theta - center) <= 1}``."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        shape = _as_spd("W", self.shape)
        center = np.array(self.center, dtype=float).reshape(-1)
        if center.shape[0] != shape.shape[0]:
            raise DimensionMismatch(
                f"center has length {center.shape[0]} but shape is {shape.shape}"
            )
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "center", center)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def norm(self, theta) -> float:
        r = np.asarray(theta, dtype=float) - self.center
        return float(np.sqrt(max(r @ self.shape @ r, 0.0)))


@dataclasses.dataclass(frozen=True)
class BilinearInstance:
    """Action set ``{x : ||x||_A <= 1}`` paired with a confidence ellipsoid."""

    action_shape: np.ndarray
    confidence: Ellipsoid

    def __post_init__(self):
        A = _as_spd("A", self.action_shape)
        if A.shape[0] != self.confidence.dim:
            raise DimensionMismatch(
                f"A is {A.shape} but the confidence ellipsoid has dimension {self.confidence.dim}"
            )
        object.__setattr__(self, "action_shape", A)

    @classmethod
    def from_arrays(cls, A, W, c) -> "BilinearInstance":
        return cls(np.asarray(A, dtype=float), Ellipsoid(np.asarray(c, dtype=float), W))

    @property
    def dim(self) -> int:
        return self.confidence.dim

    @property
    def A(self) -> np.ndarray:
        return self.action_shape

    @property
    def W(self) -> np.ndarray:
        return self.confidence.shape

    @property
    def c(self) -> np.ndarray:
        return self.confidence.center

    def action_norm(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.sqrt(max(x @ self.A @ x, 0.0)))


@dataclasses.dataclass(frozen=True)
class DiagonalForm:
    """Rotated coordinates ``(lam, b)`` plus the maps back to the original space.

    ``basis`` holds U with eigenvectors as rows. ``None`` for ``basis`` or the
    square roots means the identity, which keeps pre-diagonalized inputs O(d).
    """

    lam: np.ndarray
    b: np.ndarray
    basis: np.ndarray | None = None
    sqrt_a: np.ndarray | None = None
    inv_sqrt_a: np.ndarray | None = None

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if lam.shape != b.shape:
            raise DimensionMismatch(f"lambda has length {lam.size}, b has length {b.size}")
        if lam.size == 0:
            raise DimensionMismatch("empty instance")
        if not np.all(np.isfinite(lam)) or lam[-1] <= SPD_RELATIVE_TOL * lam[0] or lam[-1] <= 0:
            raise NotPositiveDefinite("lambda must be positive with lam_d > 1e-12 lam_1")
        if np.any(np.diff(lam) > 0):
            raise ValueError("lambda must be sorted in descending order")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_spectrum(cls, lam, b) -> "DiagonalForm":
        """Form for ``A = I``, ``W = diag(lam)``, ``c = b``; sorts if needed."""
        lam = np.asarray(lam, dtype=float).reshape(-1)
        b = np.asarray(b, dtype=float).reshape(-1)
        if lam.shape != b.shape:
            raise DimensionMismatch(f"lambda has length {lam.size}, b has length {b.size}")
        if np.all(np.diff(lam) <= 0):
            return cls(lam, b)
        order = np.argsort(-lam, kind="stable")
        basis = np.eye(lam.size)[order]
        return cls(lam[order], b[order], basis=basis)

    @property
    def dim(self) -> int:
        return self.lam.shape[0]

    @property
    def is_identity(self) -> bool:
        return self.basis is None and self.sqrt_a is None

    def _rotate_back(self, v: np.ndarray) -> np.ndarray:
        return v if self.basis is None else self.basis.T @ v

    def x_from_u(self, u) -> np.ndarray:
        """``x = A^{-1/2} U^T u``."""
        v = self._rotate_back(np.asarray(u, dtype=float))
        return v if self.inv_sqrt_a is None else self.inv_sqrt_a @ v

    def theta_from_phi(self, phi) -> np.ndarray:
        """``theta = A^{1/2} U^T phi``."""
        v = self._rotate_back(np.asarray(phi, dtype=float))
        return v if self.sqrt_a is None else self.sqrt_a @ v

    @property
    def center(self) -> np.ndarray:
        return self.theta_from_phi(self.b)

    def best_phi(self, u) -> np.ndarray:
        """Maximizer of ``u^T phi`` over ``||phi - b||_lam <= 1``."""
        u = np.asarray(u, dtype=float)
        scaled = u / self.lam
        nrm = np.sqrt(u @ scaled)
        if nrm == 0.0:
            raise ZeroVector("cannot pair the zero action with a confidence point")
        return self.b + scaled / nrm

    def pair_value(self, u) -> float:
        """``u^T b + ||u||_{lam^{-1}}``: the best value attainable with action u."""
        u = np.asarray(u, dtype=float)
        return float(u @ self.b + np.sqrt(u @ (u / self.lam)))

    def ellipsoid_norm(self, phi) -> float:
        r = np.asarray(phi, dtype=float) - self.b
        return float(np.sqrt(r @ (self.lam * r)))


@dataclasses.dataclass
class Solution:
    """Feasible point of the bilinear problem with run diagnostics."""

    x: np.ndarray
    theta: np.ndarray
    value: float
    solver: str
    multiplier: float | None = None
    iterations: int = 0
    wall_time_s: float = 0.0
    diagnostics: dict[str, Any] = dataclasses.field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "value": self.value,
            "x": self.x.tolist(),
            "theta": self.theta.tolist(),
            "mu": self.multiplier,
            "iterations": self.iterations,
            "wall_time_s": self.wall_time_s,
            "solver": self.solver,
        }
        return out


def diagonalize(instance: BilinearInstance) -> DiagonalForm:
    """Rotate an instance into ``(lam, b)`` coordinates.

    One symmetric eigendecomposition of A provides both ``A^{1/2}`` and
    ``A^{-1/2}``; a second one diagonalizes ``A^{1/2} W A^{1/2}``.
    """
    A, W, c = instance.A, instance.W, instance.c
    d = instance.dim
    if np.array_equal(A, np.eye(d)):
        sqrt_a = inv_sqrt_a = None
        M = W
    else:
        w, V = np.linalg.eigh(A)
        sqrt_a = (V * np.sqrt(w)) @ V.T
        inv_sqrt_a = (V / np.sqrt(w)) @ V.T
        sqrt_a = 0.5 * (sqrt_a + sqrt_a.T)
        inv_sqrt_a = 0.5 * (inv_sqrt_a + inv_sqrt_a.T)
        M = sqrt_a @ W @ sqrt_a
        M = 0.5 * (M + M.T)
    lam, V = np.linalg.eigh(M)
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    U = V[:, order].T
    if lam[-1] <= SPD_RELATIVE_TOL * lam[0]:
        raise NotPositiveDefinite("A^{1/2} W A^{1/2} is numerically singular")
    b = U @ (c if inv_sqrt_a is None else inv_sqrt_a @ c)
    return DiagonalForm(lam, b, basis=U, sqrt_a=sqrt_a, inv_sqrt_a=inv_sqrt_a)


def as_diagonal(problem) -> DiagonalForm:
    if isinstance(problem, DiagonalForm):
        return problem
    if isinstance(problem, BilinearInstance):
        return diagonalize(problem)
    raise TypeError(f"expected BilinearInstance or DiagonalForm, got {type(problem).__name__}")


def objective(x, theta) -> float:
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.shape != theta.shape:
        raise DimensionMismatch(f"x has shape {x.shape}, theta has shape {theta.shape}")
    return float(x @ theta)


def _winv_norm(x: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, float]:
    winv_x = np.linalg.solve(W, x)
    return winv_x, float(np.sqrt(max(x @ winv_x, 0.0)))


def theta_from_x(x, instance: BilinearInstance) -> np.ndarray:
    """Best confidence point for a fixed action: ``c + W^{-1} x / ||x||_{W^{-1}}``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.dim,):
        raise DimensionMismatch(f"x has shape {x.shape}, expected ({instance.dim},)")
    if not np.any(x):
        raise ZeroVector("theta_from_x is undefined for x = 0")
    winv_x, nrm = _winv_norm(x, instance.W)
    return instance.c + winv_x / nrm


def px_objective(x, instance: BilinearInstance) -> float:
    """``x^T c + ||x||_{W^{-1}}``, the objective with theta maximized out."""
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.dim,):
        raise DimensionMismatch(f"x has shape {x.shape}, expected ({instance.dim},)")
    if not np.any(x):
        return 0.0
    _, nrm = _winv_norm(x, instance.W)
    return float(x @ instance.c + nrm)


def feasibility_residuals(solution: Solution, instance: BilinearInstance) -> tuple[float, float]:
    """Return ``(||x||_A, ||theta - c||_W)`` for a solution of ``instance``."""
    return instance.action_norm(solution.x), instance.confidence.norm(solution.theta)


def solution_from_u(df: DiagonalForm, u: np.ndarray, solver: str, **kwargs) -> Solution:
    """Map a rotated action u back and pair it with its best confidence point."""
    phi = df.best_phi(u)
    x = df.x_from_u(u)
    theta = df.theta_from_phi(phi)
    sol = Solution(x=x, theta=theta, value=float(x @ theta), solver=solver, **kwargs)
    sol.diagnostics.setdefault("action_norm", float(np.linalg.norm(u)))
    sol.diagnostics.setdefault("confidence_norm", df.ellipsoid_norm(phi))
    return sol
