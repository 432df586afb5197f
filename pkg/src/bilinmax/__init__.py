"""Bilinear maximization over an ellipsoidal action set and a confidence ellipsoid."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    BilinearError,
    BilinearInstance,
    DiagonalForm,
    DimensionMismatch,
    Ellipsoid,
    NotPositiveDefinite,
    Solution,
    ZeroVector,
    diagonalize,
    feasibility_residuals,
    objective,
    px_objective,
    theta_from_x,
)
from .maxnorm import solve_maxnorm  # noqa: E402
from .newton import solve_newton  # noqa: E402
from .oracle import alternate_maximization, oracle_solve  # noqa: E402
from .special import (  # noqa: E402
    LpAlignedInstance,
    VertexPolytope,
    solve_centered,
    solve_lp_aligned,
    solve_polytope,
)

__all__ = [
    "BilinearError",
    "BilinearInstance",
    "DiagonalForm",
    "DimensionMismatch",
    "Ellipsoid",
    "LpAlignedInstance",
    "NotPositiveDefinite",
    "Solution",
    "VertexPolytope",
    "ZeroVector",
    "alternate_maximization",
    "diagonalize",
    "feasibility_residuals",
    "objective",
    "oracle_solve",
    "px_objective",
    "solve_centered",
    "solve_lp_aligned",
    "solve_maxnorm",
    "solve_newton",
    "solve_polytope",
    "theta_from_x",
]
