"""Independent reference values, frozen into tests/reference_values.json.

Nothing here imports bilinmax. Values come from 50-digit mpmath root
finding / 1-D maximization or from brute-force grids.

    python3 tests/oracles/derive_reference_values.py
"""

import json
from pathlib import Path

import mpmath as mp
import numpy as np

mp.mp.dps = 50
OUT = Path(__file__).resolve().parent.parent / "reference_values.json"


def worked_value():
    # A = I, W = diag(1, 1/4), c = (1, 0): maximize cos a + sqrt(cos^2 a + 4 sin^2 a)
    f = lambda a: mp.cos(a) + mp.sqrt(mp.cos(a) ** 2 + 4 * mp.sin(a) ** 2)  # noqa: E731
    a_star = mp.findroot(lambda a: mp.diff(f, a), 0.9)
    return f(a_star), (mp.cos(a_star), mp.sin(a_star))


def worked_simplex_minimizer():
    # F(y1) = -sqrt(y1) - sqrt(y1 + 4 (1 - y1)) on [0, 1]
    F = lambda y: -mp.sqrt(y) - mp.sqrt(y + 4 * (1 - y))  # noqa: E731
    y1 = mp.findroot(lambda y: mp.diff(F, y), 0.3)
    return y1, F(y1)


def worked_multiplier(eps):
    # secular equation with the clipped center b+ = (1, eps / (2 sqrt 2))
    lam = [mp.mpf(1), mp.mpf(1) / 4]
    b = [mp.mpf(1), mp.mpf(eps) / (2 * mp.sqrt(2))]
    s = lambda mu: sum(l * bi**2 / (mu * l - 1) ** 2 for l, bi in zip(lam, b)) - 1  # noqa: E731
    lo, hi = mp.mpf(4) + mp.mpf(10) ** -40, mp.mpf(5)
    for _ in range(300):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if s(mid) > 0 else (lo, mid)
    return hi


def lp4_grid_value(n=1_000_000):
    # l_4 sphere in 2-D, c = (1, 1), lambda = (1, 1): value x.c + ||x||_2
    a = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    X = np.column_stack([np.cos(a), np.sin(a)])
    X /= (np.sum(X**4, axis=1) ** 0.25)[:, None]
    vals = X.sum(axis=1) + np.linalg.norm(X, axis=1)
    return float(vals.max())


def eps_linucb_bound(eps=0.2, T=10_000):
    t_eps = 4 * (1 + mp.sqrt(mp.log(T + mp.mpf(T) ** 2))) / (1 - mp.mpf(eps)) ** 2
    return t_eps, (1 - mp.mpf(1) / T) * (T - t_eps) * eps


def main():
    value, x = worked_value()
    y1, fmin = worked_simplex_minimizer()
    t_eps, bound = eps_linucb_bound()
    ref = {
        "worked_value": float(value),
        "worked_value_closed_form": float(4 / mp.sqrt(3)),
        "worked_x": [float(x[0]), float(x[1])],
        "worked_y": [float(y1), float(1 - y1)],
        "worked_min_F": float(fmin),
        "worked_mu_eps_1e-8": float(worked_multiplier(1e-8)),
        "worked_mu_eps_1e-6": float(worked_multiplier(1e-6)),
        "lp4_grid_value": lp4_grid_value(),
        "lp4_closed_form": float(2 * mp.mpf(2) ** (-0.25) + mp.sqrt(2) * mp.mpf(2) ** (-0.25)),
        "eps_linucb_t_eps": float(t_eps),
        "eps_linucb_regret_bound": float(bound),
        "omega_quarter": float(mp.mpf(1) / 4 - mp.log(mp.mpf(5) / 4)),
    }
    OUT.write_text(json.dumps(ref, indent=2) + "\n")
    print(json.dumps(ref, indent=2))


if __name__ == "__main__":
    main()
