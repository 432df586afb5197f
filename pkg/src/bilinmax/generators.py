"""Seeded synthetic spectra and centers, and instances harvested from bandit runs.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence((seed, stream))``
so that the spectrum and the center of one seed use independent streams.
"""

from __future__ import annotations

import csv
import dataclasses
from collections.abc import Iterable, Sequence

import numpy as np

from .core import BilinearError, BilinearInstance, DiagonalForm

STREAM_SPECTRUM = 1
STREAM_CENTER = 2
STREAM_RANDOM_SPD = 3
STREAM_BANDIT = 4

DISTRIBUTIONS = ("stacked", "rstacked", "oexp")


class TimeOutOfRange(BilinearError):
    pass


def make_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream)])))


@dataclasses.dataclass(frozen=True)
class SpectrumSpec:
    kind: str
    dim: int
    kappa: float
    a: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.kind!r}; expected one of {DISTRIBUTIONS}")
        if self.a <= 0 or self.kappa < 1 or self.dim < 1:
            raise ValueError("need a > 0, kappa >= 1 and d >= 1")


def generate_spectrum(spec: SpectrumSpec) -> np.ndarray:
    """Descending positive eigenvalues.

    stacked:  ``(a kappa, a, ..., a)``
    rstacked: ``a kappa`` followed by ``a * sort(U)`` descending, U uniform on (0, 1)
    oexp:     ``kappa * sort(E) / 2`` descending, E standard exponential
    """
    d = spec.dim
    rng = make_rng(spec.seed, STREAM_SPECTRUM)
    if spec.kind == "stacked":
        lam = np.full(d, spec.a)
        lam[0] = spec.a * spec.kappa
    elif spec.kind == "rstacked":
        rest = np.sort(_open_uniform(rng, d - 1))[::-1]
        lam = np.concatenate([[spec.a * spec.kappa], spec.a * rest])
    else:
        E = rng.exponential(1.0, size=d)
        lam = np.sort(spec.kappa * E / 2.0)[::-1]
    return lam


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.random(n)
    # random() is on [0, 1); reject exact zeros so entries stay positive
    while np.any(u == 0.0):
        u[u == 0.0] = rng.random(int(np.sum(u == 0.0)))
    return u


def generate_center(d: int, seed: int) -> np.ndarray:
    """``b_1 = 1`` and ``b_i = 0.1 U_i`` for i >= 2."""
    if d < 1:
        raise ValueError("d must be positive")
    rng = make_rng(seed, STREAM_CENTER)
    return np.concatenate([[1.0], 0.1 * _open_uniform(rng, d - 1)])


def generate_instance(kind: str, d: int, kappa: float, a: float = 1.0, seed: int = 0) -> DiagonalForm:
    """Pre-diagonalized instance (A = I, W = diag(lambda), c = b)."""
    lam = generate_spectrum(SpectrumSpec(kind, d, kappa, a, seed))
    return DiagonalForm(lam, generate_center(d, seed))


def random_spd(d: int, rng: np.random.Generator, kappa: float = 10.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues log-uniform on ``[1, kappa]`` and random basis."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    w = np.exp(rng.uniform(0.0, np.log(kappa), size=d))
    M = (Q * w) @ Q.T
    return 0.5 * (M + M.T)


def random_instance(d: int, seed: int, kappa: float = 10.0, center_scale: float = 1.0) -> BilinearInstance:
    rng = make_rng(seed, STREAM_RANDOM_SPD)
    A = random_spd(d, rng, kappa)
    W = random_spd(d, rng, kappa)
    c = center_scale * rng.standard_normal(d)
    return BilinearInstance.from_arrays(A, W, c)


def instances_from_bandit_run(trace, times: Iterable[int]) -> list[BilinearInstance]:
    """One instance ``(A = I, W = W_t, c = zeta_hat_t)`` per requested round.

    ``trace`` must have recorded snapshots for those rounds (see
    ``run_optimistic(..., snapshot_times=...)``).
    """
    out = []
    for t in times:
        if t not in trace.snapshots:
            raise TimeOutOfRange(f"round {t} was not snapshotted (have {sorted(trace.snapshots)})")
        zeta_hat, W = trace.snapshots[t]
        out.append(BilinearInstance.from_arrays(np.eye(W.shape[0]), W, zeta_hat))
    return out


def spectrum_histograms(instances: Sequence[BilinearInstance], times: Sequence[int], path,
                        bins: int = 20, header_comment: str | None = None) -> None:
    """Histogram CSV of eigenvalues of W_t and of |b| entries in its eigenbasis.

    Columns: ``t, quantity, bin_left, bin_right, count``. Bins are log-spaced
    over the range of each quantity at each t.
    """
    from .core import diagonalize

    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "quantity", "bin_left", "bin_right", "count"])
        for t, inst in zip(times, instances):
            df = diagonalize(inst)
            for name, vals in (("eigenvalue", df.lam), ("abs_b", np.abs(df.b))):
                pos = vals[vals > 0]
                if pos.size == 0:
                    continue
                logs = np.log10(pos)
                lo, hi = logs.min(), logs.max()
                if hi - lo < 1e-12:
                    hi = lo + 1.0
                # bin in log space so the extremes land inside the outer bins
                counts, log_edges = np.histogram(logs, bins=bins, range=(lo, hi))
                edges = 10.0**log_edges
                for left, right, n in zip(edges[:-1], edges[1:], counts):
                    writer.writerow([t, name, repr(float(left)), repr(float(right)), int(n)])
