"""JSON instance/solution formats and CSV output with a metadata comment line.

Instance files:

* full: ``{"d": 3, "A": [[...]] | "identity", "W": [[...]], "c": [...]}``
* pre-diagonalized: ``{"lambda": [...], "b": [...]}`` (A = I, U = I)
* l_p ball: ``{"p": 3, "c": [...], "lambda": [...]}``
* polytope: ``{"vertices": [[...], ...], "W": [[...]], "c": [...]}``
"""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np

from . import __version__
from .core import BilinearError, BilinearInstance, DiagonalForm, Ellipsoid, Solution
from .special import LpAlignedInstance, VertexPolytope


class InstanceFormatError(BilinearError):
    pass


def _vector(obj, key, d=None) -> np.ndarray:
    if key not in obj:
        raise InstanceFormatError(f"missing field {key!r}")
    try:
        v = np.asarray(obj[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"field {key!r} is not numeric: {exc}") from None
    if v.ndim != 1 or (d is not None and v.shape[0] != d):
        raise InstanceFormatError(f"field {key!r} must be a vector of length {d or 'd'}")
    if not np.all(np.isfinite(v)):
        raise InstanceFormatError(f"field {key!r} has non-finite entries")
    return v


def _matrix(obj, key, d) -> np.ndarray:
    if key not in obj:
        raise InstanceFormatError(f"missing field {key!r}")
    if obj[key] == "identity":
        return np.eye(d)
    try:
        M = np.asarray(obj[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"field {key!r} is not numeric: {exc}") from None
    if M.shape != (d, d):
        raise InstanceFormatError(f"field {key!r} must be {d}x{d}, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InstanceFormatError(f"field {key!r} has non-finite entries")
    return M


def parse_problem(obj: Mapping):
    """Build the problem object described by a decoded JSON mapping.

    Returns a BilinearInstance, DiagonalForm, LpAlignedInstance, or a
    ``(VertexPolytope, Ellipsoid)`` pair.
    """
    if not isinstance(obj, Mapping):
        raise InstanceFormatError("instance must be a JSON object")
    if "vertices" in obj:
        c = _vector(obj, "c")
        return VertexPolytope(np.asarray(obj["vertices"], dtype=float)), Ellipsoid(c, _matrix(obj, "W", c.size))
    if "p" in obj:
        lam = _vector(obj, "lambda")
        return LpAlignedInstance(float(obj["p"]), _vector(obj, "c", lam.size), lam)
    if "lambda" in obj:
        lam = _vector(obj, "lambda")
        return DiagonalForm.from_spectrum(lam, _vector(obj, "b", lam.size))
    c = _vector(obj, "c")
    d = int(obj.get("d", c.size))
    if d != c.size:
        raise InstanceFormatError(f"d = {d} but c has length {c.size}")
    return BilinearInstance.from_arrays(_matrix(obj, "A", d), _matrix(obj, "W", d), c)


def load_problem(path: str | Path):
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: invalid JSON ({exc})") from None
    return parse_problem(obj)


def diagonal_to_json(df: DiagonalForm) -> dict:
    return {"lambda": df.lam.tolist(), "b": df.b.tolist()}


def instance_to_json(inst: BilinearInstance) -> dict:
    return {"d": inst.dim, "A": inst.A.tolist(), "W": inst.W.tolist(), "c": inst.c.tolist()}


def solution_to_json(sol: Solution, **extra) -> dict:
    out = sol.to_dict()
    out.update(extra)
    return out


def fmt(v) -> str:
    """17 significant digits for floats (round-trip safe); ints and strings as is."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else format(v, ".17g")
    return "" if v is None else str(v)


def metadata_line(params: Mapping) -> str:
    items = " ".join(f"{k}={fmt(v) if not isinstance(v, (list, tuple)) else ','.join(map(fmt, v))}"
                     for k, v in params.items())
    return f"# bilinmax {__version__} {items}".rstrip()


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], params: Mapping) -> Path:
    """CSV with a leading ``# bilinmax <version> key=value ...`` comment line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(metadata_line(params) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[dict, list[dict]]:
    """Return (metadata, rows); the metadata values are left as strings."""
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        meta = {}
        for tok in first.lstrip("#").split()[2:]:
            k, _, v = tok.partition("=")
            meta[k] = v
        rows = list(csv.DictReader(fh))
    return meta, rows
