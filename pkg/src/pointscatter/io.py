"""File formats: potentials and far-field datasets (JSON), field grids (CSV).

Complex numbers are stored as ``[re, im]``; a bare real is accepted on input.
Floats are written with ``repr`` precision so write/read round trips exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, ScatterError
from .forward import solve_charges, total_field
from .model import (
    ON_SHELL_RTOL,
    ExponentialSum,
    Potential,
    Scatterer,
    SourceTerm,
    validate_potential,
)

GRID_HEADER = "x1,x2,re_psi,im_psi,abs_psi"
SINGULAR_RADIUS = 1e-9


@dataclass(frozen=True)
class PotentialFile:
    """Contents of a potential file. ``kappa`` comes from the file or from ``|k|``."""

    potential: Potential
    kappa: float | None = None
    k: np.ndarray | None = None


@dataclass(frozen=True)
class FarFieldDataset:
    """Exponential-sum representation of ``theta -> f(k, kappa theta)``.

    ``probes`` optionally holds further ``(k, ExponentialSum)`` pairs for the
    same potential at other incident vectors.
    """

    d: int
    kappa: float
    k: np.ndarray | None
    terms: ExponentialSum
    probes: tuple = ()


# ---------------------------------------------------------------------------
# parsing helpers


def _load_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{where}: missing field '{key}'")
    return obj[key]


def _real(v, where) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{where}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ParseError(f"{where}: non-finite value {v!r}")
    return v


def parse_complex(v, where="value") -> complex:
    """``[re, im]`` or a bare real number."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ParseError(f"{where}: complex numbers are [re, im], got {v!r}")
        return complex(_real(v[0], where + "[0]"), _real(v[1], where + "[1]"))
    return complex(_real(v, where), 0.0)


def _vector(v, d, where) -> np.ndarray:
    if not isinstance(v, (list, tuple)):
        raise ParseError(f"{where}: expected a list of {d} numbers, got {v!r}")
    if d is not None and len(v) != d:
        raise ParseError(f"{where}: expected {d} components, got {len(v)}")
    return np.array([_real(x, f"{where}[{i}]") for i, x in enumerate(v)])


def _dimension(data, where):
    d = _require(data, "dimension", where)
    if isinstance(d, bool) or not isinstance(d, int) or d not in (1, 2, 3):
        raise ParseError(f"{where}.dimension: expected 1, 2 or 3, got {d!r}")
    return d


def _kappa_and_k(data, d, where):
    kappa = data.get("kappa")
    k = data.get("k")
    if kappa is not None:
        kappa = _real(kappa, f"{where}.kappa")
        if kappa <= 0:
            raise ParseError(f"{where}.kappa: must be positive, got {kappa!r}")
    if k is not None:
        k = _vector(k, d, f"{where}.k")
        norm = float(np.linalg.norm(k))
        if kappa is None:
            kappa = norm
        elif abs(norm - kappa) > ON_SHELL_RTOL * kappa:
            raise ParseError(f"{where}: |k| = {norm!r} disagrees with kappa = {kappa!r}")
    return kappa, k


def _complex_out(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _dump(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


# ---------------------------------------------------------------------------
# potentials


def parse_potential(data, where="potential") -> PotentialFile:
    d = _dimension(data, where)
    kappa, k = _kappa_and_k(data, d, where)
    raw = _require(data, "scatterers", where)
    if not isinstance(raw, list):
        raise ParseError(f"{where}.scatterers: expected a list")
    items = []
    for i, entry in enumerate(raw):
        at = f"{where}.scatterers[{i}]"
        y = _vector(_require(entry, "y", at), d, at + ".y")
        alpha = parse_complex(_require(entry, "alpha", at), at + ".alpha")
        items.append(Scatterer(y, alpha))
    p = Potential(d, tuple(items))
    try:
        validate_potential(p)
    except ScatterError as exc:
        raise ParseError(f"{where}: {exc}") from None
    return PotentialFile(p, kappa, k)


def read_potential(path) -> PotentialFile:
    return parse_potential(_load_json(path), str(path))


def potential_to_dict(p: Potential, kappa=None, k=None) -> dict:
    out = {"dimension": p.d}
    if kappa is not None:
        out["kappa"] = float(kappa)
    if k is not None:
        out["k"] = [float(v) for v in np.asarray(k).ravel()]
    out["scatterers"] = [
        {"y": [float(v) for v in s.y], "alpha": _complex_out(s.alpha)} for s in p.scatterers
    ]
    return out


def write_potential(path, p: Potential, kappa=None, k=None):
    _dump(path, potential_to_dict(p, kappa, k))


# ---------------------------------------------------------------------------
# far-field datasets and sources


def _terms(raw, d, where, coefficient="c"):
    if not isinstance(raw, list):
        raise ParseError(f"{where}: expected a list")
    cs, ys = [], []
    for i, entry in enumerate(raw):
        at = f"{where}[{i}]"
        cs.append(parse_complex(_require(entry, coefficient, at), f"{at}.{coefficient}"))
        ys.append(_vector(_require(entry, "y", at), d, at + ".y"))
    return cs, ys


def parse_dataset(data, where="dataset") -> FarFieldDataset:
    d = _dimension(data, where)
    kappa, k = _kappa_and_k(data, d, where)
    if kappa is None:
        raise ParseError(f"{where}: needs 'kappa' or 'k'")
    cs, ys = _terms(_require(data, "terms", where), d, where + ".terms")
    try:
        es = ExponentialSum(d, tuple(cs), tuple(ys))
    except ScatterError as exc:
        raise ParseError(f"{where}.terms: {exc}") from None
    probes = []
    for i, entry in enumerate(data.get("probes", [])):
        at = f"{where}.probes[{i}]"
        kp = _vector(_require(entry, "k", at), d, at + ".k")
        if abs(np.linalg.norm(kp) - kappa) > ON_SHELL_RTOL * kappa:
            raise ParseError(f"{at}.k: |k| = {np.linalg.norm(kp)!r} is not kappa = {kappa!r}")
        pcs, pys = _terms(_require(entry, "terms", at), d, at + ".terms")
        probes.append((kp, ExponentialSum(d, tuple(pcs), tuple(pys))))
    return FarFieldDataset(d, kappa, k, es, tuple(probes))


def read_dataset(path) -> FarFieldDataset:
    return parse_dataset(_load_json(path), str(path))


def _terms_to_list(es: ExponentialSum, coefficient="c"):
    return [{coefficient: _complex_out(c), "y": [float(v) for v in y]} for c, y in es.terms()]


def dataset_to_dict(ds: FarFieldDataset) -> dict:
    out = {"dimension": ds.d, "kappa": float(ds.kappa)}
    if ds.k is not None:
        out["k"] = [float(v) for v in ds.k]
    out["terms"] = _terms_to_list(ds.terms)
    if ds.probes:
        out["probes"] = [
            {"k": [float(v) for v in kp], "terms": _terms_to_list(es)} for kp, es in ds.probes
        ]
    return out


def write_dataset(path, ds: FarFieldDataset):
    _dump(path, dataset_to_dict(ds))


def sources_to_dict(sources, d, kappa) -> dict:
    return {
        "dimension": d,
        "kappa": float(kappa),
        "sources": [{"y": [float(v) for v in s.y], "c": _complex_out(s.c)} for s in sources],
    }


def parse_sources(data, where="sources"):
    d = _dimension(data, where)
    cs, ys = _terms(_require(data, "sources", where), d, where + ".sources")
    return [SourceTerm(y, c) for c, y in zip(cs, ys)]


# ---------------------------------------------------------------------------
# grids


def field_grid(p: Potential, kappa, k, box, nx, ny) -> np.ndarray:
    """Rows ``(x1, x2, Re psi+, Im psi+, |psi+|)`` over an ``nx`` by ``ny``
    lattice of a 2-D box, ``x2`` the outer loop. Lattice points within 1e-9
    of a scatterer get NaN field values."""
    if p.d != 2:
        raise ParseError("grids are written for d = 2 potentials")
    (x0, x1), (y0, y1) = np.asarray(box, dtype=float).reshape(2, 2)
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys)  # rows follow x2
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    psi = np.full(len(pts), complex(np.nan, np.nan))
    ok = np.ones(len(pts), dtype=bool)
    for y in p.positions:
        ok &= np.linalg.norm(pts - y, axis=1) >= SINGULAR_RADIUS
    if p.n:
        psi[ok] = total_field(solve_charges(p, kappa, k), pts[ok])
    else:
        psi = np.exp(1j * (pts @ np.asarray(k, dtype=float)))
    return np.column_stack([pts, psi.real, psi.imag, np.abs(psi)])


def write_grid_csv(path, rows: np.ndarray):
    lines = [GRID_HEADER]
    lines += [",".join("%.12g" % v for v in row) for row in rows]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_grid_csv(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != GRID_HEADER:
            raise ParseError(f"{path}: line 1: unexpected header {header!r}")
        return np.loadtxt(fh, delimiter=",", ndmin=2)
