"""Exact forward scattering for multipoint point-scatterer potentials.

The total field is ``psi(x, k) = exp(i k.x) + sum_j q_j(k) G(x - y_j)`` where
the charges solve the Foldy-Lax system ``A(kappa) q = b(k)``. Point sources
of the Helmholtz equation share the same Green function and far-field form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeError, SingularityError
from .model import (
    ExponentialSum,
    FarFieldOracle,
    Potential,
    SourceTerm,
    check_on_shell,
    check_wavenumber,
    validate_potential,
)
from .numerics import hankel0_first_kind, inf_norm, solve_complex_linear


def amplitude_constant(d: int, kappa: float) -> complex:
    """``c(d, kappa) = -pi i (sqrt(2 pi) e^{-i pi/4})^(d-1) kappa^((d-3)/2)``,
    the factor turning the normalised amplitude into the physical one."""
    kappa = check_wavenumber(kappa)
    base = math.sqrt(2 * math.pi) * complex(math.cos(math.pi / 4), -math.sin(math.pi / 4))
    return -math.pi * 1j * base ** (d - 1) * kappa ** ((d - 3) / 2)


def _radius(d, x):
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        return np.abs(x)
    if x.shape[-1] != d:
        raise ShapeError(f"expected points with {d} coordinates, got shape {x.shape}")
    return np.linalg.norm(x, axis=-1)


def green_radial(d: int, r, kappa: float):
    """Outgoing Green function of ``Delta + kappa^2`` as a function of ``r = |x| > 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise SingularityError("Green function evaluated at the source point")
    if d == 1:
        return np.exp(1j * kappa * r) / (2j * kappa)
    if d == 2:
        return -0.25j * hankel0_first_kind(kappa * r)
    if d == 3:
        return -np.exp(1j * kappa * r) / (4 * math.pi * r)
    raise DomainError(f"dimension must be 1, 2 or 3, got {d}")


def green(d: int, x, kappa) -> complex:
    """``G+(x, kappa)``: ``e^{i kappa|x|}/(2 i kappa)``, ``-(i/4) H0(kappa|x|)`` or
    ``-e^{i kappa|x|}/(4 pi |x|)`` for d = 1, 2, 3. Vectorised over leading axes."""
    kappa = check_wavenumber(kappa)
    g = green_radial(d, _radius(d, x), kappa)
    return complex(g) if np.ndim(g) == 0 else g


def diagonal_shift(d: int, kappa: float) -> complex:
    """``A_jj - alpha_j`` for the given dimension."""
    if d == 1:
        return 1 / (2j * kappa)
    if d == 2:
        return -(math.pi * 1j - 2 * math.log(kappa)) / (4 * math.pi)
    if d == 3:
        return -1j * kappa / (4 * math.pi)
    raise DomainError(f"dimension must be 1, 2 or 3, got {d}")


def interaction_matrix(p: Potential, kappa) -> np.ndarray:
    """Foldy-Lax matrix: strength-dependent diagonal, Green function off it."""
    validate_potential(p)
    kappa = check_wavenumber(kappa)
    n, y = p.n, p.positions
    A = np.zeros((n, n), dtype=complex)
    shift = diagonal_shift(p.d, kappa)
    for j in range(n):
        A[j, j] = p.scatterers[j].alpha + shift
        for jj in range(j + 1, n):
            A[j, jj] = A[jj, j] = green(p.d, y[j] - y[jj], kappa)
    return A


def incident_vector(p: Potential, k) -> np.ndarray:
    """Right-hand side ``b_j = -exp(i k . y_j)``."""
    k = np.asarray(k, dtype=float).reshape(p.d)
    return -np.exp(1j * (p.positions @ k))


@dataclass(frozen=True)
class SolvedState:
    potential: Potential
    kappa: float
    k: np.ndarray
    A: np.ndarray
    q: np.ndarray

    @property
    def d(self) -> int:
        return self.potential.d

    @property
    def b(self) -> np.ndarray:
        return incident_vector(self.potential, self.k)

    def residual(self) -> float:
        return inf_norm(self.A @ self.q - self.b)


def solve_charges(p: Potential, kappa, k) -> SolvedState:
    """Solve ``A(kappa) q = b(k)``; a singular matrix raises SingularMatrixError."""
    validate_potential(p)
    kappa = check_wavenumber(kappa)
    k = check_on_shell(np.asarray(k, dtype=float).reshape(p.d), kappa, "incident vector")
    A = interaction_matrix(p, kappa)
    q = solve_complex_linear(A, incident_vector(p, k)) if p.n else np.zeros(0, complex)
    A.setflags(write=False)
    q.setflags(write=False)
    k.setflags(write=False)
    return SolvedState(p, kappa, k, A, q)


def _points(d, x):
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise ShapeError(f"expected points with {d} coordinates, got shape {x.shape}")
    return x


def _field_from_charges(d, kappa, positions, charges, x):
    x = _points(d, x)
    out = np.zeros(x.shape[:-1], dtype=complex)
    for yj, qj in zip(positions, charges):
        r = np.linalg.norm(x - yj, axis=-1)
        if np.any(r == 0):
            raise SingularityError(f"field evaluated at the singular point {tuple(yj)}")
        out = out + qj * green_radial(d, r, kappa)
    return out


def total_field(s: SolvedState, x):
    """``psi+(x, k)``; vectorised over leading axes of ``x``."""
    x = _points(s.d, x)
    out = np.exp(1j * (x @ s.k)) + _field_from_charges(
        s.d, s.kappa, s.potential.positions, s.q, x
    )
    return complex(out) if out.ndim == 0 else out


def scattered_field(s: SolvedState, x):
    out = _field_from_charges(s.d, s.kappa, s.potential.positions, s.q, x)
    return complex(out) if out.ndim == 0 else out


def scattering_amplitude(s: SolvedState, l):
    """Return ``(f, f_plus)`` at observation vector(s) ``l`` with ``|l| = kappa``."""
    l = np.asarray(l, dtype=float)
    for row in l.reshape(-1, s.d):
        check_on_shell(row, s.kappa, "observation vector")
    f = (np.exp(-1j * (l @ s.potential.positions.T)) @ s.q) / (2 * math.pi) ** s.d
    fp = amplitude_constant(s.d, s.kappa) * f
    if np.ndim(f) == 0:
        return complex(f), complex(fp)
    return f, fp


def amplitude_oracle(s: SolvedState) -> FarFieldOracle:
    """``theta -> f(k, kappa theta)`` as an exponential sum with frequencies
    ``-kappa y_j`` and coefficients ``q_j / (2 pi)^d``; exact-zero charges drop out."""
    keep = [j for j in range(s.potential.n) if s.q[j] != 0]
    scale = (2 * math.pi) ** s.d
    es = ExponentialSum(
        s.d,
        tuple(s.q[j] / scale for j in keep),
        tuple(-s.kappa * s.potential.positions[j] for j in keep),
    )
    return FarFieldOracle(es)


def singular_coefficient(s: SolvedState, j: int) -> complex:
    """Leading singular coefficient of ``psi+`` at scatterer ``j`` (0-based):
    ``-q_j/(4 pi)`` in 3D, ``q_j/(2 pi)`` in 2D, the derivative jump ``q_j`` in 1D."""
    if not 0 <= j < s.potential.n:
        raise IndexError(f"scatterer index {j} out of range for n={s.potential.n}")
    q = complex(s.q[j])
    if s.d == 3:
        return -q / (4 * math.pi)
    if s.d == 2:
        return q / (2 * math.pi)
    return q


def _source_arrays(src: Sequence[SourceTerm], d):
    pos = np.array([t.y for t in src], dtype=float).reshape(len(src), d)
    cs = np.array([t.c for t in src], dtype=complex)
    return pos, cs


def source_field(src: Sequence[SourceTerm], kappa, x, d=None):
    """Radiating solution ``sum_j c_j G+(x - y_j)`` of the Helmholtz equation."""
    kappa = check_wavenumber(kappa)
    x = np.asarray(x, dtype=float)
    d = d or (len(src[0].y) if src else x.shape[-1])
    pos, cs = _source_arrays(src, d)
    out = _field_from_charges(d, kappa, pos, cs, x)
    return complex(out) if out.ndim == 0 else out


def source_far_field(src: Sequence[SourceTerm], kappa, l):
    """Return ``(a, a_plus)`` at ``l`` with ``|l| = kappa``."""
    kappa = check_wavenumber(kappa)
    l = np.asarray(l, dtype=float)
    d = l.shape[-1]
    for row in l.reshape(-1, d):
        check_on_shell(row, kappa, "observation vector")
    pos, cs = _source_arrays(src, d)
    a = (np.exp(-1j * (l @ pos.T)) @ cs) / (2 * math.pi) ** d
    ap = amplitude_constant(d, kappa) * a
    if np.ndim(a) == 0:
        return complex(a), complex(ap)
    return a, ap


def source_oracle(src: Sequence[SourceTerm], kappa, d) -> FarFieldOracle:
    """``theta -> a(kappa theta)`` as an exponential sum."""
    kappa = check_wavenumber(kappa)
    scale = (2 * math.pi) ** d
    es = ExponentialSum(d, tuple(t.c / scale for t in src), tuple(-kappa * np.asarray(t.y) for t in src))
    return FarFieldOracle(es)
