"""Value types: scatterers, potentials, point sources and exponential sums."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DistinctnessError, DomainError, OffShellError, ShapeError

MIN_SEPARATION = 1e-12
ON_SHELL_RTOL = 1e-12


def _as_point(y) -> tuple:
    pt = tuple(float(v) for v in np.atleast_1d(np.asarray(y, dtype=float)))
    if not all(math.isfinite(v) for v in pt):
        raise DomainError(f"non-finite coordinate in {pt}")
    return pt


@dataclass(frozen=True)
class Scatterer:
    y: tuple
    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "y", _as_point(self.y))
        object.__setattr__(self, "alpha", complex(self.alpha))


@dataclass(frozen=True)
class Potential:
    """Multipoint potential: sum of point scatterers of strength ``alpha_j``
    at ``y_j`` in dimension ``d``. ``n = 0`` is the zero potential."""

    d: int
    scatterers: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "d", int(self.d))
        items = tuple(
            s if isinstance(s, Scatterer) else Scatterer(*s) for s in self.scatterers
        )
        object.__setattr__(self, "scatterers", items)

    @classmethod
    def from_arrays(cls, d, positions, alphas) -> "Potential":
        positions = np.asarray(positions, dtype=float).reshape(-1, d) if len(alphas) else []
        return cls(d, tuple(Scatterer(y, a) for y, a in zip(positions, alphas)))

    @property
    def n(self) -> int:
        return len(self.scatterers)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.y for s in self.scatterers], dtype=float).reshape(self.n, self.d)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([s.alpha for s in self.scatterers], dtype=complex)

    def with_scatterer(self, y, alpha) -> "Potential":
        return Potential(self.d, self.scatterers + (Scatterer(y, alpha),))


def _check_distinct(points: np.ndarray, what: str):
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if np.linalg.norm(points[i] - points[j]) <= MIN_SEPARATION:
                raise DistinctnessError(f"{what} {i} and {j} coincide at {tuple(points[i])}")


def validate_potential(p: Potential) -> Potential:
    """Check dimension, shapes and pairwise distinctness; return ``p`` unchanged."""
    if p.d not in (1, 2, 3):
        raise DomainError(f"dimension must be 1, 2 or 3, got {p.d}")
    for j, s in enumerate(p.scatterers):
        if len(s.y) != p.d:
            raise ShapeError(f"scatterer {j} has {len(s.y)} coordinates, expected {p.d}")
        if not (math.isfinite(s.alpha.real) and math.isfinite(s.alpha.imag)):
            raise DomainError(f"scatterer {j} has non-finite strength")
    _check_distinct(p.positions, "scatterers")
    return p


@dataclass(frozen=True)
class SourceTerm:
    """Point source ``c * delta(x - y)`` of the Helmholtz equation."""

    y: tuple
    c: complex

    def __post_init__(self):
        object.__setattr__(self, "y", _as_point(self.y))
        object.__setattr__(self, "c", complex(self.c))
        if self.c == 0:
            raise DomainError("source coefficient must be nonzero")


def check_wavenumber(kappa) -> float:
    kappa = float(kappa)
    if not (kappa > 0 and math.isfinite(kappa)):
        raise DomainError(f"wavenumber must be positive, got {kappa}")
    return kappa


def check_on_shell(v, kappa, name="vector") -> np.ndarray:
    """Return ``v`` as an array after checking ``|v| = kappa`` to 1e-12 relative."""
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - kappa) > ON_SHELL_RTOL * kappa:
        norm = float(np.linalg.norm(v))
        raise OffShellError(f"{name} {v.tolist()} has norm {norm!r}, expected {float(kappa)!r}")
    return v


@dataclass(frozen=True)
class ExponentialSum:
    """``u(theta) = sum_j c_j exp(i y_j . theta)`` with distinct real ``y_j``.

    ``theta`` may be complex; evaluation accepts arrays of shape ``(..., d)``.
    """

    d: int
    coefficients: tuple = ()
    frequencies: tuple = ()
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        cs = tuple(complex(c) for c in self.coefficients)
        ys = tuple(_as_point(y) for y in self.frequencies)
        object.__setattr__(self, "coefficients", cs)
        object.__setattr__(self, "frequencies", ys)
        if len(cs) != len(ys):
            raise ShapeError("coefficient and frequency lists differ in length")
        if any(len(y) != self.d for y in ys):
            raise ShapeError(f"frequency vectors must have {self.d} components")
        if self.check:
            if self.d < 2:
                raise DomainError("exponential sums are defined here for d >= 2")
            if any(c == 0 for c in cs):
                raise DomainError("stored coefficients must be nonzero")
            _check_distinct(np.array(ys).reshape(len(ys), self.d), "frequencies")

    @classmethod
    def from_terms(cls, d, terms: Iterable[tuple], check=True) -> "ExponentialSum":
        terms = list(terms)
        return cls(d, tuple(c for c, _ in terms), tuple(y for _, y in terms), check=check)

    @property
    def n(self) -> int:
        return len(self.coefficients)

    @property
    def c(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=complex)

    @property
    def y(self) -> np.ndarray:
        return np.array(self.frequencies, dtype=float).reshape(self.n, self.d)

    def terms(self):
        return list(zip(self.coefficients, self.frequencies))

    def scaled(self, s) -> "ExponentialSum":
        return ExponentialSum(self.d, tuple(s * c for c in self.coefficients), self.frequencies)

    def exponents(self, theta) -> np.ndarray:
        """``log c_j + i y_j . theta`` with shape ``(..., n)``."""
        theta = np.asarray(theta, dtype=complex)
        if self.n == 0:
            return np.zeros(theta.shape[:-1] + (0,), dtype=complex)
        return np.log(self.c) + 1j * (theta @ self.y.T)

    def __call__(self, theta) -> np.ndarray:
        return np.sum(np.exp(self.exponents(theta)), axis=-1)


@dataclass(frozen=True)
class FarFieldOracle:
    """Analytic far-field data on the complexified sphere ``theta . theta = 1``.

    Backed by an exponential sum; ``subtracted`` holds terms removed by
    peeling, so the oracle represents ``backing - subtracted``.
    """

    backing: ExponentialSum
    subtracted: tuple = ()

    @property
    def d(self) -> int:
        return self.backing.d

    def minus(self, c, y) -> "FarFieldOracle":
        return FarFieldOracle(self.backing, self.subtracted + ((complex(c), _as_point(y)),))

    def scaled_by(self, s) -> "FarFieldOracle":
        return FarFieldOracle(
            self.backing.scaled(s), tuple((s * c, y) for c, y in self.subtracted)
        )

    def _exponents(self, theta):
        theta = np.asarray(theta, dtype=complex)
        e = self.backing.exponents(theta)
        if not self.subtracted:
            return e
        sub = ExponentialSum.from_terms(self.d, self.subtracted, check=False)
        # log(-c) = log(c) + i pi
        return np.concatenate([e, sub.exponents(theta) + 1j * math.pi], axis=-1)

    def __call__(self, theta, shift=0.0):
        """Evaluate ``u(theta) * exp(-shift)``; ``shift`` avoids overflow on long rays."""
        e = self._exponents(theta)
        if e.shape[-1] == 0:
            return np.zeros(e.shape[:-1], dtype=complex)
        shift = np.asarray(shift, dtype=float)[..., None] if np.ndim(shift) else shift
        return np.sum(np.exp(e - shift), axis=-1)

    def log_abs(self, theta) -> np.ndarray:
        """``log|u(theta)|`` computed with a per-point shift (no overflow)."""
        e = self._exponents(theta)
        if e.shape[-1] == 0:
            return np.full(e.shape[:-1], -np.inf)
        m = np.max(e.real, axis=-1)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(np.sum(np.exp(e - m[..., None]), axis=-1))) + m

    def on_sphere(self, directions) -> np.ndarray:
        return self(np.asarray(directions, dtype=float))


def unit_sphere_points(d: int, count: int) -> np.ndarray:
    """Deterministic quasi-uniform points on ``S^{d-1}`` (equispaced circle for
    d=2, Fibonacci lattice for d=3)."""
    if d == 2:
        t = 2 * math.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if d == 3:
        i = np.arange(count) + 0.5
        z = 1 - 2 * i / count
        r = np.sqrt(np.maximum(0.0, 1 - z * z))
        phi = math.pi * (3 - math.sqrt(5)) * i
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    raise DomainError(f"sphere sampling implemented for d = 2, 3 only, got {d}")


def sphere_directions(d: int, kappa: float, count: int) -> np.ndarray:
    """``count`` deterministic vectors on the sphere of radius ``kappa``."""
    return kappa * unit_sphere_points(d, count)
