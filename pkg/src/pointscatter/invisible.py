"""Non-uniqueness at a fixed incident direction.

Two constructions produce distinct potentials with the same scattering
amplitude ``f(k, .)`` for one fixed ``k``:

* a fitted pair: a scatterer at the origin whose strength cancels the
  coupling to a partner at ``y2`` with ``k . y2 = 0``, so the partner carries
  no charge and may be moved to ``-y2`` or given another strength;
* an invisible insertion: a new scatterer placed at a zero of the total
  field gets zero charge, so nothing observable changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import minimum_filter

from .errors import (
    ConstructionError,
    DomainError,
    NoZeroFoundError,
    NonConvergenceError,
    SingularMatrixError,
)
from .forward import (
    diagonal_shift,
    green,
    scattering_amplitude,
    solve_charges,
    total_field,
)
from .model import (
    Potential,
    Scatterer,
    check_on_shell,
    check_wavenumber,
    sphere_directions,
    validate_potential,
)
from .numerics import hankel0_first_kind, newton2d

AMPLITUDE_SAMPLES = 64
FIELD_SAMPLES = 16
ZERO_RESIDUAL = 1e-8
BASIN_THRESHOLD = 0.5
DEDUP_RADIUS = 1e-6
STRENGTH_GAP = 1e-9


@dataclass(frozen=True)
class CounterexamplePair:
    """Two potentials with equal ``f+(k, .)`` at one ``(kappa, k)``.

    ``certificate`` is the largest ``|f+ - f~+|`` over the sampled
    observation vectors and ``amplitude_scale`` the largest ``|f+|`` there.
    """

    nu: Potential
    nu_tilde: Potential
    kappa: float
    k: np.ndarray
    certificate: float
    amplitude_scale: float

    def within_tolerance(self, rtol=1e-12) -> bool:
        return self.certificate <= rtol * (1 + self.amplitude_scale)


@dataclass(frozen=True)
class FieldZero:
    point: np.ndarray
    residual: float


def _amplitude_certificate(s, s_tilde, count=AMPLITUDE_SAMPLES):
    ls = sphere_directions(s.d, s.kappa, count)
    _, fp = scattering_amplitude(s, ls)
    _, fpt = scattering_amplitude(s_tilde, ls)
    return float(np.max(np.abs(fp - fpt))), float(np.max(np.abs(fp)))


def fitted_pair(d, kappa, k, y2, alpha2, alpha2_tilde) -> CounterexamplePair:
    """Two-scatterer potentials ``{(0, a1), (y2, a2)}`` and ``{(0, a1), (-y2, a2~)}``.

    ``a1 = g - (A_jj - alpha_j)`` with ``g = G+(y2)`` makes the interaction
    matrix ``[[g, g], [g, h]]``; for ``k . y2 = 0`` both potentials then
    carry the charges ``(-1/g, 0)`` and share their amplitude.
    """
    if d not in (2, 3):
        raise ConstructionError("the fitted pair is built for d = 2 and d = 3")
    kappa = check_wavenumber(kappa)
    k = check_on_shell(np.asarray(k, dtype=float).reshape(d), kappa, "incident vector")
    y2 = np.asarray(y2, dtype=float).reshape(d)
    r = float(np.linalg.norm(y2))
    if r == 0:
        raise ConstructionError("y2 must be nonzero")
    if abs(k @ y2) > 1e-12 * max(1.0, kappa * r):
        raise ConstructionError(f"k . y2 = {k @ y2:.3e}; the construction needs k orthogonal to y2")
    g = green(d, y2, kappa)
    alpha1 = g - diagonal_shift(d, kappa)
    for name, a in (("alpha2", alpha2), ("alpha2_tilde", alpha2_tilde)):
        if abs(complex(a) - alpha1) <= STRENGTH_GAP:
            raise ConstructionError(f"{name} must differ from alpha1 = {alpha1:.12g}")

    origin = np.zeros(d)
    nu = Potential(d, (Scatterer(origin, alpha1), Scatterer(y2, alpha2)))
    nu_tilde = Potential(d, (Scatterer(origin, alpha1), Scatterer(-y2, alpha2_tilde)))
    s = solve_charges(nu, kappa, k)
    st = solve_charges(nu_tilde, kappa, k)

    expected = np.array([-1 / g, 0])
    scale = 1 + abs(expected[0])
    for state in (s, st):
        if np.max(np.abs(state.q - expected)) > 1e-12 * scale:
            raise ConstructionError(f"charges {state.q} differ from (-1/g, 0) = {expected}")
    cert, amp = _amplitude_certificate(s, st)
    pair = CounterexamplePair(nu, nu_tilde, kappa, k, cert, amp)
    if not pair.within_tolerance():
        raise ConstructionError(f"amplitudes differ by {cert:.3e}")
    return pair


def closed_form_invisible_example(d, kappa, k=None):
    """Single scatterer at the origin with a known zero of its total field.

    d = 2: ``alpha1 = (pi i - 2 ln kappa)/(4 pi) - i H0(1)/(4 e^i)``, zero at
    ``k/kappa^2``. d = 3: ``alpha1 = i kappa/(4 pi) - 1/(4 pi kappa)``, zero at
    ``k``. The default ``k`` is ``kappa e1`` (d = 2) or ``kappa e3`` (d = 3).

    Returns ``(potential, FieldZero, k)``.
    """
    kappa = check_wavenumber(kappa)
    if d == 2:
        k = np.array([kappa, 0.0]) if k is None else np.asarray(k, dtype=float)
        alpha = (math.pi * 1j - 2 * math.log(kappa)) / (4 * math.pi) - 1j * hankel0_first_kind(
            1.0
        ) / (4 * np.exp(1j))
        zero = k / kappa**2
    elif d == 3:
        k = np.array([0.0, 0.0, kappa]) if k is None else np.asarray(k, dtype=float)
        alpha = 1j * kappa / (4 * math.pi) - 1 / (4 * math.pi * kappa)
        zero = k.copy()
    else:
        raise DomainError(f"closed-form examples exist for d = 2, 3; got {d}")
    k = check_on_shell(k, kappa, "incident vector")
    p = Potential(d, (Scatterer(np.zeros(d), alpha),))
    s = solve_charges(p, kappa, k)
    res = abs(total_field(s, zero))
    if res > 1e-12 * (1 + np.max(np.abs(s.q))):
        raise ConstructionError(f"closed-form zero has residual {res:.3e}")
    return p, FieldZero(zero, res), k


def _box_axes(box, d, grid_n):
    box = np.asarray(box, dtype=float).reshape(d, 2)
    if np.any(box[:, 1] <= box[:, 0]):
        raise DomainError(f"empty search box {box.tolist()}")
    return box, [np.linspace(lo, hi, grid_n) for lo, hi in box]


def _newton_min_norm(F, x0, tol=1e-13, max_iter=50, rel_step=1e-6):
    """Gauss-Newton with minimum-norm steps for ``F: R^m -> R^2``, m > 2."""
    x = np.array(x0, dtype=float)
    fx = F(x)
    for _ in range(max_iter):
        res = float(np.max(np.abs(fx)))
        if res <= tol:
            break
        J = np.empty((2, x.size))
        for i in range(x.size):
            h = rel_step * max(1.0, abs(x[i]))
            e = np.zeros(x.size)
            e[i] = h
            J[:, i] = (F(x + e) - F(x - e)) / (2 * h)
        step = np.linalg.lstsq(J, -fx, rcond=None)[0]
        t = 1.0
        for _ in range(30):
            ft = F(x + t * step)
            if np.all(np.isfinite(ft)) and np.max(np.abs(ft)) < res:
                break
            t *= 0.5
        x, fx = x + t * step, ft
    return x


def find_field_zero(p: Potential, kappa, k, box, grid_n=200) -> list:
    """Zeros of ``psi+(., k)`` inside an axis-aligned box.

    ``|psi+|`` is sampled on a ``grid_n`` lattice per axis; every local
    minimum below 0.5 seeds a Newton iteration on ``(Re psi+, Im psi+)``.
    Converged points inside the box with residual at most 1e-8 are kept,
    merged within 1e-6 and returned in lexicographic order.

    Raises NoZeroFoundError when no lattice point has ``|psi+| < 0.5``.
    """
    validate_potential(p)
    d = p.d
    if d not in (2, 3):
        raise DomainError("zero search implemented for d = 2 and d = 3")
    s = solve_charges(p, kappa, k)
    box, axes = _box_axes(box, d, grid_n)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    mod = np.full(grid.shape[:-1], np.inf)
    away = np.ones(grid.shape[:-1], dtype=bool)
    for y in p.positions:
        away &= np.linalg.norm(grid - y, axis=-1) > 1e-3
    mod[away] = np.abs(total_field(s, grid[away]))
    best = float(np.min(mod))
    if not best < BASIN_THRESHOLD:
        raise NoZeroFoundError(
            f"min |psi+| on the lattice is {best:.3g} >= {BASIN_THRESHOLD}; "
            "no zero of the total field in the box"
        )

    seeds = np.argwhere((mod == minimum_filter(mod, size=3, mode="nearest")) & (mod < BASIN_THRESHOLD))
    seeds = sorted(seeds.tolist(), key=lambda ij: mod[tuple(ij)])

    def F(x):
        v = total_field(s, x)
        return np.array([v.real, v.imag])

    zeros: list = []
    span = box[:, 1] - box[:, 0]
    for ij in seeds:
        x0 = grid[tuple(ij)]
        try:
            if d == 2:
                x = newton2d(F, x0, tol=1e-13)
            else:
                x = _newton_min_norm(F, x0)
        except NonConvergenceError as exc:
            x = exc.best
        except Exception:
            continue
        if x is None or not np.all(np.isfinite(x)):
            continue
        if np.any(x < box[:, 0] - 1e-9 * span) or np.any(x > box[:, 1] + 1e-9 * span):
            continue
        if p.n and np.min(np.linalg.norm(p.positions - x, axis=1)) <= 1e-6:
            continue
        res = abs(total_field(s, x))
        if res > ZERO_RESIDUAL:
            continue
        if any(np.linalg.norm(z.point - x) <= DEDUP_RADIUS for z in zeros):
            continue
        zeros.append(FieldZero(x, float(res)))
    zeros.sort(key=lambda z: tuple(z.point))
    return zeros


def _field_probe_points(p: Potential, count, rng):
    centre = p.positions.mean(axis=0)
    radius = 1.0 + float(np.max(np.linalg.norm(p.positions - centre, axis=1)))
    pts = []
    while len(pts) < count:
        x = centre + rng.uniform(-2 * radius, 2 * radius, p.d)
        if np.min(np.linalg.norm(p.positions - x, axis=1)) > 1e-3:
            pts.append(x)
    return np.array(pts)


def add_invisible_scatterer(
    p: Potential, kappa, k, zero: FieldZero, alpha_new=1.0, retries=5
) -> CounterexamplePair:
    """Append a scatterer at a zero of ``psi+(., k)``.

    The new charge vanishes, so the old charges, the total field and the
    amplitude ``f+(k, .)`` are unchanged. When the enlarged system is
    singular, ``alpha_new`` is increased by 0.1 up to ``retries`` times.
    """
    validate_potential(p)
    kappa = check_wavenumber(kappa)
    s = solve_charges(p, kappa, k)
    point = np.asarray(zero.point, dtype=float).reshape(p.d)
    res = abs(total_field(s, point))
    if res > ZERO_RESIDUAL:
        raise ConstructionError(f"|psi+| = {res:.3e} at {point.tolist()}; not a zero of this field")

    alpha = complex(alpha_new)
    for attempt in range(retries + 1):
        nu_tilde = p.with_scatterer(point, alpha)
        try:
            st = solve_charges(nu_tilde, kappa, k)
            break
        except SingularMatrixError:
            if attempt == retries:
                raise
            alpha += 0.1

    qscale = 1 + (float(np.max(np.abs(s.q))) if p.n else 0.0)
    if abs(st.q[-1]) > 1e-8 * qscale or (
        p.n and np.max(np.abs(st.q[:-1] - s.q)) > 1e-8 * qscale
    ):
        raise ConstructionError(f"charges changed: {s.q} -> {st.q}")
    xs = _field_probe_points(nu_tilde, FIELD_SAMPLES, np.random.default_rng(0))
    dpsi = np.max(np.abs(total_field(st, xs) - total_field(s, xs)))
    if dpsi > 1e-8 * (1 + np.max(np.abs(total_field(s, xs)))):
        raise ConstructionError(f"total fields differ by {dpsi:.3e}")
    cert, amp = _amplitude_certificate(s, st)
    return CounterexamplePair(p, nu_tilde, kappa, np.asarray(k, dtype=float), cert, amp)
