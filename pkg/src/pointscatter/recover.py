"""Inverse problems at fixed energy.

The central routine recovers an exponential sum ``u(theta) = sum c_j
exp(i y_j . theta)`` from its analytic continuation to the complex sphere
``theta . theta = 1``. Along the rays

    theta(tau) = sqrt(1 + tau^2) e1 - i tau e2,   e1 . e2 = 0,

each term has modulus ``|c_j| exp(tau e2 . y_j)``, so the term with the
largest projection onto ``e2`` dominates for large ``tau``. Choosing ``e2``
to maximise that growth isolates the term of largest ``|y_j|``; it is
measured, subtracted, and the procedure repeats on the remainder.

Scattering amplitudes and Helmholtz far fields are exponential sums of this
kind (frequencies ``-kappa y_j``), which gives the inverse scattering and
inverse source solvers built on top.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    DegenerateRayError,
    DomainError,
    IllSeparatedError,
    UndeterminedStrengthError,
)
from .forward import (
    amplitude_oracle,
    diagonal_shift,
    green,
    interaction_matrix,
    solve_charges,
)
from .model import (
    ExponentialSum,
    FarFieldOracle,
    Potential,
    Scatterer,
    SourceTerm,
    check_on_shell,
    check_wavenumber,
    sphere_directions,
    unit_sphere_points,
)

LOG = logging.getLogger(__name__)

TEST_POINTS = 256
GRID_POINTS = {2: 512, 3: 2048}
# Relative size of subtracted-term error tolerated in a growth measurement.
CONTAMINATION_RATIO = 1e-3
# Growth below this is treated as bounded (constant remainder).
BOUNDED_GROWTH = 1e-6
# log of e^{tau r} allowed on the longest fitting rays.
MAX_LOG_GROWTH = 2000.0
# Successively looser contamination ratios for the fitting segment; a rough
# fit is cleaned up by the joint refinement once every term is modeled.
TRUST_RATIOS = (1e-8, CONTAMINATION_RATIO, 3e-2, 1.0)
# Single-term misfit above which tilted ray directions are tried.
RETILT_MISFIT = 1e-8
# Smallest frequency scale the ray lengths adapt to.
MIN_SCALE = 0.05


@dataclass(frozen=True)
class TangentFramePoint:
    tau: float
    e1: tuple
    e2: tuple

    def __post_init__(self):
        e1 = np.asarray(self.e1, dtype=float)
        e2 = np.asarray(self.e2, dtype=float)
        if e1.shape != e2.shape:
            raise DomainError("frame vectors differ in dimension")
        if abs(np.linalg.norm(e1) - 1) > 1e-12 or abs(np.linalg.norm(e2) - 1) > 1e-12:
            raise DomainError("frame vectors must be unit vectors")
        if abs(e1 @ e2) > 1e-12:
            raise DomainError("frame vectors must be orthogonal")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "e1", tuple(e1))
        object.__setattr__(self, "e2", tuple(e2))


def complex_direction(t: TangentFramePoint) -> np.ndarray:
    """``sqrt(1 + tau^2) e1 - i tau e2``; a point of the complex unit sphere."""
    return ray(np.array([t.tau]), np.asarray(t.e1), np.asarray(t.e2))[0]


def ray(taus, e1, e2) -> np.ndarray:
    taus = np.asarray(taus, dtype=float)
    return np.sqrt(1 + taus**2)[:, None] * e1[None, :] - 1j * taus[:, None] * e2[None, :]


def orthogonal_unit(e2) -> np.ndarray:
    """A deterministic unit vector orthogonal to ``e2``."""
    e2 = np.asarray(e2, dtype=float)
    if e2.size == 2:
        return np.array([-e2[1], e2[0]])
    axis = np.zeros(e2.size)
    axis[int(np.argmin(np.abs(e2)))] = 1.0
    v = axis - (axis @ e2) * e2
    return v / np.linalg.norm(v)


def _orthonormal_complement(e2) -> list:
    e1 = orthogonal_unit(e2)
    if e2.size == 2:
        return [e1]
    return [e1, np.cross(e2, e1)]


def growth_rate(u: FarFieldOracle, e1, e2, tau_max, samples=64) -> float:
    """Least-squares slope of ``log|u(theta(tau))|`` over ``[tau_max/2, tau_max]``."""
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    TangentFramePoint(0.0, e1, e2)
    taus = np.linspace(tau_max / 2, tau_max, samples)
    L = u.log_abs(ray(taus, e1, e2))
    if not np.all(np.isfinite(L)):
        raise DegenerateRayError("oracle vanishes on the sample ray")
    return float(np.polyfit(taus, L, 1)[0])


# ---------------------------------------------------------------------------
# ray measurements


@dataclass
class _Found:
    c: complex
    y: np.ndarray
    error: float = 1e-3  # relative accuracy estimate used for contamination bounds
    thetas: np.ndarray = None  # complex sample points where this term dominated


def _log_contamination(found: Sequence[_Found], thetas) -> np.ndarray:
    """log of a bound on the error that subtracting ``found`` leaves at ``thetas``."""
    if not found:
        return np.full(thetas.shape[:-1], -np.inf)
    mag = np.linalg.norm(np.abs(thetas), axis=-1)
    parts = []
    for t in found:
        expo = (1j * (thetas @ t.y)).real
        size = t.error * (1 + np.linalg.norm(t.y) * mag)
        parts.append(math.log(abs(t.c)) + expo + np.log(size))
    parts = np.stack(parts, axis=-1)
    m = parts.max(axis=-1)
    return m + np.log(np.exp(parts - m[..., None]).sum(axis=-1))


def _scan_growth(u, found, directions, tau_max, samples=64):
    """Growth estimates for many ``e2`` at once.

    Samples where the contamination bound exceeds CONTAMINATION_RATIO * |u|
    are distrusted; a direction keeps the slope over the upper half of its
    longest trusted run, or NaN when that run is shorter than 16 samples.
    """
    taus = np.linspace(0.0, tau_max, 2 * samples + 1)[1:]
    e1s = _orthogonal_units(directions)
    thetas = (
        np.sqrt(1 + taus**2)[None, :, None] * e1s[:, None, :]
        - 1j * taus[None, :, None] * directions[:, None, :]
    )
    L = u.log_abs(thetas)
    C = _log_contamination(found, thetas)
    trusted = (C < L + math.log(CONTAMINATION_RATIO)) & np.isfinite(L)
    start, hi = _longest_runs(trusted)
    lo = (start + hi) // 2
    idx = np.arange(taus.size)
    w = (idx[None, :] >= lo[:, None]) & (idx[None, :] < hi[:, None])
    cnt = np.maximum(w.sum(axis=1), 1)
    Lw = np.where(w, L, 0.0)
    tbar = (w * taus).sum(axis=1) / cnt
    lbar = Lw.sum(axis=1) / cnt
    dt = np.where(w, taus[None, :] - tbar[:, None], 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rates = (dt * (Lw - lbar[:, None])).sum(axis=1) / (dt * dt).sum(axis=1)
    rates[hi - start < 16] = np.nan
    return rates


def _longest_runs(mask):
    """Per row, ``(start, stop)`` of the longest run of True values; ties go
    to the later run. Rows without any True give ``(0, 0)``."""
    rows, cols = mask.shape
    run = np.zeros((rows, cols), dtype=int)
    current = np.zeros(rows, dtype=int)
    for j in range(cols):
        current = np.where(mask[:, j], current + 1, 0)
        run[:, j] = current
    last = cols - 1 - np.argmax(run[:, ::-1], axis=1)
    length = run[np.arange(rows), last]
    stop = np.where(length > 0, last + 1, 0)
    return stop - length, stop


def _longest_run(mask):
    lo, hi = _longest_runs(np.asarray(mask, dtype=bool)[None, :])
    return int(lo[0]), int(hi[0])


def _orthogonal_units(directions) -> np.ndarray:
    """Row-wise :func:`orthogonal_unit`."""
    directions = np.asarray(directions, dtype=float)
    if directions.shape[1] == 2:
        return np.stack([-directions[:, 1], directions[:, 0]], axis=1)
    axis = np.zeros_like(directions)
    axis[np.arange(len(directions)), np.argmin(np.abs(directions), axis=1)] = 1.0
    v = axis - np.sum(axis * directions, axis=1)[:, None] * directions
    return v / np.linalg.norm(v, axis=1)[:, None]


def _fit_on_rays(u, found, e2, tau_lo, tau_hi, rate_bound):
    """Fit one dominant exponential on rays with direction ``e2``.

    Returns ``(c, y, rel_residual, thetas)`` where ``rel_residual`` is the rms
    relative misfit of the single-term model over the window.
    """
    step = 0.5 / max(MIN_SCALE, rate_bound)
    count = int(min(4000, max(64, math.ceil((tau_hi - tau_lo) / step))))
    taus = np.linspace(tau_lo, tau_hi, count)
    s = np.sqrt(1 + taus**2)
    comps = []
    all_thetas = []
    slope = None
    for e1 in _orthonormal_complement(e2):
        th = ray(taus, e1, e2)
        L = u.log_abs(th)
        if not np.all(np.isfinite(L)):
            raise DegenerateRayError("oracle vanishes on the fitting ray")
        shift = L
        vals = u(th, shift=shift)
        phase = np.unwrap(np.angle(vals))
        beta = np.polyfit(taus, L, 1)[0]
        gamma = np.polyfit(s, phase, 1)[0]
        slope = beta if slope is None else 0.5 * (slope + beta)
        comps.append((e1, gamma))
        all_thetas.append(th)
    y = slope * e2
    for e1, gamma in comps:
        y = y + gamma * e1
    thetas = np.concatenate(all_thetas)
    # coefficient from the top samples of every ray, then misfit over the window
    expo = 1j * (thetas @ y)
    Lall = u.log_abs(thetas)
    ratio = u(thetas, shift=Lall) * np.exp(Lall - expo)
    top = np.concatenate([np.arange(count - 8, count) + r * count for r in range(len(all_thetas))])
    upper = np.concatenate(
        [np.arange(count // 2, count) + r * count for r in range(len(all_thetas))]
    )
    c = complex(np.mean(ratio[top]))
    resid = float(np.sqrt(np.mean(np.abs(ratio[upper] / c - 1) ** 2)))
    return c, y, resid, thetas


def _best_direction(u, found, d, r_hint=None):
    grid = unit_sphere_points(d, GRID_POINTS[d])
    if r_hint is None:
        coarse = _scan_growth(u, found, grid, 4.0)
        r_hint = float(np.nanmax(coarse)) if np.any(np.isfinite(coarse)) else 0.0
    tau_max = 60.0 / max(MIN_SCALE, r_hint)
    rates = _scan_growth(u, found, grid, tau_max)
    # earlier subtractions may leave no trusted segment; shorten the rays
    for _ in range(6):
        if np.any(np.isfinite(rates)):
            break
        tau_max /= 4.0
        rates = _scan_growth(u, found, grid, tau_max)
    if not np.any(np.isfinite(rates)):
        return None, 0.0, r_hint
    i = int(np.nanargmax(rates))  # ties resolve to the smallest grid index
    return grid[i], float(rates[i]), max(r_hint, float(np.nanmax(rates)))


def _trusted_segment(u, found, e2, tau_hi, ratio, samples=256):
    """Longest ``[lo, hi]`` within ``(0, tau_hi]`` on which the error left by
    earlier subtractions stays below ``ratio`` times the remainder on every
    ray with direction ``e2``. ``(0, 0)`` when nothing is trusted."""
    if not found:
        return 0.0, tau_hi
    taus = np.linspace(0.0, tau_hi, samples + 1)[1:]
    ok = np.ones(samples, dtype=bool)
    for e1 in _orthonormal_complement(e2):
        th = ray(taus, e1, e2)
        ok &= _log_contamination(found, th) < u.log_abs(th) + math.log(ratio)
    lo, hi = _longest_run(ok)
    if hi - lo < 8:
        return 0.0, 0.0
    return float(taus[lo]), float(taus[hi - 1])


def _refine_dominant(u, found, e2, r, r_bound, target=1e-11, max_rounds=6, steer=True):
    """Fit the dominant term of the remainder ``u`` along ``e2``.

    ``e2`` is moved onto the fitted frequency direction (the maximiser of the
    growth) and the rays are lengthened until the single-term misfit drops
    below ``target``. Rays are cut where the error left by earlier
    subtractions would exceed 1e-8 of the remainder, with looser ratios
    when that leaves too short a segment. Returns
    ``(c, y, misfit, e2, tau_lo)``.
    """
    best = None
    tau_hi = 60.0 / max(MIN_SCALE, r)
    lim = MAX_LOG_GROWTH / max(MIN_SCALE, r_bound)
    for _ in range(max_rounds + 4):
        tau_hi = min(tau_hi, lim)
        lo, hi = 0.0, 0.0
        for ratio in TRUST_RATIOS:
            lo2, hi2 = _trusted_segment(u, found, e2, tau_hi, ratio)
            if hi2 - lo2 > hi - lo:
                lo, hi = lo2, hi2
            if hi - lo >= 0.25 * tau_hi:
                break
        if hi <= 0:
            if best is not None or tau_hi < 1.0 / max(MIN_SCALE, r):
                break
            tau_hi /= 4.0
            continue
        lo = max(lo, hi / 2)
        c, y, resid, _ = _fit_on_rays(u, found, e2, lo, hi, r_bound)
        if best is None or resid < best[2]:
            best = (c, y, resid, e2, lo)
        if resid < target or hi < tau_hi:
            break
        norm = np.linalg.norm(y)
        if steer and norm > 0:
            e2 = y / norm
        if tau_hi >= lim:
            break
        tau_hi *= 2.0
    if best is None:
        raise IllSeparatedError(f"no trusted ray segment along {e2}")
    return best


def _tilted_directions(e2, angles=(0.15, 0.3, 0.5, 0.75)):
    """Unit vectors at the given angles from ``e2`` (8 azimuths in 3D)."""
    e2 = np.asarray(e2, dtype=float)
    basis = _orthonormal_complement(e2)
    if len(basis) == 1:
        az = [basis[0], -basis[0]]
    else:
        phis = np.arange(8) * math.pi / 4
        az = [math.cos(p) * basis[0] + math.sin(p) * basis[1] for p in phis]
    return [math.cos(a) * e2 + math.sin(a) * v for a in angles for v in az]


def _retilt(u, found, c, y, misfit, e2, tau_lo, r_bound):
    """Look for a ray direction on which the term ``(c, y)`` is measured better.

    Along ``y/|y|`` an earlier, faster-growing term can shorten the trusted
    part of the rays so much that a neighbouring unfound term still leaks
    into the fit. Tilting the rays trades some growth for separation; the
    tilted fit is kept when it finds the same term with a smaller misfit.
    """
    best = (c, y, misfit, e2, tau_lo)
    norm = float(np.linalg.norm(y))
    for cand in _tilted_directions(e2):
        rate = float(cand @ y)
        if rate <= 0.2 * norm:
            continue
        try:
            fit = _refine_dominant(u, found, cand, rate, r_bound, max_rounds=2, steer=False)
        except (IllSeparatedError, DegenerateRayError):
            continue
        if np.linalg.norm(fit[1] - y) > 0.1 * norm:
            continue  # another term dominates there
        if fit[2] < best[2]:
            best = fit
    return best


def _dominance_window(u, c, y, e2, tau_lo, r_bound, floor=1e-10):
    """Sample points along ``e2`` from ``tau_lo`` out to where the term
    ``c exp(i y . theta)`` falls below ``floor`` relative to ``|u|``."""
    r = max(MIN_SCALE, r_bound)
    tau_max = min(MAX_LOG_GROWTH / r, max(400.0 / r, 2 * tau_lo))
    step = 0.5 / max(MIN_SCALE, r_bound)
    count = int(min(2000, max(64, math.ceil((tau_max - tau_lo) / step))))
    taus = np.linspace(tau_lo, tau_max, count)
    rays = []
    for e1 in _orthonormal_complement(e2):
        th = ray(taus, e1, e2)
        share = math.log(abs(c)) + (1j * (th @ y)).real - u.log_abs(th)
        keep = int(np.cumprod(share > math.log(floor)).sum())
        rays.append(th[: max(keep, 16)])
    return np.concatenate(rays)


def peel_dominant_term(u: FarFieldOracle, tol=1e-6):
    """Isolate and subtract the term of maximal exponential growth of ``u``.

    Returns ``(c, y, u_new)`` with ``u_new = u - c exp(i y . theta)``.
    Raises IllSeparatedError when ``u`` is bounded (growth <= tol) or its
    dominant term cannot be isolated.
    """
    found = [_Found(c, np.asarray(y), 1e-13) for c, y in u.subtracted]
    e2, r, r_bound = _best_direction(u, found, u.d)
    if e2 is None or r <= tol:
        raise IllSeparatedError(f"no unbounded growth (rate {r:.3g}); remainder is bounded")
    c, y, resid, _, _ = _refine_dominant(u, found, e2, r, r_bound)
    if resid > 0.1:
        raise IllSeparatedError(f"dominant term not separated (relative misfit {resid:.2g})")
    return c, y, u.minus(c, y)


def dominant_direction(u: FarFieldOracle) -> np.ndarray:
    """Unit vector maximising the exponential growth of ``u`` along the rays."""
    found = [_Found(c, np.asarray(y), 1e-13) for c, y in u.subtracted]
    e2, r, r_bound = _best_direction(u, found, u.d)
    if e2 is None or r <= BOUNDED_GROWTH:
        raise IllSeparatedError("oracle is bounded on every ray")
    return _refine_dominant(u, found, e2, r, r_bound)[3]


# ---------------------------------------------------------------------------
# joint refinement


def _polish(u: FarFieldOracle, terms: list, sphere=None):
    """Least-squares refinement of all ``(c_j, y_j)`` against ``u`` itself.

    Data are the dominance windows of the terms plus, optionally, real
    sphere points. Ray residuals are relative to ``|u|`` pointwise; sphere
    residuals relative to the sup of ``|u|`` on the sphere. Returns the new
    terms (with per-term error estimates) and the rms residual; the input is
    returned unchanged when the fit does not improve.
    """
    if not terms:
        return terms, 0.0
    d = u.d
    parts, owner = [], []
    for j, t in enumerate(terms):
        if t.thetas is not None and len(t.thetas):
            parts.append(t.thetas)
            owner.append(np.full(len(t.thetas), j))
    thetas = np.concatenate(parts) if parts else np.zeros((0, d), complex)
    owner = np.concatenate(owner) if owner else np.zeros(0, int)
    L = u.log_abs(thetas)
    good = np.isfinite(L)
    thetas, L, owner = thetas[good], L[good], owner[good]
    if sphere is not None:
        Ls = u.log_abs(sphere.astype(complex))
        top = np.max(Ls)
        if np.isfinite(top):
            thetas = np.concatenate([thetas, sphere.astype(complex)])
            L = np.concatenate([L, np.full(len(sphere), top)])
            owner = np.concatenate([owner, np.full(len(sphere), -1)])
    if not len(thetas):
        return terms, float("inf")
    target = u(thetas, shift=L)
    m = len(terms)

    def unpack(p):
        p = p.reshape(m, 2 + d)
        return p[:, 0] + 1j * p[:, 1], p[:, 2:]

    def basis(p):
        cs, ys = unpack(p)
        return cs, np.exp(1j * (thetas @ ys.T) - L[:, None])

    def fun(p):
        cs, E = basis(p)
        r = E @ cs - target
        return np.concatenate([r.real, r.imag])

    def jac(p):
        cs, E = basis(p)
        cols = []
        for j in range(m):
            cols.append(E[:, j])
            cols.append(1j * E[:, j])
            for a in range(d):
                cols.append(1j * thetas[:, a] * cs[j] * E[:, j])
        J = np.stack(cols, axis=1)
        return np.concatenate([J.real, J.imag])

    p0 = np.concatenate([[t.c.real, t.c.imag, *t.y] for t in terms])
    before = float(np.sqrt(np.mean(fun(p0) ** 2)))
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            sol = least_squares(fun, p0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15
            )
    except ValueError:
        return terms, before
    after = float(np.sqrt(np.mean(sol.fun**2)))
    if not np.isfinite(after) or after > before:
        return terms, before
    cs, ys = unpack(sol.x)
    _, E = basis(sol.x)
    res = np.abs((E @ cs) - target)
    out = []
    for j, (t, c, y) in enumerate(zip(terms, cs, ys)):
        if c == 0 or not np.all(np.isfinite(y)):
            return terms, before
        mine = owner == j
        if np.any(mine):
            share = np.abs(c * E[mine, j])
            # the early part of a window still carries undiscovered terms
            err = float(np.median(res[mine] / share))
        else:
            err = float(np.max(res) / abs(c)) if len(res) else 1e-3
        out.append(_Found(complex(c), np.array(y), min(1.0, max(err, 1e-14)), t.thetas))
    return out, after


# ---------------------------------------------------------------------------
# exponential-sum recovery


@dataclass(frozen=True)
class RecoveryReport:
    terms: ExponentialSum
    residual: float
    iterations: int
    termination: str  # "zero-reached", "constant-extracted" or "max-terms"
    tolerance: float = 0.0


def _remainder(u: FarFieldOracle, found) -> FarFieldOracle:
    r = u
    for t in found:
        r = r.minus(t.c, t.y)
    return r


def recover_exponential_sum(u: FarFieldOracle, max_terms=16, tol=1e-9) -> RecoveryReport:
    """Recover every ``(c_j, y_j)`` of the exponential sum behind ``u``.

    Each iteration either peels the term of maximal growth, extracts a
    constant (bounded remainder) or confirms that the remainder vanishes:
    its sup over 256 fixed real directions is below ``tol`` times the sup of
    ``u``. After every peel all terms found so far are refined jointly
    against ``u`` on the ray segments where each of them dominated; a last
    joint fit also uses the real sphere.
    """
    d = u.d
    if d not in (2, 3):
        raise DomainError("recovery implemented for d = 2 and d = 3")
    if max_terms < 1:
        raise DomainError("max_terms must be positive")
    test = unit_sphere_points(d, TEST_POINTS)
    scale0 = float(np.max(np.abs(u.on_sphere(test))))
    found: list = []

    def sup_residual(terms):
        if scale0 == 0:
            return 0.0
        return float(np.max(np.abs(_remainder(u, terms).on_sphere(test)))) / scale0

    def try_sphere_polish(terms, current):
        trial, _ = _polish(u, terms, sphere=test)
        res = sup_residual(trial)
        return (trial, res) if res < current else (terms, current)

    residual = sup_residual(found)
    iterations = 0
    termination = "max-terms"
    while True:
        iterations += 1
        if residual <= tol:
            termination = "zero-reached"
            break
        if len(found) >= max_terms:
            break
        rem = _remainder(u, found)
        e2, rate, r_bound = _best_direction(rem, found, d)
        if e2 is None or rate <= BOUNDED_GROWTH * max(1.0, r_bound):
            # bounded remainder: a single constant term
            c0 = complex(np.mean(rem.on_sphere(test)))
            found.append(_Found(c0, np.zeros(d), 1e-3, None))
            found, residual = try_sphere_polish(found, sup_residual(found))
            if residual <= tol:
                termination = "constant-extracted"
                break
            continue
        c, y, misfit, e2, tau_lo = _refine_dominant(rem, found, e2, rate, r_bound)
        if misfit > RETILT_MISFIT:
            c, y, misfit, e2, tau_lo = _retilt(rem, found, c, y, misfit, e2, tau_lo, r_bound)
        if not (np.all(np.isfinite(y)) and np.isfinite(c) and c != 0):
            raise IllSeparatedError(f"dominant term along {e2} could not be measured")
        window = _dominance_window(u, c, y, e2, tau_lo, r_bound)
        LOG.debug("peeled c=%s y=%s misfit=%.2g", c, y, misfit)
        found.append(_Found(c, y, max(misfit, 1e-13), window))
        found, _ = _polish(u, found)
        residual = sup_residual(found)
        if 0 < residual < 1e-3:
            found, residual = try_sphere_polish(found, residual)

    if found and termination != "max-terms":
        found, residual = try_sphere_polish(found, residual)
    terms = ExponentialSum(d, tuple(t.c for t in found), tuple(t.y for t in found))
    return RecoveryReport(terms, residual, iterations, termination, tol)


# ---------------------------------------------------------------------------
# inverse source and inverse scattering


def recover_source(
    a: FarFieldOracle, kappa, max_terms=16, tol=1e-9, full_output=False
):
    """Point sources from the far field ``theta -> a(kappa theta)``.

    The far field is an exponential sum with coefficients ``c_j/(2 pi)^d`` and
    frequencies ``-kappa y_j``; each recovered ``(C, Y)`` maps back to
    ``c = (2 pi)^d C`` and ``y = -Y/kappa``. With ``full_output`` the
    peeling report is returned as well.
    """
    kappa = check_wavenumber(kappa)
    report = recover_exponential_sum(a, max_terms=max_terms, tol=tol)
    scale = (2 * math.pi) ** a.d
    sources = [
        SourceTerm(-np.asarray(Y) / kappa, scale * C) for C, Y in report.terms.terms()
    ]
    return (sources, report) if full_output else sources


@dataclass(frozen=True)
class RecoveredPotential:
    """Output of :func:`recover_potential`.

    ``charges`` are ``q_j(k)`` at the main incident vector (zero for
    scatterers only seen at other probes); ``diagnostics`` holds the
    per-scatterer residual ``|(A q - b)_j|`` of the rebuilt Foldy-Lax system
    at that vector.
    """

    potential: Potential
    charges: np.ndarray
    diagnostics: np.ndarray
    probes_used: tuple = ()
    reports: tuple = ()
    strength_source: tuple = ()  # index of the probe each alpha came from (0 = main k)

    @property
    def iterations(self) -> int:
        return max((r.iterations for r in self.reports), default=0)


def default_probes(d: int, kappa: float, count: int = 8) -> np.ndarray:
    """Deterministic incident vectors on the sphere of radius ``kappa``."""
    return sphere_directions(d, kappa, count)


def _diagonal_from_charges(d, kappa, k, positions, q, j):
    """Solve the j-th Foldy-Lax row for ``A_jj`` given all charges at ``k``."""
    rhs = -np.exp(1j * (k @ positions[j]))
    for jj in range(len(positions)):
        if jj != j and q[jj] != 0:
            rhs -= green(d, positions[j] - positions[jj], kappa) * q[jj]
    return rhs / q[j]


def _match(positions, y, radius):
    for i, p in enumerate(positions):
        if np.linalg.norm(p - y) <= radius:
            return i
    return None


def recover_potential(
    f_oracle,
    kappa,
    k,
    probe_ks=None,
    max_terms=16,
    tol=1e-9,
    strength_tol=1e-6,
    check_rtol=1e-7,
    merge_radius=1e-6,
) -> RecoveredPotential:
    """Reconstruct a multipoint potential from scattering amplitudes at one energy.

    Parameters
    ----------
    f_oracle : callable or FarFieldOracle
        ``f_oracle(k)`` returns the oracle ``theta -> f(k, kappa theta)``. A
        bare oracle is accepted for the main ``k`` only (no probing).
    kappa : float
        Wavenumber.
    k : array_like
        Main incident vector, ``|k| = kappa``.
    probe_ks : array_like, optional
        Further incident vectors, tried in order. Default: 8 deterministic
        directions.
    max_terms, tol
        Passed to :func:`recover_exponential_sum`.
    strength_tol : float
        A strength is computed from a probe only when ``|q_j|`` exceeds
        ``strength_tol * max|q|`` there.
    check_rtol : float
        Relative sup-norm agreement required between the oracle at a probe
        and the amplitude predicted by the reconstruction.

    Notes
    -----
    At ``k`` the peeled terms ``(C_j, Y_j)`` give ``y_j = -Y_j/kappa`` and
    ``q_j(k) = (2 pi)^d C_j``. The j-th Foldy-Lax row then fixes ``A_jj``
    and hence ``alpha_j``. Scatterers with ``q_j(k) = 0`` are invisible at
    ``k``; every probe first compares its data with the prediction of the
    current reconstruction and is peeled only on disagreement or while some
    strength is still undetermined.
    """
    kappa = check_wavenumber(kappa)
    if isinstance(f_oracle, FarFieldOracle):
        fixed = f_oracle
        f_oracle = None
        d = fixed.d
    else:
        fixed = None
        d = np.asarray(k, dtype=float).size
    if d not in (2, 3):
        raise DomainError("inverse scattering implemented for d = 2 and d = 3")
    k = check_on_shell(np.asarray(k, dtype=float).reshape(d), kappa, "incident vector")
    probes = [k]
    if f_oracle is not None:
        extra = default_probes(d, kappa) if probe_ks is None else np.asarray(probe_ks, float)
        probes += [check_on_shell(np.asarray(p, float).reshape(d), kappa, "probe") for p in extra]

    positions: list = []
    alphas: dict = {}
    source: dict = {}
    reports = []
    used = []
    charges_at_k = None
    test = unit_sphere_points(d, TEST_POINTS)
    scale = (2 * math.pi) ** d

    def oracle_at(i):
        return fixed if i == 0 and fixed is not None else f_oracle(probes[i])

    def predicted_mismatch(u, probe):
        p = Potential(d, tuple(Scatterer(y, alphas[j]) for j, y in enumerate(positions)))
        data = u.on_sphere(test)
        ref = max(float(np.max(np.abs(data))), 1e-300)
        if p.n == 0:
            return float(np.max(np.abs(data))) / ref if np.any(data) else 0.0
        model = amplitude_oracle(solve_charges(p, kappa, probe)).on_sphere(test)
        return float(np.max(np.abs(data - model))) / ref

    for i, probe in enumerate(probes):
        undetermined = [j for j in range(len(positions)) if j not in alphas]
        u = oracle_at(i)
        if i > 0 and not undetermined:
            if predicted_mismatch(u, probe) <= check_rtol:
                continue
        report = recover_exponential_sum(u, max_terms=max_terms, tol=tol)
        reports.append(report)
        used.append(probe)
        q = np.zeros(len(positions), dtype=complex)
        for C, Y in report.terms.terms():
            y = -np.asarray(Y) / kappa
            j = _match(positions, y, merge_radius)
            if j is None:
                positions.append(y)
                q = np.append(q, 0)
                j = len(positions) - 1
            q[j] = scale * C
        pos = np.array(positions).reshape(len(positions), d)
        if i == 0:
            charges_at_k = q.copy()
        qmax = float(np.max(np.abs(q))) if q.size else 0.0
        for j in range(len(positions)):
            if j in alphas or abs(q[j]) <= strength_tol * qmax:
                continue
            ajj = _diagonal_from_charges(d, kappa, probe, pos, q, j)
            alphas[j] = complex(ajj - diagonal_shift(d, kappa))
            source[j] = i
        LOG.debug("probe %d: %d positions, %d strengths", i, len(positions), len(alphas))

    missing = [j for j in range(len(positions)) if j not in alphas]
    if missing:
        raise UndeterminedStrengthError(
            f"strengths of scatterers {missing} undetermined: their charges vanish "
            "at every probe direction",
            missing,
        )
    p = Potential(d, tuple(Scatterer(y, alphas[j]) for j, y in enumerate(positions)))
    charges = np.zeros(p.n, dtype=complex)
    charges[: len(charges_at_k)] = charges_at_k
    if p.n:
        A = interaction_matrix(p, kappa)
        b = -np.exp(1j * (p.positions @ k))
        diagnostics = np.abs(A @ charges - b)
    else:
        diagnostics = np.zeros(0)
    return RecoveredPotential(
        p,
        charges,
        diagnostics,
        tuple(tuple(v) for v in used),
        tuple(reports),
        tuple(source[j] for j in range(p.n)),
    )
