"""Numerical kernels: Bessel/Hankel functions of order zero, a small dense
complex solver and a two-dimensional Newton iteration.

Only numpy is used; the kernels are pure functions and hold no state.
"""

import math

import numpy as np

from .errors import DomainError, NonConvergenceError, ShapeError, SingularMatrixError

EULER_GAMMA = 0.57721566490153286060651209008240243

# Argument bands for the order-zero Bessel evaluation.
SERIES_MAX = 8.0
MILLER_MAX = 25.0

_SERIES_TERMS = 40
_MILLER_START = 80
_ASYMPTOTIC_TERMS = 20

PIVOT_RTOL = 1e-14


def _series_j0_y0(z):
    # Ascending series; |term| at z=8, k=40 is ~1e-48.
    w = 0.25 * z * z
    term = np.ones_like(z)
    j0 = np.ones_like(z)
    ysum = np.zeros_like(z)
    harmonic = 0.0
    for k in range(1, _SERIES_TERMS):
        term = -term * w / (k * k)
        harmonic += 1.0 / k
        j0 = j0 + term
        ysum = ysum - harmonic * term
    y0 = (2.0 / math.pi) * ((np.log(0.5 * z) + EULER_GAMMA) * j0 + ysum)
    return j0, y0


def _miller_j0_y0(z):
    """Backward recurrence for J_k normalised by J0 + 2*sum J_2k = 1, with the
    Neumann series Y0 = (2/pi)(ln(z/2)+gamma) J0 - (4/pi) sum (-1)^k J_2k / k."""
    jp1 = np.zeros_like(z)
    jk = np.full_like(z, 1e-30)
    norm = np.zeros_like(z)
    ysum = np.zeros_like(z)
    for k in range(_MILLER_START, 0, -1):
        jm1 = (2.0 * k / z) * jk - jp1
        if k % 2 == 0:
            half = k // 2
            norm = norm + 2.0 * jk
            ysum = ysum + (-1.0) ** half * jk / half
        jp1, jk = jk, jm1
        big = np.abs(jk) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            jk, jp1, norm, ysum = jk * scale, jp1 * scale, norm * scale, ysum * scale
    norm = norm + jk
    j0 = jk / norm
    y0 = (2.0 / math.pi) * ((np.log(0.5 * z) + EULER_GAMMA) * j0 - 2.0 * ysum / norm)
    return j0, y0


def _asymptotic_h0(z):
    # H0(z) ~ sqrt(2/(pi z)) e^{i(z - pi/4)} sum_k i^k a_k / z^k
    total = np.ones_like(z, dtype=complex)
    a = 1.0
    for k in range(1, _ASYMPTOTIC_TERMS):
        a *= -((2 * k - 1) ** 2) / (8.0 * k)
        total = total + (1j ** k) * a / z**k
    return np.sqrt(2.0 / (math.pi * z)) * np.exp(1j * (z - 0.25 * math.pi)) * total


def bessel_j0_y0(z):
    """Return ``(J0(z), Y0(z))`` for real ``z > 0`` (scalar or array)."""
    h = hankel0_first_kind(z)
    return np.real(h), np.imag(h)


def hankel0_first_kind(z):
    """Hankel function H0^(1)(z) = J0(z) + i Y0(z) for real positive arguments.

    Three bands are used: the ascending power series for z <= 8, Miller's
    backward recurrence for 8 < z <= 25 and the Hankel asymptotic expansion
    (20 terms) beyond. Relative accuracy is better than 1e-12 on (0, 1e4].

    Parameters
    ----------
    z : float or array_like
        Strictly positive argument(s).

    Returns
    -------
    complex or ndarray of complex
    """
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("hankel0_first_kind requires finite z > 0")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty(arr.shape, dtype=complex)

    low = arr <= SERIES_MAX
    mid = (arr > SERIES_MAX) & (arr <= MILLER_MAX)
    high = arr > MILLER_MAX
    if np.any(low):
        j0, y0 = _series_j0_y0(arr[low])
        out[low] = j0 + 1j * y0
    if np.any(mid):
        j0, y0 = _miller_j0_y0(arr[mid])
        out[mid] = j0 + 1j * y0
    if np.any(high):
        out[high] = _asymptotic_h0(arr[high])
    return complex(out[0]) if scalar else out


def inf_norm(a):
    """Max row sum of |a_ij| for a matrix, max |a_i| for a vector."""
    a = np.asarray(a)
    if a.ndim == 1:
        return float(np.max(np.abs(a))) if a.size else 0.0
    return float(np.max(np.sum(np.abs(a), axis=1))) if a.size else 0.0


def solve_complex_linear(A, b):
    """Solve ``A x = b`` by Gaussian elimination with partial (row) pivoting.

    Raises SingularMatrixError when a pivot is below ``1e-14 * ||A||_inf``.
    """
    A = np.array(A, dtype=complex)
    b = np.array(b, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if b.shape != (n,):
        raise ShapeError(f"right-hand side has shape {b.shape}, expected ({n},)")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise DomainError("non-finite entries in linear system")
    if n == 0:
        return np.zeros(0, dtype=complex)

    threshold = PIVOT_RTOL * inf_norm(A)
    for col in range(n):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[piv, col]) <= threshold:
            raise SingularMatrixError(
                f"pivot {abs(A[piv, col]):.3e} in column {col} below {threshold:.3e}; "
                "det(A) != 0 fails"
            )
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        factors = A[col + 1:, col] / A[col, col]
        A[col + 1:, col:] -= np.outer(factors, A[col, col:])
        b[col + 1:] -= factors * b[col]

    x = np.zeros(n, dtype=complex)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - A[row, row + 1:] @ x[row + 1:]) / A[row, row]
    return x


def _fd_jacobian(F, x, fx, rel_step):
    J = np.empty((2, 2))
    for i in range(2):
        h = rel_step * max(1.0, abs(x[i]))
        e = np.zeros(2)
        e[i] = h
        J[:, i] = (np.asarray(F(x + e), float) - np.asarray(F(x - e), float)) / (2 * h)
    return J


def newton2d(F, x0, tol=1e-12, max_iter=50, rel_step=1e-6, full_output=False):
    """Newton iteration for ``F: R^2 -> R^2`` with central-difference Jacobians.

    A step that increases ``||F||_inf`` is halved up to 30 times.
    Returns ``x`` with ``||F(x)||_inf <= tol``; with ``full_output=True``
    returns ``(x, iterations)``.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    x = np.array(x0, dtype=float)
    fx = np.asarray(F(x), dtype=float)
    best, best_res = x.copy(), float(np.max(np.abs(fx)))
    for it in range(max_iter + 1):
        res = float(np.max(np.abs(fx)))
        if res < best_res:
            best, best_res = x.copy(), res
        if res <= tol:
            return (x, it) if full_output else x
        if it == max_iter:
            break
        J = _fd_jacobian(F, x, fx, rel_step)
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            raise NonConvergenceError("singular Jacobian in newton2d", best, best_res)
        t = 1.0
        for _ in range(30):
            trial = x + t * step
            ft = np.asarray(F(trial), dtype=float)
            if np.all(np.isfinite(ft)) and np.max(np.abs(ft)) < res:
                break
            t *= 0.5
        x, fx = trial, ft
    raise NonConvergenceError(
        f"newton2d did not reach tol={tol:g} in {max_iter} iterations", best, best_res
    )
