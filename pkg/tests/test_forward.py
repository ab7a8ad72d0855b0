import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_potential, random_unit
from pointscatter.errors import SingularityError
from pointscatter.forward import (
    amplitude_constant,
    amplitude_oracle,
    diagonal_shift,
    green,
    incident_vector,
    interaction_matrix,
    scattered_field,
    scattering_amplitude,
    singular_coefficient,
    solve_charges,
    source_far_field,
    source_field,
    source_oracle,
    total_field,
)
from pointscatter.model import Potential, SourceTerm, sphere_directions, unit_sphere_points
from pointscatter.numerics import inf_norm

mpmath.mp.dps = 30


# --- Green function --------------------------------------------------------


def test_green_d3_value():
    ref = complex(-mpmath.exp(1j) / (4 * mpmath.pi))
    assert abs(green(3, (1, 0, 0), 1.0) - ref) < 1e-15
    # the commonly quoted -0.043004 - 0.066974i is only good to about 1.4e-5
    assert abs(ref - (-0.043004 - 0.066974j)) < 2e-5


def test_green_d1_value():
    ref = complex(mpmath.exp(1j) / 4j)
    assert abs(green(1, 0.5, 2.0) - ref) < 1e-15
    assert abs(ref - (0.210368 - 0.135076j)) < 1e-6


def test_green_d2_value():
    ref = complex(-0.25j * mpmath.hankel1(0, 1))
    assert abs(green(2, (1, 0), 1.0) - ref) < 1e-12
    assert abs(ref - (0.022064 - 0.191299j)) < 1e-6


def test_green_singular_at_origin():
    with pytest.raises(SingularityError):
        green(3, (0, 0, 0), 1.0)


def _fd_laplacian(fun, x, h):
    out = -2 * len(x) * fun(x)
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        out += fun(x + e) + fun(x - e)
    return out / h**2


@pytest.mark.parametrize("d", [1, 2, 3])
def test_green_helmholtz_residual(d):
    rng = np.random.default_rng(d)
    kappa = 1.3
    for _ in range(30):
        x = random_unit(rng, d) * rng.uniform(0.5, 5)
        G = lambda v: green(d, v, kappa)  # noqa: E731
        res = _fd_laplacian(G, x, 1e-4) + kappa**2 * G(x)
        assert abs(res) <= 1e-4 * (1 + abs(G(x))) * kappa**2


def test_amplitude_constant_d3():
    assert abs(amplitude_constant(3, 2.0) - (-math.pi * 1j * 2 * math.pi * (-1j))) < 1e-12


# --- Foldy-Lax system ------------------------------------------------------


def test_matrix_single_scatterer_d3():
    A = interaction_matrix(Potential.from_arrays(3, [[0, 0, 0]], [0.5]), 1.0)
    assert np.allclose(A, [[0.5 - 1j / (4 * math.pi)]], atol=1e-15)


def test_matrix_single_scatterer_d2():
    A = interaction_matrix(Potential.from_arrays(2, [[0, 0]], [1.0]), 1.0)
    assert np.allclose(A, [[1 - 0.25j]], atol=1e-15)


def test_matrix_exactly_symmetric():
    rng = np.random.default_rng(3)
    for d in (1, 2, 3):
        p = random_potential(rng, d, 5, real=False)
        A = interaction_matrix(p, 0.9)
        assert np.array_equal(A, A.T)


def test_incident_vector_examples(two_point):
    p = Potential.from_arrays(2, [[0, 0], [math.pi / 2, 0]], [1, 1])
    b = incident_vector(p, (1, 0))
    assert b[0] == -1
    assert abs(b[1] - (-1j)) < 1e-15
    p, _, k = two_point
    assert abs(incident_vector(p, k)[1] - (-np.exp(0.0125j))) < 1e-15


def test_single_scatterer_charge_d3():
    alpha, kappa = 0.7 + 0.2j, 1.4
    s = solve_charges(Potential.from_arrays(3, [[0, 0, 0]], [alpha]), kappa, (0, kappa, 0))
    assert abs(s.q[0] - (-1 / (alpha - 1j * kappa / (4 * math.pi)))) < 1e-15


def test_two_point_charges(two_point):
    s = solve_charges(*two_point)
    assert np.all(np.abs(s.q - (0.51 - 1.86j)) <= 0.01)


def test_fitted_structure_charges():
    kappa, k, y2 = 1.0, np.array([1.0, 0.0]), np.array([0.0, 1.0])
    g = green(2, y2, kappa)
    a1 = g - diagonal_shift(2, kappa)
    p = Potential.from_arrays(2, [[0, 0], y2], [a1, a1 + 1])
    s = solve_charges(p, kappa, k)
    A = s.A
    assert abs(A[0, 0] - g) < 1e-15 and A[0, 1] == g and A[1, 0] == g
    assert np.allclose(s.q, [-1 / g, 0], atol=1e-14)
    f, fp = scattering_amplitude(s, sphere_directions(2, kappa, 16))
    assert np.allclose(f, -1 / (g * (2 * math.pi) ** 2), atol=1e-15)
    assert np.allclose(fp, amplitude_constant(2, kappa) * f, atol=1e-15)


def test_foldy_lax_residual_random():
    rng = np.random.default_rng(5)
    for _ in range(40):
        d = int(rng.integers(1, 4))
        p = random_potential(rng, d, real=bool(rng.integers(2)))
        kappa = rng.uniform(0.3, 3)
        s = solve_charges(p, kappa, kappa * random_unit(rng, d))
        assert s.residual() <= 1e-12 * (1 + inf_norm(s.A) * inf_norm(s.q))


# --- fields and amplitudes -------------------------------------------------


def test_free_field():
    s = solve_charges(Potential(2, ()), 1.0, (0.6, 0.8))
    x = np.array([[1.0, 2.0], [-3.0, 0.5]])
    assert np.allclose(total_field(s, x), np.exp(1j * x @ [0.6, 0.8]))
    f, _ = scattering_amplitude(s, (1.0, 0.0))
    assert f == 0


def test_total_field_singular_point(two_point):
    s = solve_charges(*two_point)
    with pytest.raises(SingularityError):
        total_field(s, (0.1, 0.15))


def test_total_field_solves_helmholtz_away_from_scatterers():
    rng = np.random.default_rng(8)
    p = random_potential(rng, 3, 3)
    kappa = 1.1
    s = solve_charges(p, kappa, kappa * random_unit(rng, 3))
    for _ in range(10):
        x = random_unit(rng, 3) * 5
        lap = _fd_laplacian(lambda v: total_field(s, v), x, 1e-4)
        assert abs(lap + kappa**2 * total_field(s, x)) <= 1e-4 * (1 + abs(total_field(s, x)))


def test_single_scatterer_amplitude_isotropic():
    s = solve_charges(Potential.from_arrays(3, [[0, 0, 0]], [1.0]), 1.0, (1, 0, 0))
    f, _ = scattering_amplitude(s, sphere_directions(3, 1.0, 20))
    assert np.allclose(f, s.q[0] / (2 * math.pi) ** 3, atol=1e-16)


def test_far_field_consistency():
    rng = np.random.default_rng(21)
    for _ in range(6):
        d = int(rng.integers(2, 4))
        p = random_potential(rng, d)
        kappa = 1.0
        k = kappa * random_unit(rng, d)
        s = solve_charges(p, kappa, k)
        w = random_unit(rng, d)
        _, fp = scattering_amplitude(s, kappa * w)

        def E(R):
            x = R * w
            far = R ** ((d - 1) / 2) * (total_field(s, x) - np.exp(1j * k @ x))
            return abs(far - np.exp(1j * kappa * R) * fp)

        assert E(1e4) < E(1e3) / 5
        assert E(1e4) <= 1e-3 * (1 + abs(fp))


def test_amplitude_oracle_agrees_with_amplitude():
    rng = np.random.default_rng(2)
    p = random_potential(rng, 2, 4)
    s = solve_charges(p, 1.0, (0, 1))
    th = unit_sphere_points(2, 64)
    f, _ = scattering_amplitude(s, th)
    assert np.allclose(amplitude_oracle(s).on_sphere(th), f, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_nonzero_potential_never_transparent(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 4))
    p = random_potential(rng, d)
    kappa = 1.0
    s = solve_charges(p, kappa, kappa * random_unit(rng, d))
    _, fp = scattering_amplitude(s, sphere_directions(d, kappa, 128))
    assert np.max(np.abs(fp)) > 1e-10


@pytest.mark.parametrize(
    "d, q, expected", [(3, 4 * math.pi, -1), (2, 2 * math.pi, 1), (1, 0.3 + 2j, 0.3 + 2j)]
)
def test_singular_coefficient(d, q, expected):
    alpha = -1 / q - diagonal_shift(d, 1.0)  # makes q_1 = q for y = 0
    s = solve_charges(Potential.from_arrays(d, [np.zeros(d)], [alpha]), 1.0, np.eye(d)[0])
    assert abs(s.q[0] - q) < 1e-12 * abs(q)
    assert abs(singular_coefficient(s, 0) - expected) < 1e-12


def test_singular_coefficient_matches_field_expansion_d3():
    p = Potential.from_arrays(3, [[0, 0, 0], [1, 0, 0]], [1.0, 0.5])
    s = solve_charges(p, 1.0, (0, 0, 1))
    r = 1e-6
    x = np.array([1 + r, 0, 0])
    assert abs(r * scattered_field(s, x) - singular_coefficient(s, 1)) < 1e-5


def test_singular_coefficient_index_checked(two_point):
    s = solve_charges(*two_point)
    with pytest.raises(IndexError):
        singular_coefficient(s, 2)


# --- sources ---------------------------------------------------------------


def test_single_source_field():
    x = np.array([0.3, -1.2, 2.0])
    r = np.linalg.norm(x)
    v = source_field([SourceTerm((0, 0, 0), 1)], 1.5, x)
    assert abs(v - (-np.exp(1.5j * r) / (4 * math.pi * r))) < 1e-15


def test_empty_source():
    assert source_field([], 1.0, np.array([1.0, 2.0])) == 0
    a, ap = source_far_field([], 1.0, np.array([1.0, 0.0]))
    assert a == 0 and ap == 0


def test_symmetric_sources_even_field():
    src = [SourceTerm((1, 2), 0.7), SourceTerm((-1, -2), 0.7)]
    x = np.array([0.4, -3.0])
    assert abs(source_field(src, 1.0, x) - source_field(src, 1.0, -x)) < 1e-15


@pytest.mark.parametrize("d", [2, 3])
def test_unit_source_far_field(d):
    a, _ = source_far_field([SourceTerm(np.zeros(d), 1)], 1.0, sphere_directions(d, 1.0, 8))
    assert np.allclose(a, 1 / (2 * math.pi) ** d)


def test_source_far_field_value():
    a, ap = source_far_field([SourceTerm((1, 0), 2)], 1.0, np.array([1.0, 0.0]))
    assert abs(a - 2 * np.exp(-1j) / (2 * math.pi) ** 2) < 1e-16
    assert abs(ap - amplitude_constant(2, 1.0) * a) < 1e-16


def test_source_oracle_matches_far_field():
    src = [SourceTerm((1, 0.5), 1 + 1j), SourceTerm((-0.3, 2), 0.6)]
    th = unit_sphere_points(2, 20)
    a, _ = source_far_field(src, 2.0, 2.0 * th)
    assert np.allclose(source_oracle(src, 2.0, 2).on_sphere(th), a, atol=1e-15)
