import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import match_points, random_positions, random_potential, random_sources, random_unit
from pointscatter.errors import IllSeparatedError, UndeterminedStrengthError
from pointscatter.forward import amplitude_oracle, diagonal_shift, green, solve_charges, source_oracle
from pointscatter.model import ExponentialSum, FarFieldOracle, Potential, SourceTerm
from pointscatter.recover import (
    TangentFramePoint,
    complex_direction,
    dominant_direction,
    growth_rate,
    peel_dominant_term,
    recover_exponential_sum,
    recover_potential,
    recover_source,
)


def oracle(d, cs, ys):
    return FarFieldOracle(ExponentialSum(d, tuple(cs), tuple(np.asarray(ys, dtype=float))))


def potential_oracles(p, kappa):
    return lambda k: amplitude_oracle(solve_charges(p, kappa, k))


def assert_same_sum(report, cs, ys, ytol=1e-6, ctol=1e-6):
    got_c, got_y = report.terms.c, report.terms.y
    assert len(got_c) == len(cs)
    idx, dist = match_points(ys, got_y)
    assert len(set(idx)) == len(cs)
    assert np.max(dist, initial=0) <= ytol
    for i, c in zip(idx, cs):
        assert abs(got_c[i] - c) <= ctol * abs(c)


# --- complex frame ---------------------------------------------------------


def test_frame_point_real_slice():
    th = complex_direction(TangentFramePoint(0.0, (0.6, 0.8), (-0.8, 0.6)))
    assert np.allclose(th, (0.6, 0.8))


def test_frame_point_example():
    th = complex_direction(TangentFramePoint(1.0, (1, 0), (0, 1)))
    assert np.allclose(th, (math.sqrt(2), -1j))


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e3), st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_frame_point_on_complex_sphere(tau, seed, d):
    rng = np.random.default_rng(seed)
    e2 = random_unit(rng, d)
    e1 = rng.normal(size=d)
    e1 -= (e1 @ e2) * e2
    e1 /= np.linalg.norm(e1)
    th = complex_direction(TangentFramePoint(tau, e1, e2))
    assert abs(th @ th - 1) <= 1e-12 * (1 + tau**2)


def test_frame_point_rejects_non_orthogonal():
    with pytest.raises(Exception):
        TangentFramePoint(1.0, (1, 0), (1, 0))


# --- growth rate and peeling -----------------------------------------------


def test_growth_rate_single_term():
    u = oracle(2, [1.5 - 0.5j], [(3, 0)])
    assert abs(growth_rate(u, (0, 1), (1, 0), 50 / 3) - 3) <= 1e-6 * 4


def test_growth_rate_constant():
    u = oracle(2, [2.0], [(0, 0)])
    assert abs(growth_rate(u, (0, 1), (1, 0), 50)) <= 1e-9


def test_growth_rate_two_terms():
    u = oracle(2, [2, 1], [(2, 0), (0, 1)])
    assert abs(growth_rate(u, (0, 1), (1, 0), 25) - 2) <= 1e-6


def test_peel_single_term():
    u = oracle(2, [5], [(1, 2)])
    c, y, rest = peel_dominant_term(u)
    assert abs(c - 5) <= 1e-6 and np.allclose(y, (1, 2), atol=1e-6)
    assert np.max(np.abs(rest.on_sphere(np.eye(2)))) <= 1e-6


def test_peel_leaves_constant():
    u = oracle(3, [3, 2], [(0, 0, 0), (0, 0, 4)])
    c, y, rest = peel_dominant_term(u)
    assert abs(c - 2) <= 1e-6 and np.allclose(y, (0, 0, 4), atol=1e-6)
    th = np.array([[1, 0, 0], [0, 0.6, 0.8]])
    assert np.allclose(rest.on_sphere(th), 3, atol=1e-5)


def test_peel_bounded_raises():
    with pytest.raises(IllSeparatedError):
        peel_dominant_term(oracle(2, [3], [(0, 0)]))


def test_dominant_direction_attains_maximum():
    rng = np.random.default_rng(4)
    for d in (2, 3):
        ys = random_positions(rng, d, 4)
        u = oracle(d, rng.uniform(0.5, 2, 4), ys)
        e = dominant_direction(u)
        probes = rng.normal(size=(10_000, d))
        probes /= np.linalg.norm(probes, axis=1)[:, None]
        g_star = np.max(ys @ e)
        assert g_star >= np.max(probes @ ys.T) - 1e-6


# --- exponential sums ------------------------------------------------------


def test_recover_zero_function():
    r = recover_exponential_sum(oracle(2, [], []))
    assert r.terms.n == 0 and r.termination == "zero-reached"


def test_recover_constant():
    r = recover_exponential_sum(oracle(3, [0.3 - 2j], [(0, 0, 0)]))
    assert r.terms.n == 1
    assert abs(r.terms.c[0] - (0.3 - 2j)) <= 1e-12
    assert np.allclose(r.terms.y[0], 0, atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("d", [2, 3])
def test_recover_random_sum(seed, d):
    rng = np.random.default_rng(100 * d + seed)
    n = int(rng.integers(1, 6))
    ys = random_positions(rng, d, n)
    cs = rng.uniform(0.5, 2, n) * np.exp(2j * np.pi * rng.uniform(size=n))
    r = recover_exponential_sum(oracle(d, cs, ys))
    assert r.iterations <= n + 1
    assert_same_sum(r, cs, ys)


def test_recover_sum_with_origin_term():
    ys = [(0, 0), (1, -1), (-2, 0.5)]
    cs = [1.0, 0.5j, -1.5]
    r = recover_exponential_sum(oracle(2, cs, ys))
    assert r.iterations <= 4
    assert_same_sum(r, cs, ys)


def test_recover_is_linear_in_scale():
    rng = np.random.default_rng(9)
    ys = random_positions(rng, 2, 3)
    cs = rng.uniform(0.5, 2, 3) + 0j
    u = oracle(2, cs, ys)
    s = 0.7 - 1.9j
    a = recover_exponential_sum(u)
    b = recover_exponential_sum(u.scaled_by(s))
    idx, dist = match_points(a.terms.y, b.terms.y)
    assert np.max(dist) <= 1e-9
    assert np.allclose(b.terms.c[idx], s * a.terms.c, rtol=1e-9)


def test_recover_max_terms():
    ys = [(1, 0), (0, 2), (-1.5, -1)]
    r = recover_exponential_sum(oracle(2, [1, 1, 1], ys), max_terms=2)
    assert r.termination == "max-terms"


# --- sources ---------------------------------------------------------------


def test_recover_empty_source():
    assert recover_source(source_oracle([], 1.0, 2), 1.0) == []


def test_recover_single_source():
    src = [SourceTerm((1, 0), 1 + 1j)]
    (got,) = recover_source(source_oracle(src, 2.0, 2), 2.0)
    assert abs(got.c - (1 + 1j)) <= 1e-6
    assert np.allclose(got.y, (1, 0), atol=1e-6)


def test_recover_mirrored_sources():
    src = [SourceTerm((0.5, 1.2), 0.8), SourceTerm((-0.5, -1.2), -1.3j)]
    got = recover_source(source_oracle(src, 1.0, 2), 1.0)
    assert len(got) == 2
    for s in src:
        (m,) = [g for g in got if np.linalg.norm(np.subtract(g.y, s.y)) <= 1e-6]
        assert abs(m.c - s.c) <= 1e-6 * abs(s.c)


@pytest.mark.parametrize("d", [2, 3])
def test_recover_random_sources(d):
    rng = np.random.default_rng(50 + d)
    for _ in range(3):
        src = random_sources(rng, d)
        got = recover_source(source_oracle(src, 1.0, d), 1.0)
        assert len(got) == len(src)
        idx, dist = match_points([s.y for s in src], [g.y for g in got])
        assert np.max(dist) <= 1e-6
        for i, s in zip(idx, src):
            assert abs(got[i].c - s.c) <= 1e-6 * abs(s.c)


# --- potentials ------------------------------------------------------------


def assert_same_potential(truth: Potential, got: Potential, ytol=1e-6, atol=1e-5):
    assert got.n == truth.n
    idx, dist = match_points(truth.positions, got.positions)
    assert len(set(idx)) == truth.n
    assert np.max(dist, initial=0) <= ytol
    assert np.max(np.abs(got.alphas[idx] - truth.alphas), initial=0) <= atol


def test_recover_two_point(two_point):
    p, kappa, k = two_point
    rec = recover_potential(potential_oracles(p, kappa), kappa, k)
    assert_same_potential(p, rec.potential)
    assert len(rec.probes_used) == 1
    assert np.max(rec.diagnostics) <= 1e-10


def test_recover_two_point_from_bare_oracle(two_point):
    p, kappa, k = two_point
    rec = recover_potential(amplitude_oracle(solve_charges(p, kappa, k)), kappa, k)
    assert_same_potential(p, rec.potential)


@pytest.mark.parametrize("d", [2, 3])
def test_recover_single_scatterer(d):
    alpha = 0.4 - 0.3j
    p = Potential.from_arrays(d, [np.zeros(d)], [alpha])
    k = np.eye(d)[0] * 1.7
    rec = recover_potential(potential_oracles(p, 1.7), 1.7, k)
    assert_same_potential(p, rec.potential, atol=1e-9)


def fitted(d=2, kappa=1.0):
    k = kappa * np.eye(d)[0]
    y2 = np.eye(d)[1]
    g = green(d, y2, kappa)
    a1 = g - diagonal_shift(d, kappa)
    return Potential.from_arrays(d, [np.zeros(d), y2], [a1, a1 + 1]), kappa, k


def test_hidden_scatterer_needs_second_probe():
    p, kappa, k = fitted()
    probe = kappa * np.array([0.6, 0.8])
    rec = recover_potential(potential_oracles(p, kappa), kappa, k, probe_ks=[probe])
    assert_same_potential(p, rec.potential, atol=1e-8)
    assert len(rec.probes_used) == 2
    assert sorted(rec.strength_source) == [0, 1]


def test_hidden_scatterer_without_probes_is_invisible():
    p, kappa, k = fitted()
    rec = recover_potential(amplitude_oracle(solve_charges(p, kappa, k)), kappa, k)
    assert rec.potential.n == 1
    assert np.allclose(rec.potential.positions[0], 0, atol=1e-9)


def test_undetermined_strength_raises():
    # data with a second position whose charge is far below strength_tol and
    # no further probes to fall back on
    p, kappa, k = fitted()
    data = amplitude_oracle(solve_charges(p, kappa, k))
    tiny = FarFieldOracle(ExponentialSum(2, (data.backing.c[0], 1e-12), (data.backing.y[0], (0.0, -1.0))))
    with pytest.raises(UndeterminedStrengthError) as info:
        recover_potential(tiny, kappa, k, tol=1e-14)
    assert info.value.indices


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("d", [2, 3])
def test_recover_random_potentials(seed, d):
    rng = np.random.default_rng(1000 * d + seed)
    p = random_potential(rng, d)
    k = random_unit(rng, d)
    rec = recover_potential(potential_oracles(p, 1.0), 1.0, k)
    assert_same_potential(p, rec.potential)
    assert rec.iterations <= p.n + 1


def test_recover_complex_strengths():
    rng = np.random.default_rng(77)
    p = random_potential(rng, 2, 3, real=False)
    rec = recover_potential(potential_oracles(p, 1.0), 1.0, (1.0, 0.0))
    assert_same_potential(p, rec.potential)


@pytest.mark.parametrize("which", ["position", "strength"])
def test_nearby_potentials_recovered_apart(two_point, which):
    p, kappa, k = two_point
    if which == "position":
        q = Potential.from_arrays(2, [[0, 0], [0.101, 0.15]], [1, 1])
    else:
        q = Potential.from_arrays(2, [[0, 0], [0.1, 0.15]], [1, 1.001])
    a = recover_potential(potential_oracles(p, kappa), kappa, k).potential
    b = recover_potential(potential_oracles(q, kappa), kappa, k).potential
    assert_same_potential(p, a)
    assert_same_potential(q, b)
    idx, dist = match_points(a.positions, b.positions)
    change = np.max(dist) if which == "position" else np.max(np.abs(a.alphas - b.alphas[idx]))
    assert change >= 0.9e-3
