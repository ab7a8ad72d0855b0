"""Shared fixtures and random-instance generators."""

import numpy as np
import pytest

from pointscatter.model import Potential, SourceTerm

TWO_POINT_K = np.array([0.05, 0.05])
TWO_POINT_KAPPA = float(np.linalg.norm(TWO_POINT_K))


@pytest.fixture
def two_point():
    """d=2, unit strengths at (0,0) and (0.1,0.15), incident k=(0.05,0.05)."""
    p = Potential.from_arrays(2, [[0.0, 0.0], [0.1, 0.15]], [1.0, 1.0])
    return p, TWO_POINT_KAPPA, TWO_POINT_K.copy()


def random_positions(rng, d, n, radius=3.0, min_sep=0.2):
    pts = []
    while len(pts) < n:
        x = rng.normal(size=d)
        x *= radius * rng.uniform() ** (1 / d) / np.linalg.norm(x)
        if all(np.linalg.norm(x - q) >= min_sep for q in pts):
            pts.append(x)
    return np.array(pts)


def random_potential(rng, d, n=None, real=True):
    n = int(rng.integers(1, 6)) if n is None else n
    alphas = rng.uniform(0.5, 2.0, n)
    if not real:
        alphas = alphas + 1j * rng.uniform(-1, 1, n)
    return Potential.from_arrays(d, random_positions(rng, d, n), alphas)


def random_sources(rng, d, n=None):
    n = int(rng.integers(1, 6)) if n is None else n
    ys = random_positions(rng, d, n)
    cs = rng.uniform(0.5, 2.0, n) * np.exp(2j * np.pi * rng.uniform(size=n))
    return [SourceTerm(y, c) for y, c in zip(ys, cs)]


def random_unit(rng, d):
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


def match_points(truth, found):
    """Index of the nearest ``found`` row for each ``truth`` row and the distances."""
    truth = np.asarray(truth, dtype=float)
    found = np.asarray(found, dtype=float)
    idx, dist = [], []
    for t in truth:
        r = np.linalg.norm(found - t, axis=1)
        i = int(np.argmin(r))
        idx.append(i)
        dist.append(float(r[i]))
    return np.array(idx), np.array(dist)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
