import numpy as np
import pytest
from hypothesis import given, strategies as st

from diagah.errors import BoundViolated, EmptySet, Overlap
from diagah.metric_space import (DEGENERATE_SENTINEL, FiniteMetricSpace, ScalarFunction, Subset,
                                 ball, bounded_extension, continuity_delta, distance_to,
                                 modulus_eta, urysohn)
from diagah.diagonal_hom import PointMap

from conftest import path_metric_space, random_space


def test_ball_examples(line3):
    assert ball(line3, Subset.of(line3, [2]), 0.6) == Subset.of(line3, [1, 2])
    assert ball(line3, Subset.empty(line3), 1.0) == Subset.empty(line3)
    assert ball(line3, Subset.all(line3), 0.1) == Subset.all(line3)


def test_ball_is_strict(line3):
    # d(0.5, 1) = 0.5 exactly; a radius of 0.5 must exclude it
    assert ball(line3, Subset.of(line3, [2]), 0.5) == Subset.of(line3, [2])


def test_ball_rejects_nonpositive_radius(line3):
    with pytest.raises(ValueError):
        ball(line3, Subset.of(line3, [0]), 0.0)


def test_urysohn_examples():
    X = FiniteMetricSpace.from_coords([0.0, 1.0, 2.0])
    f = urysohn(X, Subset.of(X, [0]), Subset.of(X, [2]))
    assert f.values.tolist() == [0.0, 0.5, 1.0]


def test_urysohn_errors(line3):
    with pytest.raises(EmptySet):
        urysohn(line3, Subset.empty(line3), Subset.of(line3, [0]))
    with pytest.raises(Overlap):
        urysohn(line3, Subset.of(line3, [0, 1]), Subset.of(line3, [1]))


def test_bounded_extension_examples():
    X = FiniteMetricSpace.from_coords([0.0, 1.0, 2.0])
    r = 0.7
    g = bounded_extension(X, Subset.of(X, [0, 2]), np.array([r, -r]), r)
    assert g.values[0] == r and g.values[2] == -r
    assert g.values[1] == pytest.approx(0.0, abs=1e-15)

    full = bounded_extension(X, Subset.all(X), np.array([0.1, -0.2, 0.3]), 1.0)
    assert full.values.tolist() == [0.1, -0.2, 0.3]

    const = bounded_extension(X, Subset.of(X, [1]), np.array([0.25 + 0.5j]), 1.0)
    assert np.all(const.values == 0.25 + 0.5j)


def test_bounded_extension_checks_bound(line3):
    with pytest.raises(BoundViolated):
        bounded_extension(line3, Subset.of(line3, [0]), np.array([2.0]), 1.0)
    with pytest.raises(EmptySet):
        bounded_extension(line3, Subset.empty(line3), np.zeros(0), 1.0)


def test_bounded_extension_matrix_values():
    X = FiniteMetricSpace.interval(0, 1, 21)
    Y = Subset.of(X, [0, 20])
    vals = np.array([[[0.3, 0.1j], [0, -0.2]], [[-0.1, 0], [0.2, 0.25]]])
    g = bounded_extension(X, Y, vals, 0.4)
    assert np.array_equal(g.values[[0, 20]], vals)
    assert np.linalg.norm(g.values, 2, axis=(1, 2)).max() <= 0.4 * (1 + 1e-15)


def test_modulus_eta_examples():
    X = FiniteMetricSpace.interval(0, 1, 101)
    assert modulus_eta(ScalarFunction(X, np.full(101, 3.0)), 0.1) == 0.5
    # pairs at distance 0.1 have |f(x)-f(y)| = 0.1 (up to rounding of the grid)
    eta = modulus_eta(ScalarFunction(X, X.coords), 0.1)
    assert eta == pytest.approx(0.05, abs=1e-12)
    two = FiniteMetricSpace.from_coords([0.0, 1.0])
    assert modulus_eta(ScalarFunction(two, np.array([0.0, 0.2])), 0.1) == 0.5
    assert modulus_eta(ScalarFunction(FiniteMetricSpace.point(), np.array([1.0])), 0.1) == DEGENERATE_SENTINEL


def test_continuity_delta_examples():
    X = FiniteMetricSpace.interval(0, 1, 11)
    h = 0.1
    assert continuity_delta([PointMap.constant(X, X, 3)], 0.2) == X.diameter
    assert continuity_delta([PointMap.identity(X)], 1.5 * h) == pytest.approx(h)
    assert continuity_delta([PointMap.identity(X)], 2.0) == X.diameter


def test_violations_reported():
    d = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    assert any("triangle" in v for v in FiniteMetricSpace("bad", [0, 1, 2], d).violations())
    d2 = np.array([[0, 1.0], [2.0, 0]])
    assert any("symmetric" in v for v in FiniteMetricSpace("asym", [0, 1], d2).violations())
    assert FiniteMetricSpace.interval(0, 1, 7).violations() == []


seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.floats(0.01, 1.0), st.floats(0.0, 1.0))
def test_ball_monotone(seed, delta, extra):
    X = random_space(seed, max_points=20)
    rng = np.random.default_rng(seed)
    E = Subset.from_mask(X, rng.random(len(X)) < 0.3)
    E2 = E | Subset.from_mask(X, rng.random(len(X)) < 0.3)
    assert ball(X, E, delta).issubset(ball(X, E2, delta))
    assert ball(X, E, delta).issubset(ball(X, E, delta + extra))


@given(seeds)
def test_urysohn_range_and_swap(seed):
    X = path_metric_space(seed, 12)
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, len(X))
    labels[0], labels[1] = 0, 1
    A, B = Subset.from_mask(X, labels == 0), Subset.from_mask(X, labels == 1)
    f = urysohn(X, A, B).values
    g = urysohn(X, B, A).values
    assert f.min() >= 0 and f.max() <= 1
    assert np.all(f[A.indices] == 0) and np.all(f[B.indices] == 1)
    assert np.allclose(f + g, 1.0, atol=1e-15)


@given(seeds, st.floats(0.1, 2.0))
def test_bounded_extension_invariants(seed, r):
    X = random_space(seed, max_points=25)
    rng = np.random.default_rng(seed)
    Y = Subset.from_mask(X, rng.random(len(X)) < 0.5) | Subset.of(X, [0])
    vals = (rng.random(len(Y)) - 0.5 + 1j * (rng.random(len(Y)) - 0.5)) * r
    vals /= max(1.0, np.abs(vals).max() / r)
    g = bounded_extension(X, Y, vals, r)
    assert np.array_equal(g.values[Y.indices], vals)
    assert np.abs(g.values).max() <= r * (1 + 1e-12)


@given(seeds, st.floats(0.05, 1.0))
def test_modulus_eta_sound_and_maximal(seed, eps):
    X = random_space(seed, max_points=25)
    f = ScalarFunction(X, np.random.default_rng(seed).random(len(X)) * 2)
    eta = modulus_eta(f, eps)
    diff = np.abs(f.values[:, None] - f.values[None, :])
    close = X.dist < 2 * eta
    assert np.all(diff[close] < eps)
    bad = diff >= eps
    if bad.any():
        # any larger eta admits a violating pair
        assert np.any(X.dist[bad] < 2 * eta * (1 + 1e-9))


@given(seeds, st.floats(0.02, 0.8))
def test_continuity_delta_sound(seed, eta):
    X = random_space(seed, max_points=20)
    rng = np.random.default_rng(seed + 1)
    maps = [PointMap(X, X, rng.integers(0, len(X), len(X))) for _ in range(3)]
    delta = continuity_delta(maps, eta)
    assert delta > 0
    near = X.dist <= delta
    for lam in maps:
        moved = X.dist[np.ix_(lam.table, lam.table)]
        assert np.all(moved[near] < eta)


def test_distance_to_empty_is_inf(line3):
    assert np.all(np.isinf(distance_to(line3, Subset.empty(line3))))
