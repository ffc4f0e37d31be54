import numpy as np
import pytest
from hypothesis import given, strategies as st

from diagah.demos import goodearl, identity_system, two_summand
from diagah.diagonal_hom import (AHSystem, BondingMap, DiagonalHom, PointMap, Summand, apply, compose,
                                 ep_preimage, injectivize, reorder_unitary, system_compose,
                                 tensor_form, tensor_intertwiner, validate)
from diagah.errors import BadIndices, ChainMismatch, SizeMismatch, SpaceMismatch
from diagah.homotopy import Permutation, perm_matrix
from diagah.matrix_function import MatrixFunction
from diagah.metric_space import FiniteMetricSpace, Subset


@pytest.fixture
def grid():
    return FiniteMetricSpace.interval(0, 1, 11)


def rand_f(space, n, seed):
    rng = np.random.default_rng(seed)
    return MatrixFunction(space, rng.normal(size=(len(space), n, n)) + 1j * rng.normal(size=(len(space), n, n)))


def test_apply_examples(grid):
    f = rand_f(grid, 2, 0)
    assert np.array_equal(apply(DiagonalHom(2, grid, grid, [PointMap.identity(grid)]), f).values, f.values)
    c = DiagonalHom(2, grid, grid, [PointMap.constant(grid, grid, 4)] * 2)
    out = apply(c, f).values
    assert np.array_equal(out[:, :2, :2], np.broadcast_to(f.values[4], (11, 2, 2)))
    assert np.array_equal(out[:, 2:, 2:], out[:, :2, :2]) and not out[:, :2, 2:].any()
    unit = apply(c, MatrixFunction.identity(grid, 2)).values
    assert np.array_equal(unit, np.broadcast_to(np.eye(4), (11, 4, 4)))


def test_apply_errors(grid):
    phi = DiagonalHom(2, grid, grid, [PointMap.identity(grid)])
    with pytest.raises(SizeMismatch):
        apply(phi, rand_f(grid, 3, 0))
    with pytest.raises(SpaceMismatch):
        apply(phi, rand_f(FiniteMetricSpace.interval(0, 1, 11), 2, 0))


@given(st.integers(0, 2**32 - 1))
def test_apply_is_star_homomorphism(seed):
    X = FiniteMetricSpace.interval(0, 1, 9)
    Y = FiniteMetricSpace.interval(0, 1, 7)
    rng = np.random.default_rng(seed)
    phi = DiagonalHom(2, X, Y, [PointMap(Y, X, rng.integers(0, 9, 7)) for _ in range(3)])
    f, g = rand_f(X, 2, seed), rand_f(X, 2, seed + 1)
    assert np.abs(apply(phi, f @ g).values - (apply(phi, f) @ apply(phi, g)).values).max() < 1e-12
    assert np.abs(apply(phi, f.adjoint()).values - apply(phi, f).adjoint().values).max() < 1e-12


def test_compose_examples(grid):
    ident = DiagonalHom(1, grid, grid, [PointMap.identity(grid)])
    comp = compose(ident, ident)
    assert len(comp.maps) == 1 and np.array_equal(comp.maps[0].table, np.arange(11))
    phi = DiagonalHom(1, grid, grid, [PointMap.identity(grid), PointMap.constant(grid, grid, 2)])
    psi = DiagonalHom(2, grid, grid, [PointMap.identity(grid), PointMap.constant(grid, grid, 5),
                                      PointMap.affine(grid, grid, 1, -1)])
    assert len(compose(psi, phi).maps) == 6
    with pytest.raises(ChainMismatch):
        compose(phi, psi)


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 3), st.integers(1, 2))
def test_compose_matches_apply_twice(seed, n, p, size):
    rng = np.random.default_rng(seed)
    X = FiniteMetricSpace.interval(0, 1, 6)
    Y = FiniteMetricSpace.interval(0, 1, 5)
    Z = FiniteMetricSpace.interval(0, 1, 4)
    phi = DiagonalHom(size, X, Y, [PointMap(Y, X, rng.integers(0, 6, 5)) for _ in range(n)])
    psi = DiagonalHom(size * n, Y, Z, [PointMap(Z, Y, rng.integers(0, 5, 4)) for _ in range(p)])
    f = rand_f(X, size, seed)
    twice = apply(psi, apply(phi, f)).values
    comp = compose(psi, phi)
    W = reorder_unitary(comp)
    once = W @ apply(comp, f).values @ W.conj().T
    assert np.abs(twice - once).max() < 1e-12


def test_tensor_intertwiner_examples():
    assert tensor_intertwiner(3, 1) == Permutation.identity(3)
    assert tensor_intertwiner(1, 4) == Permutation.identity(4)
    assert tensor_intertwiner(2, 2) == Permutation.from_cycles(4, [(2, 3)])


def test_tensor_form_conjugates_to_apply(grid):
    rng = np.random.default_rng(1)
    phi = DiagonalHom(3, grid, grid, [PointMap(grid, grid, rng.integers(0, 11, 11)) for _ in range(2)])
    f = rand_f(grid, 3, 2)
    U = perm_matrix(tensor_intertwiner(2, 3))
    assert np.abs(U @ tensor_form(phi, f) @ U.T - apply(phi, f).values).max() == 0.0


def test_ep_preimage_examples(grid):
    pattern = [PointMap.identity(grid), PointMap.constant(grid, grid, 3)]
    assert ep_preimage(pattern, Subset.all(grid)) == Subset.all(grid)
    assert ep_preimage(pattern, Subset.empty(grid)) == Subset.empty(grid)
    assert ep_preimage(pattern, Subset.of(grid, [3, 4])) == Subset.all(grid)
    assert ep_preimage(pattern[:1], Subset.of(grid, [3, 4])) == Subset.of(grid, [3, 4])


@given(st.integers(0, 2**32 - 1))
def test_ep_preimage_distributes(seed):
    rng = np.random.default_rng(seed)
    X = FiniteMetricSpace.interval(0, 1, 8)
    p1 = [PointMap(X, X, rng.integers(0, 8, 8)) for _ in range(2)]
    p2 = [PointMap(X, X, rng.integers(0, 8, 8)) for _ in range(2)]
    U = Subset.from_mask(X, rng.random(8) < 0.4)
    assert ep_preimage(p1 + p2, U) == ep_preimage(p1, U) | ep_preimage(p2, U)


def test_system_compose_examples():
    g = goodearl(3)
    assert system_compose(g, 1, 2, 0, 0).maps == g.bond(1).get(0, 0).maps
    assert len(system_compose(g, 1, 3, 0, 0).maps) == 25
    ident = identity_system(4)
    hom = system_compose(ident, 1, 4, 0, 0)
    assert len(hom.maps) == 1 and np.array_equal(hom.maps[0].table, np.arange(101))
    with pytest.raises(BadIndices):
        system_compose(g, 2, 2, 0, 0)


def test_system_compose_agrees_with_push():
    ts = two_summand(3)
    X = ts.summand(1, 0).space
    f = MatrixFunction.scalar(X, np.sin(5 * X.coords))
    pushed = ts.push(ts.element_in_summand(1, 0, f), 1, 3)
    for l in range(2):
        hom = system_compose(ts, 1, 3, 0, l)
        cut = hom.cut_indices()
        assert np.array_equal(pushed[l].values[:, cut[:, None], cut[None, :]], apply(hom, f).values)


def test_validate_examples():
    assert validate(goodearl(3)) == []
    assert validate(two_summand(3)) == []
    X = FiniteMetricSpace.interval(0, 1, 5)
    bad = AHSystem([[Summand(1, X)], [Summand(3, X)]],
                   [BondingMap(1, {(0, 0): DiagonalHom(1, X, X, [PointMap.identity(X)] * 2)})])
    assert any("bond 1" in v and "not unital" in v for v in validate(bad))
    Xa = FiniteMetricSpace("asym", [0, 1], np.array([[0, 1.0], [2.0, 0]]))
    asym = AHSystem([[Summand(1, Xa)]], [])
    assert any("symmetric" in v for v in validate(asym))


def test_injectivize_examples():
    g = goodearl(3)
    inj = injectivize(g, 3)
    assert inj.horizon_tag == 3
    assert all(s.space is g.summand(1, 0).space for s in inj.summands(1))
    X = FiniteMetricSpace.interval(0, 1, 5)
    sys = AHSystem([[Summand(1, X)], [Summand(1, X)]],
                   [BondingMap(1, {(0, 0): DiagonalHom(1, X, X, [PointMap.constant(X, X, 2)])})])
    inj = injectivize(sys, 2)
    assert inj.summand(1, 0).space.points == (X.points[2],)
    # nested images: x -> x/2 twice leaves the image of the composite
    Y = FiniteMetricSpace.interval(0, 1, 9)
    half = PointMap.affine(Y, Y, 0, 0.5)
    chain = AHSystem([[Summand(1, Y)]] * 3,
                     [BondingMap(k, {(0, 0): DiagonalHom(1, Y, Y, [half])}) for k in (1, 2)])
    inj = injectivize(chain, 3)
    assert list(inj.summand(1, 0).space.parent_index) == [0, 1, 2]
