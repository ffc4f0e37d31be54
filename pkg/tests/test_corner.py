import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from diagah.corner import (corner_extract, covering_corner, property_p_certify,
                           property_p_implies_nonvanishing, replay_certificate)
from diagah.demos import goodearl, identity_system, two_summand
from diagah.diagonal_hom import DiagonalHom, PointMap, apply
from diagah.errors import EmptyF, HorizonExhausted, HypothesisFailed, NotCovering, ToleranceTooLarge
from diagah.matrix_function import MatrixFunction, is_unitary, pointwise_norms
from diagah.metric_space import FiniteMetricSpace, ScalarFunction, Subset, ball, modulus_eta


@pytest.fixture(scope="module")
def grid201():
    return FiniteMetricSpace.interval(0, 1, 201)


def fsets(maps, X, x0, eta):
    U = ball(X, Subset.of(X, [x0]), eta)
    return [lam.preimage(U) for lam in maps]


def test_corner_extract_reflection_pair(grid201):
    X = Y = grid201
    f = ScalarFunction(X, X.coords)
    maps = [PointMap.identity(Y, X), PointMap.affine(Y, X, 1, -1)]
    x0, eps = X.nearest(0.3), 0.05
    eta = modulus_eta(f, eps)
    Fs = fsets(maps, X, x0, eta)
    u, b, rep = corner_extract(DiagonalHom(1, X, Y, maps), f, x0, eps, Fs)
    assert rep.depth == 2 and b.n == 1
    pts = np.flatnonzero((Fs[0] | Fs[1]).mask)
    image = np.stack([np.diag([X.coords[m.table[y]] for m in maps]) for y in range(len(Y))])
    conj = u.values @ image @ u.values.conj().transpose(0, 2, 1)
    target = np.zeros_like(conj)
    target[:, 0, 0] = f.values[x0]
    target[:, 1:, 1:] = b.values
    brute = np.linalg.norm((conj - target)[pts], 2, axis=(1, 2)).max()
    assert brute == pytest.approx(rep.achieved, abs=1e-12)
    assert brute < 2 * eps and rep.claim_residual < 1e-9
    assert all(is_unitary(m) for m in u.values)


def test_corner_extract_constant_f(grid201):
    X = grid201
    maps = [PointMap.identity(X), PointMap.constant(X, X, 7), PointMap.affine(X, X, 0.5, 0.5)]
    f = ScalarFunction(X, np.full(len(X), 2.0 - 1j))
    Fs = [Subset.all(X)] * 3
    u, b, rep = corner_extract(DiagonalHom(1, X, X, maps), f, 0, 0.1, Fs)
    assert rep.achieved == 0.0 and rep.global_estimate == 0.0


def test_corner_extract_single_entry():
    X = FiniteMetricSpace.interval(0, 1, 21)
    Y = FiniteMetricSpace.interval(0, 1, 5)
    lam = PointMap.constant(Y, X, 10)
    f = ScalarFunction(X, np.cos(X.coords))
    u, b, rep = corner_extract(DiagonalHom(1, X, Y, [lam]), f, 10, 0.1, [Subset.all(Y)])
    assert np.array_equal(u.values, np.ones((5, 1, 1))) and b.n == 0


def test_corner_extract_hypotheses(grid201):
    X = grid201
    maps = [PointMap.identity(X), PointMap.constant(X, X, 0)]
    f = ScalarFunction(X, X.coords)
    phi = DiagonalHom(1, X, X, maps)
    with pytest.raises(HypothesisFailed):
        corner_extract(phi, f, 100, 0.05, [Subset.all(X)])
    with pytest.raises(EmptyF):
        corner_extract(phi, f, 100, 0.05, [Subset.empty(X)])


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.2, 0.05, 0.01]))
def test_corner_extract_random_patterns(seed, eps):
    rng = np.random.default_rng(seed)
    X = Y = FiniteMetricSpace.interval(0, 1, 61)
    n = int(rng.integers(1, 7))
    maps = []
    for _ in range(n):
        kind = rng.integers(3)
        if kind == 0:
            maps.append(PointMap.constant(Y, X, int(rng.integers(61))))
        elif kind == 1:
            maps.append(PointMap.affine(Y, X, rng.random() * 0.5, rng.random() * 0.5))
        else:
            maps.append(PointMap.identity(Y, X))
    f = ScalarFunction(X, np.exp(2j * np.pi * X.coords))
    x0 = int(rng.integers(61))
    Fs = [F for F in fsets(maps, X, x0, modulus_eta(f, eps)) if len(F)]
    keep = [k for k, F in enumerate(fsets(maps, X, x0, modulus_eta(f, eps))) if len(F)]
    if not Fs:
        return
    maps = [maps[k] for k in keep] + [m for k, m in enumerate(maps) if k not in keep]
    u, b, rep = corner_extract(DiagonalHom(1, X, Y, maps), f, x0, eps, Fs)
    assert rep.achieved <= eps + 1e-9
    assert rep.claim_residual < 1e-9 and max(rep.claim_steps) < 1e-9
    assert rep.off_block_exact


def test_covering_corner_all_constant(grid201):
    X = grid201
    phi = DiagonalHom(1, X, X, [PointMap.constant(X, X, 40)] * 3)
    f = MatrixFunction.scalar(X, X.coords ** 2)
    u, b, rep = covering_corner(phi, f, 40, 0.1)
    assert rep.achieved == 0.0


def test_covering_corner_matrix_valued():
    X = FiniteMetricSpace.interval(0, 1, 41)
    maps = [PointMap.identity(X), PointMap.constant(X, X, 20)]
    phi = DiagonalHom(2, X, X, maps)
    theta = X.coords
    vals = np.stack([np.array([[np.cos(t), np.sin(t)], [-np.sin(t), 2 + t]]) for t in theta])
    f = MatrixFunction(X, vals)
    eps = 0.3
    u, b, rep = covering_corner(phi, f, 20, eps)
    conj = u.values @ apply(phi, f).values @ u.values.conj().transpose(0, 2, 1)
    target = np.zeros_like(conj)
    target[:, :2, :2] = vals[20]
    target[:, 2:, 2:] = b.values
    assert np.linalg.norm(conj - target, 2, axis=(1, 2)).max() < 2 * eps
    assert all(is_unitary(m) for m in u.values)


def test_covering_corner_not_covering(grid201):
    X = grid201
    phi = DiagonalHom(1, X, X, [PointMap.identity(X)])
    with pytest.raises(NotCovering):
        covering_corner(phi, MatrixFunction.scalar(X, X.coords), 100, 0.1)


def test_property_p_constant_f_is_immediate():
    g = goodearl(4)
    X = g.summand(1, 0).space
    cert = property_p_certify(g, 1, 0, MatrixFunction.scalar(X, np.full(len(X), 0.7)), 3, 0.1, 4)
    assert cert.j == 2 and cert.achieved == 0.0


def test_property_p_goodearl_and_identity():
    g = goodearl(4)
    X = g.summand(1, 0).space
    f = MatrixFunction.scalar(X, X.coords)
    cert = property_p_certify(g, 1, 0, f, X.nearest(0.5), 0.2, 4)
    assert cert.achieved < cert.bound and cert.j <= 3
    ident = identity_system(6)
    Xi = ident.summand(1, 0).space
    with pytest.raises(HorizonExhausted):
        property_p_certify(ident, 1, 0, MatrixFunction.scalar(Xi, Xi.coords), 50, 0.2, 6)


def test_property_p_unitaries_are_block_exact():
    ts = two_summand(3)
    X = ts.summand(1, 1).space
    f = MatrixFunction.scalar(X, np.ones(len(X)) + 0.2 * X.coords)
    cert = property_p_certify(ts, 2, 1, MatrixFunction.scalar(X, np.ones(len(X)), 3), 5, 0.1, 3)
    for sc in cert.summands:
        off = np.setdiff1d(np.arange(sc.unitary.n), sc.cut)
        U = sc.unitary.values
        assert np.array_equal(U[:, off[:, None], off[None, :]],
                              np.broadcast_to(np.eye(len(off)), (len(X), len(off), len(off))))
        assert not U[:, off[:, None], sc.cut[None, :]].any()


def test_certificate_replay_is_bit_identical():
    g = goodearl(4)
    X = g.summand(1, 0).space
    f = MatrixFunction.scalar(X, np.sin(4 * X.coords) + 0.3j)
    cert = property_p_certify(g, 1, 0, f, X.nearest(0.25), 0.3, 4)
    text = cert.to_json(include_unitaries=True)
    assert json.loads(text)["summands"][0]["unitary"]
    again, same = replay_certificate(g, text)
    assert same and again.achieved == cert.achieved


def test_nonvanishing():
    g = goodearl(4)
    X = g.summand(1, 0).space
    f = MatrixFunction.scalar(X, 1.0 - 0.3 * X.coords)
    x0 = X.nearest(0.5)
    cert = property_p_certify(g, 1, 0, f, x0, 0.1, 4)
    rep = property_p_implies_nonvanishing(cert, f, x0)
    assert rep.margin > 0 and rep.margin >= rep.lower_bound - 1e-12
    zero = MatrixFunction.scalar(X, X.coords - 0.5)
    cert0 = property_p_certify(g, 1, 0, zero, x0, 0.1, 4)
    with pytest.raises(ToleranceTooLarge):
        property_p_implies_nonvanishing(cert0, zero, x0)
