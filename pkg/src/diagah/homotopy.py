"""Permutation matrices and unitary paths between them.

Paths are spectral geodesics: for unitaries u, v the path is
``g(t) = exp(t log(u v*)) v``, with the logarithm taken eigenvalue by
eigenvalue with phases in (-pi, pi] (eigenvalue -1 gets +pi). Paths that fix
a set of coordinates carry the moving part as a block on the complementary
indices, so the fixed coordinates are untouched exactly, not approximately.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import BadIndex, NotUnitary
from .matrix_function import MatrixFunction, is_unitary, operator_norm
from .metric_space import FiniteMetricSpace, Subset, urysohn


@dataclass(frozen=True)
class Permutation:
    """A bijection of {0, ..., n-1}; ``images[i]`` is the image of i.

    Cycle notation (``str``/``parse``) is 1-based, as in the literature.
    """

    images: tuple

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(int(i) for i in self.images))
        if sorted(self.images) != list(range(len(self.images))):
            raise ValueError(f"{self.images} is not a permutation")

    @property
    def n(self):
        return len(self.images)

    def __call__(self, i):
        return self.images[i]

    def __len__(self):
        return self.n

    @classmethod
    def identity(cls, n):
        return cls(range(n))

    @classmethod
    def from_cycles(cls, n, cycles):
        """``cycles`` are 1-based tuples, e.g. ``[(1, 2, 3)]``."""
        img = list(range(n))
        seen = set()
        for cyc in cycles:
            cyc = [c - 1 for c in cyc]
            if any(c < 0 or c >= n for c in cyc):
                raise ValueError(f"cycle {cyc} outside 1..{n}")
            if seen & set(cyc) or len(set(cyc)) != len(cyc):
                raise ValueError("cycles must be disjoint")
            seen |= set(cyc)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                img[a] = b
        return cls(img)

    @classmethod
    def transposition(cls, n, a, b):
        """The transposition (a b), 1-based; (a a) is the identity."""
        if a == b:
            if not 1 <= a <= n:
                raise ValueError(f"{a} outside 1..{n}")
            return cls.identity(n)
        return cls.from_cycles(n, [(a, b)])

    @classmethod
    def parse(cls, text, n):
        cycles = [tuple(int(x) for x in c.split()) for c in re.findall(r"\(([^)]*)\)", text)]
        return cls.from_cycles(n, [c for c in cycles if len(c) > 1])

    def cycles(self):
        """Disjoint cycles of length >= 2, 0-based, each starting at its least element."""
        seen = set()
        out = []
        for start in range(self.n):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            j = self.images[start]
            while j != start:
                cyc.append(j)
                seen.add(j)
                j = self.images[j]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def inverse(self):
        inv = [0] * self.n
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(inv)

    def __mul__(self, other):
        """(self * other)(i) = self(other(i))."""
        return Permutation(self.images[j] for j in other.images)

    def fixed_points(self):
        return [i for i, j in enumerate(self.images) if i == j]

    def __str__(self):
        cyc = self.cycles()
        if not cyc:
            return "()"
        return "".join("(" + " ".join(str(c + 1) for c in cy) + ")" for cy in cyc)


def perm_matrix(pi: Permutation) -> np.ndarray:
    """0/1 unitary with U e_i = e_{pi(i)}."""
    u = np.zeros((pi.n, pi.n), dtype=complex)
    u[list(pi.images), range(pi.n)] = 1.0
    return u


def _spectral_log(w: np.ndarray):
    """Orthonormal eigenbasis and phases of the unitary ``w``."""
    T, Z = scipy.linalg.schur(w, output="complex")
    lam = np.diag(T)
    lam = lam / np.abs(lam)
    theta = np.angle(lam)
    theta[np.abs(lam + 1) < 1e-9] = np.pi
    keys = [(round(float(th), 9),) + tuple(
        v for z in np.round(Z[:, c], 9) for v in (float(z.real), float(z.imag)))
        for c, th in enumerate(theta)]
    order = sorted(range(len(theta)), key=lambda c: keys[c])
    return Z[:, order], theta[order]


@dataclass
class _Factor:
    indices: np.ndarray
    basis: np.ndarray
    theta: np.ndarray
    start: np.ndarray

    def blocks(self, ts):
        phase = np.exp(1j * np.outer(ts, self.theta))
        return np.einsum("ik,pk,jk->pij", self.basis, phase, self.basis.conj()) @ self.start


@dataclass
class UnitaryPath:
    """t -> left @ H(t), H(t) = identity with each factor's block on its indices.

    Factor supports are disjoint, so the factors commute and R (the indices
    outside every support) is fixed for all t.
    """

    n: int
    factors: list
    left: np.ndarray
    start: np.ndarray
    end: np.ndarray
    fixed: tuple = field(default=())

    def __call__(self, t):
        return self.evaluate_many(np.array([t], dtype=float))[0]

    def evaluate_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.broadcast_to(np.eye(self.n, dtype=complex), (len(ts), self.n, self.n)).copy()
        for fac in self.factors:
            ix = np.ix_(fac.indices, fac.indices)
            out[(slice(None),) + ix] = fac.blocks(ts)
        out = self.left @ out
        out[ts == 0] = self.start
        out[ts == 1] = self.end
        return out


def _check_unitary(m, what):
    if not is_unitary(m):
        raise NotUnitary(f"{what} is not unitary")


def _bridge_factor(u, v, indices):
    Z, theta = _spectral_log(u @ v.conj().T)
    return _Factor(np.asarray(indices, dtype=int), Z, theta, np.asarray(v, dtype=complex))


def unitary_bridge(u, v) -> UnitaryPath:
    """Path g with g(0) = v and g(1) = u, g(t) = exp(t log(u v*)) v."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    _check_unitary(u, "u")
    _check_unitary(v, "v")
    n = len(u)
    fac = _bridge_factor(u, v, range(n))
    return UnitaryPath(n, [fac], np.eye(n, dtype=complex), v.copy(), u.copy())


def permutation_path(pi: Permutation, sigma: Permutation) -> UnitaryPath:
    """Path from U[pi] to U[sigma] that agrees with both on every e_r, pi(r) = sigma(r).

    Written as U[pi] h(t), with h a bridge from 1 to U[pi^-1 sigma] acting
    only on the coordinates that pi^-1 sigma moves.
    """
    if pi.n != sigma.n:
        raise ValueError("permutations on different letters")
    n = pi.n
    rho = pi.inverse() * sigma
    fixed = tuple(rho.fixed_points())
    moving = np.array([i for i in range(n) if rho(i) != i], dtype=int)
    left = perm_matrix(pi)
    factors = []
    if len(moving):
        block = perm_matrix(rho)[np.ix_(moving, moving)]
        factors.append(_bridge_factor(block, np.eye(len(moving), dtype=complex), moving))
    return UnitaryPath(n, factors, left, left.copy(), perm_matrix(sigma), fixed)


def sigma_path(sigma: Permutation) -> UnitaryPath:
    """Path from 1 to U[sigma]: the product of one bridge per disjoint cycle.

    Each factor moves only the coordinates of its cycle, so u(t) commutes with
    every diagonal matrix that is constant on the cycles of sigma.
    """
    n = sigma.n
    ident = Permutation.identity(n)
    factors = []
    for cyc in sigma.cycles():
        single = Permutation.from_cycles(n, [tuple(c + 1 for c in cyc)])
        factors.extend(permutation_path(ident, single).factors)
    return UnitaryPath(n, factors, np.eye(n, dtype=complex), np.eye(n, dtype=complex),
                       perm_matrix(sigma), tuple(sigma.fixed_points()))


def commutator_defect(u, lambdas) -> float:
    d = np.diag(np.asarray(lambdas, dtype=complex))
    return operator_norm(u @ d - d @ u)


def crossing_unitary(space: FiniteMetricSpace, A: Subset, B: Subset, sigma: Permutation,
                     lambdas=()) -> MatrixFunction:
    """Unitary v with v = 1 on A, v = U[sigma] on B, v(x) = path(urysohn(x)).

    When ``lambdas`` (one ScalarFunction per letter) are given, v(x) is checked
    to commute with diag(lambda(x)) wherever lambda_i(x) = lambda_sigma(i)(x).
    """
    f = urysohn(space, A, B)
    path = sigma_path(sigma)
    v = MatrixFunction(space, path.evaluate_many(f.values.real))
    if len(lambdas):
        lam = np.stack([np.asarray(l.values) for l in lambdas], axis=1)
        agree = np.all(lam == lam[:, list(sigma.images)], axis=1)
        for x in np.flatnonzero(agree):
            if commutator_defect(v.values[x], lam[x]) >= 1e-10:
                raise ArithmeticError(f"commutation fails at point {x}")
    return v


@dataclass
class TranspositionFactor:
    """v = U[(2 k+1)] (v'(t) (+) 1_{n-2}) U[(2 k+1)] for sigma = (1 k+1).

    ``inner`` is the 2 x 2 path from 1_2 to the swap; ``slot`` are the two
    coordinates (0-based) the factor moves.
    """

    k: int
    n: int
    outer: np.ndarray
    inner: UnitaryPath
    slot: tuple

    def assemble(self, inner_values: np.ndarray) -> np.ndarray:
        """Embed 2 x 2 values (shape (..., 2, 2)) exactly, by index placement."""
        inner_values = np.asarray(inner_values)
        lead = inner_values.shape[:-2]
        out = np.broadcast_to(np.eye(self.n, dtype=complex), lead + (self.n, self.n)).copy()
        a, b = self.slot
        out[..., [a, a, b, b], [a, b, a, b]] = inner_values.reshape(lead + (4,))
        return out

    def evaluate_many(self, ts) -> np.ndarray:
        return self.assemble(self.inner.evaluate_many(ts))

    def assemble_by_product(self, inner_values: np.ndarray) -> np.ndarray:
        """Same as ``assemble`` but computed as the literal matrix product."""
        lead = np.asarray(inner_values).shape[:-2]
        mid = np.broadcast_to(np.eye(self.n, dtype=complex), lead + (self.n, self.n)).copy()
        mid[..., :2, :2] = inner_values
        return self.outer @ mid @ self.outer


def transposition_factorization(k: int, n: int) -> TranspositionFactor:
    """Factor the crossing unitary for sigma = (1 k+1) through the leading 2 x 2 slot."""
    if not (1 <= k and k + 1 <= n and n >= 2):
        raise BadIndex(f"need 2 <= k+1 <= n, got k={k}, n={n}")
    outer = perm_matrix(Permutation.transposition(n, 2, k + 1))
    inner = sigma_path(Permutation.from_cycles(2, [(1, 2)]))
    return TranspositionFactor(k, n, outer, inner, (0, k))
