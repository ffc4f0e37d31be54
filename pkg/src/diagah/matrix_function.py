"""Complex matrices and matrix-valued functions on finite metric spaces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotSingular, SpaceMismatch
from .metric_space import FiniteMetricSpace

SINGULAR_TOL = 1e-10


@dataclass(eq=False)
class MatrixFunction:
    """An element of M_n(C(X)) sampled on the net: ``values[x]`` is n x n."""

    space: FiniteMetricSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise ValueError(f"values must have shape (points, n, n), got {v.shape}")
        if v.shape[0] != len(self.space):
            raise ValueError(f"{v.shape[0]} values for {len(self.space)} points")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def __call__(self, i) -> np.ndarray:
        return self.values[i]

    def __matmul__(self, other):
        _check_space(self, other)
        return MatrixFunction(self.space, self.values @ other.values)

    def __add__(self, other):
        _check_space(self, other)
        return MatrixFunction(self.space, self.values + other.values)

    def __sub__(self, other):
        _check_space(self, other)
        return MatrixFunction(self.space, self.values - other.values)

    def adjoint(self):
        return MatrixFunction(self.space, np.conj(np.swapaxes(self.values, 1, 2)))

    def conjugate_by(self, u):
        """u f u*, for ``u`` a MatrixFunction or a constant matrix."""
        uv = u.values if isinstance(u, MatrixFunction) else np.asarray(u)
        return MatrixFunction(self.space, uv @ self.values @ np.conj(np.swapaxes(uv, -1, -2)))

    @classmethod
    def constant(cls, space, m):
        m = np.asarray(m, dtype=complex)
        return cls(space, np.broadcast_to(m, (len(space),) + m.shape).copy())

    @classmethod
    def identity(cls, space, n):
        return cls.constant(space, np.eye(n))

    @classmethod
    def zeros(cls, space, n):
        return cls(space, np.zeros((len(space), n, n), dtype=complex))

    @classmethod
    def scalar(cls, space, vals, n=1):
        """vals[x] * identity_n."""
        vals = np.asarray(vals, dtype=complex)
        return cls(space, vals[:, None, None] * np.eye(n)[None])


def _check_space(a, b):
    if a.space is not b.space:
        raise SpaceMismatch(f"{a.space!r} vs {b.space!r}")


def operator_norm(m) -> float:
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def pointwise_norms(f: MatrixFunction) -> np.ndarray:
    if f.n == 0:
        return np.zeros(len(f.space))
    return np.linalg.norm(f.values, ord=2, axis=(1, 2))


def sup_norm(f: MatrixFunction) -> float:
    if len(f.space) == 0:
        return 0.0
    return float(pointwise_norms(f).max())


def smallest_singular_values(f: MatrixFunction) -> np.ndarray:
    if f.n == 0:
        return np.full(len(f.space), np.inf)
    return np.linalg.svd(f.values, compute_uv=False)[:, -1]


def invertibility_margin(f: MatrixFunction) -> tuple[float, int]:
    """(min over points of sigma_min, first point attaining it)."""
    s = smallest_singular_values(f)
    i = int(np.argmin(s))
    return float(s[i]), i


def is_unitary(m, atol=1e-10) -> bool:
    m = np.asarray(m)
    return operator_norm(m @ m.conj().T - np.eye(len(m))) < atol


def _canonical_phase(x: np.ndarray) -> np.ndarray:
    # largest-modulus component (first on ties) made real positive
    k = int(np.argmax(np.abs(x) > np.abs(x).max() * (1 - 1e-12)))
    return x * (np.conj(x[k]) / abs(x[k]))


def unitary_with_first_column(x: np.ndarray) -> np.ndarray:
    """A unitary whose first column is the unit vector ``x``.

    Built from one Householder reflection (times a phase on e1), so vectors
    that are standard basis vectors give permutation matrices.
    """
    x = np.asarray(x, dtype=complex)
    n = len(x)
    beta = x[0]
    psi = beta / abs(beta) if abs(beta) > 0 else 1.0
    w = x - psi * np.eye(n)[0]
    if np.linalg.norm(w) < 1e-15:
        q = np.eye(n, dtype=complex)
        q[0, 0] = psi
        return q
    h = np.eye(n, dtype=complex) - 2 * np.outer(w, w.conj()) / np.vdot(w, w).real
    # h maps x to psi e1, so h diag(psi, 1, ...) maps e1 to x
    q = h.copy()
    q[:, 0] *= psi
    return q


def svd_zero_corner(m, tol=SINGULAR_TOL):
    """Unitaries u, v and c with u m v = diag(0, c).

    ``m`` must have smallest singular value <= tol. The first column of v is
    a right singular vector for that value and the first row of u a left one;
    both are completed to unitaries by a Householder reflection. The (1,1)
    entry of u m v equals sigma_min up to phase; it is reported as exact zero
    and the residual is bounded by sigma_min.
    """
    m = np.asarray(m, dtype=complex)
    n = len(m)
    W, s, Vh = np.linalg.svd(m)
    if s[-1] > tol:
        raise NotSingular(f"sigma_min = {s[-1]!r} exceeds tol = {tol!r}")
    right = _canonical_phase(Vh[-1].conj())
    left = _canonical_phase(W[:, -1])
    v = unitary_with_first_column(right)
    u = unitary_with_first_column(left).conj().T
    c = (u @ m @ v)[1:, 1:]
    return u, v, c


def finite_dim_invertible_approx(m, eps: float) -> np.ndarray:
    """Invertible matrix within eps/2 of m: singular values floored at eps/2."""
    m = np.asarray(m, dtype=complex)
    floor = eps / 2
    if m.size == 0:
        return m.copy()
    W, s, Vh = np.linalg.svd(m)
    if s[-1] > floor:
        return m.copy()
    return (W * np.maximum(s, floor)) @ Vh


def block_diag(blocks) -> np.ndarray:
    """Block-diagonal matrix from square blocks (last two axes), broadcast over leading axes."""
    blocks = [np.asarray(b) for b in blocks]
    lead = np.broadcast_shapes(*(b.shape[:-2] for b in blocks)) if blocks else ()
    n = sum(b.shape[-1] for b in blocks)
    out = np.zeros(lead + (n, n), dtype=complex)
    o = 0
    for b in blocks:
        k = b.shape[-1]
        out[..., o:o + k, o:o + k] = b
        o += k
    return out


def assemble_block_diag(blocks) -> MatrixFunction:
    if not blocks:
        raise ValueError("need at least one block")
    space = blocks[0].space
    for b in blocks[1:]:
        if b.space is not space:
            raise SpaceMismatch("blocks live on different spaces")
    return MatrixFunction(space, block_diag([b.values for b in blocks]))


# Matrices on the wire: row-major lists of [re, im] pairs. ``repr`` of a float
# is the shortest decimal that round-trips, so the encoding is exact.

def matrix_to_list(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_list(rows) -> np.ndarray:
    if len(rows) == 0:
        return np.zeros((0, 0), dtype=complex)
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def function_to_list(f: MatrixFunction) -> list:
    return [matrix_to_list(m) for m in f.values]


def function_from_list(space, data) -> MatrixFunction:
    vals = [matrix_from_list(m) for m in data]
    n = vals[0].shape[0] if vals else 0
    return MatrixFunction(space, np.array(vals, dtype=complex).reshape(len(vals), n, n))
