"""Finite metric spaces standing in for compact ones.

A ``FiniteMetricSpace`` is an epsilon-net: a list of labelled points and the
full distance matrix. Everything topological in the package (balls, Urysohn
functions, bounded extensions, moduli of continuity) is computed exactly on
the net; nothing is claimed about the continuum the net approximates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BoundViolated, EmptySet, Overlap, SpaceMismatch

# Returned by the cap rules when the space has a single point: every
# implication is vacuous there, any positive number is sound.
DEGENERATE_SENTINEL = 1.0


@dataclass(eq=False)
class FiniteMetricSpace:
    name: str
    points: tuple
    dist: np.ndarray
    coords: np.ndarray | None = None
    # index of each point in the space this one was cut out of
    parent_index: np.ndarray | None = None
    generator: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.points = tuple(self.points)
        self.dist = np.asarray(self.dist, dtype=float)
        n = len(self.points)
        if self.dist.shape != (n, n):
            raise ValueError(f"distance matrix of {self.name!r} has shape "
                             f"{self.dist.shape}, expected {(n, n)}")
        if self.coords is not None:
            self.coords = np.asarray(self.coords, dtype=float)

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"FiniteMetricSpace({self.name!r}, {len(self)} points)"

    @property
    def diameter(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(self.dist.max())

    @classmethod
    def interval(cls, a, b, n, name=None):
        """Uniform grid of ``n`` points on [a, b] with the Euclidean metric."""
        if n < 1:
            raise ValueError("interval needs at least one point")
        x = np.linspace(float(a), float(b), int(n)) if n > 1 else np.array([float(a)])
        space = cls.from_coords(x, name=name or f"interval({a}, {b}, {n})")
        space.generator = ("interval", a, b, int(n))
        return space

    @classmethod
    def from_coords(cls, coords, name="X", labels=None):
        c = np.asarray(coords, dtype=float)
        flat = c.reshape(len(c), -1)
        dist = np.sqrt(((flat[:, None, :] - flat[None, :, :]) ** 2).sum(-1))
        if labels is None:
            labels = [repr(float(v)) for v in c] if c.ndim == 1 else list(range(len(c)))
        return cls(name, labels, dist, coords=c)

    @classmethod
    def point(cls, name="pt", coord=0.0):
        return cls.from_coords([coord], name=name)

    def index_of(self, label) -> int:
        try:
            return self.points.index(label)
        except ValueError:
            raise KeyError(f"{label!r} is not a point of {self.name!r}") from None

    def nearest(self, coord) -> int:
        """Index of the sample nearest to ``coord``; ties go to the smaller index."""
        if self.coords is None:
            raise ValueError(f"space {self.name!r} has no coordinates")
        c = self.coords.reshape(len(self), -1)
        target = np.asarray(coord, dtype=float).reshape(-1)
        d = np.sqrt(((c - target) ** 2).sum(-1))
        return int(np.argmin(d))

    def subspace(self, members, name=None) -> "FiniteMetricSpace":
        idx = np.array(sorted(members), dtype=int)
        coords = None if self.coords is None else self.coords[idx]
        base = self.parent_index[idx] if self.parent_index is not None else idx
        return FiniteMetricSpace(
            name or self.name,
            [self.points[i] for i in idx],
            self.dist[np.ix_(idx, idx)],
            coords=coords,
            parent_index=base,
        )

    def violations(self, atol=1e-12) -> list[str]:
        """Metric-axiom violations, as human-readable strings."""
        out = []
        d = self.dist
        n = len(self)
        if n == 0:
            return out
        if not np.all(np.isfinite(d)):
            out.append(f"{self.name}: non-finite distances")
            return out
        if np.any(np.abs(np.diag(d)) > 0):
            out.append(f"{self.name}: nonzero self-distance")
        if not np.array_equal(d, d.T):
            out.append(f"{self.name}: distance matrix not symmetric")
        off = d[~np.eye(n, dtype=bool)]
        if np.any(off <= 0):
            out.append(f"{self.name}: distinct points at distance <= 0")
        # d[x,z] <= d[x,y] + d[y,z] for all triples
        for y in range(n):
            if np.any(d > d[:, y][:, None] + d[y, :][None, :] + atol):
                out.append(f"{self.name}: triangle inequality fails through point {y}")
                break
        return out


@dataclass(frozen=True, eq=False)
class Subset:
    space: FiniteMetricSpace
    members: frozenset

    def __post_init__(self):
        bad = [m for m in self.members if not 0 <= m < len(self.space)]
        if bad:
            raise IndexError(f"indices {bad} outside {self.space!r}")

    @classmethod
    def of(cls, space, members: Iterable[int]):
        return cls(space, frozenset(int(m) for m in members))

    @classmethod
    def all(cls, space):
        return cls(space, frozenset(range(len(space))))

    @classmethod
    def empty(cls, space):
        return cls(space, frozenset())

    @classmethod
    def from_mask(cls, space, mask):
        return cls.of(space, np.flatnonzero(mask))

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(len(self.space), dtype=bool)
        m[list(self.members)] = True
        return m

    @property
    def indices(self) -> np.ndarray:
        return np.array(sorted(self.members), dtype=int)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def __contains__(self, i):
        return i in self.members

    def __eq__(self, other):
        if not isinstance(other, Subset):
            return NotImplemented
        return self.space is other.space and self.members == other.members

    def __hash__(self):
        return hash((id(self.space), self.members))

    def __or__(self, other):
        _same_space(self.space, other.space)
        return Subset(self.space, self.members | other.members)

    def __and__(self, other):
        _same_space(self.space, other.space)
        return Subset(self.space, self.members & other.members)

    def __sub__(self, other):
        _same_space(self.space, other.space)
        return Subset(self.space, self.members - other.members)

    def issubset(self, other):
        return self.members <= other.members

    def complement(self):
        return Subset.all(self.space) - self

    def __repr__(self):
        return f"Subset({self.space.name!r}, {sorted(self.members)})"


@dataclass(eq=False)
class ScalarFunction:
    space: FiniteMetricSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape[:1] != (len(self.space),):
            raise ValueError("a scalar function needs one value per point")

    def __call__(self, i):
        return self.values[i]


def _same_space(a, b):
    if a is not b:
        raise SpaceMismatch(f"{a!r} and {b!r} are different spaces")


def distance_to(space: FiniteMetricSpace, E: Subset) -> np.ndarray:
    """d(x, E) for every point x; +inf when E is empty."""
    _same_space(space, E.space)
    if len(E) == 0:
        return np.full(len(space), np.inf)
    return space.dist[:, E.indices].min(axis=1)


def ball(space: FiniteMetricSpace, E: Subset, delta: float) -> Subset:
    """Open ball {x : d(x, E) < delta}; the ball around the empty set is empty."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if len(E) == 0:
        return Subset.empty(space)
    return Subset.from_mask(space, distance_to(space, E) < delta)


def urysohn(space: FiniteMetricSpace, A: Subset, B: Subset) -> ScalarFunction:
    """d(x,A) / (d(x,A) + d(x,B)): exactly 0 on A, exactly 1 on B."""
    if len(A) == 0 or len(B) == 0:
        raise EmptySet("Urysohn function needs nonempty A and B")
    if A.members & B.members:
        raise Overlap("A and B must be disjoint")
    dA = distance_to(space, A)
    dB = distance_to(space, B)
    vals = dA / (dA + dB)
    # already exact, but make the contract independent of rounding
    vals[A.indices] = 0.0
    vals[B.indices] = 1.0
    return ScalarFunction(space, vals)


def _mcshane(dist_xy: np.ndarray, vals: np.ndarray, L: float) -> np.ndarray:
    # dist_xy: (N, |Y|); vals: (|Y|,) real
    return (vals[None, :] + L * dist_xy).min(axis=1)


def _lipschitz(dist_yy: np.ndarray, vals: np.ndarray) -> float:
    if len(vals) < 2:
        return 0.0
    diff = np.abs(vals[:, None] - vals[None, :])
    off = ~np.eye(len(vals), dtype=bool)
    return float((diff[off] / dist_yy[off]).max())


def bounded_extension(space: FiniteMetricSpace, Y: Subset, values, r: float) -> ScalarFunction:
    """Extend ``values`` (given on the sorted members of Y) to the whole space.

    Each real coordinate is extended by McShane's formula with its empirical
    Lipschitz constant, then the result is pulled radially back into the ball
    of radius ``r``. Scalar values use the modulus; matrix values (trailing
    ``(n, n)`` axes) use the operator norm. The output agrees with the input
    on Y bit for bit.
    """
    _same_space(space, Y.space)
    if len(Y) == 0:
        raise EmptySet("cannot extend from the empty set")
    vals = np.asarray(values)
    idx = Y.indices
    if vals.shape[0] != len(idx):
        raise ValueError("need one value per member of Y")
    norms = _norms(vals)
    if np.any(norms > r):
        raise BoundViolated(f"input magnitude {norms.max()!r} exceeds r={r!r}")

    trailing = vals.shape[1:]
    flat = vals.reshape(len(idx), -1)
    complex_valued = np.iscomplexobj(flat)
    d_xy = space.dist[:, idx]
    d_yy = space.dist[np.ix_(idx, idx)]
    parts = [flat.real, flat.imag] if complex_valued else [flat]
    ext = []
    for part in parts:
        cols = []
        for c in range(part.shape[1]):
            col = part[:, c]
            cols.append(_mcshane(d_xy, col, _lipschitz(d_yy, col)))
        ext.append(np.stack(cols, axis=1) if cols else np.zeros((len(space), 0)))
    out = ext[0] + 1j * ext[1] if complex_valued else ext[0]
    out = out.reshape((len(space),) + trailing)

    mag = _norms(out)
    over = mag > r
    if np.any(over):
        scale = np.ones_like(mag)
        scale[over] = r / mag[over]
        out = out * scale.reshape((-1,) + (1,) * len(trailing))
    out[idx] = vals
    return ScalarFunction(space, out)


def _norms(vals: np.ndarray) -> np.ndarray:
    if vals.ndim == 1:
        return np.abs(vals)
    if vals.shape[1:] == (0, 0):
        return np.zeros(len(vals))
    return np.linalg.norm(vals, ord=2, axis=(-2, -1))


def pairwise_value_distance(values: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Matrix of ||f(x) - f(y)|| (modulus or operator norm) over all pairs."""
    vals = np.asarray(values)
    n = len(vals)
    if vals.ndim == 1:
        return np.abs(vals[:, None] - vals[None, :])
    out = np.empty((n, n))
    for start in range(0, n, chunk):
        block = vals[start:start + chunk, None] - vals[None, :]
        out[start:start + chunk] = _norms(block.reshape((-1,) + vals.shape[1:])).reshape(-1, n)
    return out


def violation_distance(f, eps: float) -> float:
    """Smallest d(x,y) with ||f(x)-f(y)|| >= eps, or +inf if there is none."""
    space = f.space
    diffs = pairwise_value_distance(f.values)
    bad = diffs >= eps
    if not bad.any():
        return np.inf
    return float(space.dist[bad].min())


def modulus_eta(f, eps: float) -> float:
    """Largest net-provable eta with d(x,y) < 2 eta  =>  ||f(x)-f(y)|| < eps.

    eta is half the smallest distance of a violating pair. With no violating
    pair the answer is capped at diameter/2.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    dmin = violation_distance(f, eps)
    if np.isfinite(dmin):
        return dmin / 2
    diam = f.space.diameter
    return diam / 2 if diam > 0 else DEGENERATE_SENTINEL


def continuity_delta(maps: Sequence, eta: float) -> float:
    """delta with rho(x,y) <= delta  =>  d(lam(x), lam(y)) < eta for every map.

    ``maps`` are point maps sharing a source space. delta is half the
    smallest source distance of a pair moved by at least eta, capped at the
    source diameter.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if not maps:
        raise ValueError("need at least one map")
    src = maps[0].source
    bad = np.zeros((len(src), len(src)), dtype=bool)
    for lam in maps:
        if lam.source is not src:
            raise SpaceMismatch("maps must share a source space")
        t = lam.table
        bad |= lam.target.dist[np.ix_(t, t)] >= eta
    if bad.any():
        return float(src.dist[bad].min()) / 2
    diam = src.diameter
    return diam if diam > 0 else DEGENERATE_SENTINEL
