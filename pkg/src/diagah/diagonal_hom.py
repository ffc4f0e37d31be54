"""Diagonal homomorphisms, eigenvalue patterns and AH systems.

Conventions:

* Stages are numbered from 1, summands from 0.
* A ``PointMap`` lam: Y -> X is an eigenvalue map; the homomorphism it
  belongs to sends functions on X to functions on Y.
* Inside a target summand the blocks coming from source summands are laid out
  in ascending source summand, each partial map's pattern in stored order.
  This layout is what ``offsets`` record on composed maps.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BadIndices, ChainMismatch, SizeMismatch, SpaceMismatch
from .homotopy import Permutation, perm_matrix
from .matrix_function import MatrixFunction, block_diag
from .metric_space import FiniteMetricSpace, Subset


@dataclass(eq=False)
class PointMap:
    source: FiniteMetricSpace
    target: FiniteMetricSpace
    table: np.ndarray
    label: str = "table"

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=int)
        if self.table.shape != (len(self.source),):
            raise ValueError(f"table has {self.table.shape} entries for {len(self.source)} points")
        if len(self.table) and (self.table.min() < 0 or self.table.max() >= len(self.target)):
            raise IndexError("table entries outside the target space")

    def __repr__(self):
        return f"PointMap({self.label}: {self.source.name} -> {self.target.name})"

    @classmethod
    def identity(cls, source, target=None):
        target = source if target is None else target
        if target is source:
            return cls(source, target, np.arange(len(source)), "identity")
        return cls.from_callable(source, target, lambda y: y, "identity")

    @classmethod
    def constant(cls, source, target, point: int):
        return cls(source, target, np.full(len(source), int(point)), f"const {point}")

    @classmethod
    def affine(cls, source, target, c0, c1):
        return cls.from_callable(source, target, lambda y: c0 + c1 * y, f"affine {c0} {c1}")

    @classmethod
    def from_callable(cls, source, target, func, label="callable"):
        """Sample ``func`` on the source coordinates, project to the nearest target sample."""
        if source.coords is None or target.coords is None:
            raise ValueError("analytic maps need spaces with coordinates")
        tc = target.coords.reshape(len(target), -1)
        table = []
        for y in source.coords:
            img = np.asarray(func(y), dtype=float).reshape(-1)
            table.append(int(np.argmin(np.sqrt(((tc - img) ** 2).sum(-1)))))
        return cls(source, target, np.array(table, dtype=int), label)

    def __call__(self, y):
        return self.table[y]

    def compose_after(self, inner: "PointMap") -> "PointMap":
        """self o inner (apply ``inner`` first)."""
        if inner.target is not self.source:
            raise SpaceMismatch("maps do not chain")
        return PointMap(inner.source, self.target, self.table[inner.table],
                        f"({self.label}) o ({inner.label})")

    def image(self) -> Subset:
        return Subset.of(self.target, np.unique(self.table))

    def preimage(self, U: Subset) -> Subset:
        if U.space is not self.target:
            raise SpaceMismatch("U is not a subset of the map's target")
        return Subset.from_mask(self.source, U.mask[self.table])


@dataclass(eq=False)
class DiagonalHom:
    """f -> diag(f o lam_1, ..., f o lam_n) from M_size(C(source)) to M_{n size}(C(target)).

    ``offsets``/``ambient`` (optional) say where each block sits inside a
    larger target summand, as for the partial maps of a system.
    ``block_perm`` is set by ``compose``; see there.
    """

    size: int
    source: FiniteMetricSpace
    target: FiniteMetricSpace
    maps: tuple
    offsets: Optional[tuple] = None
    ambient: Optional[int] = None
    block_perm: Optional[Permutation] = None

    def __post_init__(self):
        self.maps = tuple(self.maps)
        for lam in self.maps:
            if lam.source is not self.target or lam.target is not self.source:
                raise SpaceMismatch(f"{lam!r} does not map {self.target.name} -> {self.source.name}")
        if self.offsets is not None:
            self.offsets = tuple(int(o) for o in self.offsets)
            if len(self.offsets) != len(self.maps):
                raise ValueError("one offset per eigenvalue map")

    @property
    def multiplicity(self) -> int:
        return len(self.maps)

    @property
    def target_size(self) -> int:
        return self.size * len(self.maps)

    def pattern(self) -> tuple:
        return self.maps

    def cut_indices(self) -> np.ndarray:
        """Rows of the ambient summand occupied by the image (the unit's cut-down)."""
        offs = self.offsets if self.offsets is not None else [q * self.size for q in range(len(self.maps))]
        if not offs:
            return np.zeros(0, dtype=int)
        return np.concatenate([np.arange(o, o + self.size) for o in offs])

    def apply(self, f: MatrixFunction) -> MatrixFunction:
        return apply(self, f)


def apply(phi: DiagonalHom, f: MatrixFunction) -> MatrixFunction:
    """Block-diagonal image, blocks in pattern order (cut-down coordinates)."""
    if f.space is not phi.source:
        raise SpaceMismatch(f"function lives on {f.space!r}, map expects {phi.source!r}")
    if f.n != phi.size:
        raise SizeMismatch(f"function has size {f.n}, map expects {phi.size}")
    vals = block_diag([f.values[lam.table] for lam in phi.maps]) if phi.maps else \
        np.zeros((len(phi.target), 0, 0), dtype=complex)
    return MatrixFunction(phi.target, vals)


def compose(psi: DiagonalHom, phi: DiagonalHom) -> DiagonalHom:
    """psi o phi (phi first).

    The composed pattern lists lam_i o mu_j with i (phi's maps) outermost.
    Applying phi then psi lays the same blocks out with j outermost; the
    block permutation taking one layout to the other is stored as
    ``block_perm``, so that

        apply(psi, apply(phi, f)) = W apply(composed, f) W*,
        W = kron(perm_matrix(block_perm), 1_size).
    """
    if psi.source is not phi.target:
        raise ChainMismatch("psi's source space is not phi's target space")
    if psi.size != phi.target_size:
        raise ChainMismatch(f"psi expects size {psi.size}, phi produces {phi.target_size}")
    n, p = len(phi.maps), len(psi.maps)
    maps = [lam.compose_after(mu) for lam in phi.maps for mu in psi.maps]
    perm = Permutation([j * n + i for i in range(n) for j in range(p)])
    return DiagonalHom(phi.size, phi.source, psi.target, maps, block_perm=perm)


def reorder_unitary(phi: DiagonalHom) -> np.ndarray:
    if phi.block_perm is None:
        return np.eye(phi.target_size, dtype=complex)
    return np.kron(perm_matrix(phi.block_perm), np.eye(phi.size))


def tensor_intertwiner(n: int, m: int) -> Permutation:
    """pi(kn + i) = (i-1)m + k + 1 (1-based), k < m, i <= n.

    Conjugation by U[pi] turns the tensor layout of (diag (x) M_m) into the
    block-diagonal layout of a diagonal map with n eigenvalue maps on M_m.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    images = [0] * (n * m)
    for k in range(m):
        for i in range(1, n + 1):
            images[k * n + i - 1] = (i - 1) * m + k
    return Permutation(images)


def tensor_form(phi: DiagonalHom, f: MatrixFunction) -> np.ndarray:
    """Values of (phi~ (x) id_{M_m})(f) in the tensor layout: an m x m array of n x n diagonals."""
    n, m = len(phi.maps), phi.size
    lam = np.stack([f.values[l.table] for l in phi.maps], axis=1)  # (Ny, n, m, m)
    out = np.zeros((len(phi.target), m * n, m * n), dtype=complex)
    for a in range(m):
        for b in range(m):
            idx = np.arange(n)
            out[:, a * n + idx, b * n + idx] = lam[:, :, a, b]
    return out


def ep_preimage(pattern: Sequence[PointMap], U: Subset) -> Subset:
    """Union of lam^-1(U) over the pattern."""
    if not pattern:
        raise ValueError("empty pattern has no source space")
    out = Subset.empty(pattern[0].source)
    for lam in pattern:
        out = out | lam.preimage(U)
    return out


@dataclass(eq=False)
class Summand:
    size: int
    space: FiniteMetricSpace


@dataclass(eq=False)
class BondingMap:
    """Partial maps from stage ``stage`` to stage ``stage + 1``, keyed by (t, l)."""

    stage: int
    partial: dict

    def get(self, t, l) -> Optional[DiagonalHom]:
        hom = self.partial.get((t, l))
        if hom is None or not hom.maps:
            return None
        return hom


@dataclass(eq=False)
class AHSystem:
    stages: list
    bonds: list
    name: str = "system"
    horizon_tag: Optional[int] = None
    _edge_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def summands(self, i) -> list:
        self._check_stage(i)
        return self.stages[i - 1]

    def summand(self, i, t) -> Summand:
        s = self.summands(i)
        if not 0 <= t < len(s):
            raise BadIndices(f"stage {i} has no summand {t}")
        return s[t]

    def bond(self, i) -> BondingMap:
        if not 1 <= i < self.n_stages:
            raise BadIndices(f"no bond out of stage {i}")
        return self.bonds[i - 1]

    def _check_stage(self, i):
        if not 1 <= i <= self.n_stages:
            raise BadIndices(f"stage {i} outside 1..{self.n_stages}")

    def bond_offset(self, i, t, l) -> int:
        b = self.bond(i)
        o = 0
        for tt, s in enumerate(self.summands(i)[:t]):
            hom = b.get(tt, l)
            o += s.size * (hom.multiplicity if hom else 0)
        return o

    def edges(self, i, t, j, l) -> list:
        """(offset, eigenvalue map X_{j,l} -> X_{i,t}) for every block of phi^{t,l}_{i,j}, by offset."""
        key = (i, t, j, l)
        if key in self._edge_cache:
            return self._edge_cache[key]
        if not (1 <= i < j <= self.n_stages):
            raise BadIndices(f"need 1 <= i < j <= {self.n_stages}, got i={i}, j={j}")
        self.summand(i, t)
        self.summand(j, l)
        if j == i + 1:
            hom = self.bond(i).get(t, l)
            out = []
            if hom is not None:
                base = self.bond_offset(i, t, l)
                out = [(base + q * hom.size, lam) for q, lam in enumerate(hom.maps)]
        else:
            out = []
            for lp in range(len(self.summands(j - 1))):
                inner = self.edges(i, t, j - 1, lp)
                if not inner:
                    continue
                for o2, nu in self.edges(j - 1, lp, j, l):
                    out.extend((o2 + o, mu.compose_after(nu)) for o, mu in inner)
            out.sort(key=lambda e: e[0])
        self._edge_cache[key] = out
        return out

    def push(self, element: Sequence[MatrixFunction], i, j) -> list:
        """phi_{i,j} applied to a stage-i element, one bond at a time."""
        self._check_stage(i)
        self._check_stage(j)
        if j < i:
            raise BadIndices("cannot push backwards")
        cur = list(element)
        for s in range(i, j):
            cur = self.apply_bond(cur, s)
        return cur

    def apply_bond(self, element, i) -> list:
        src = self.summands(i)
        if len(element) != len(src):
            raise SizeMismatch(f"stage {i} has {len(src)} summands, element has {len(element)}")
        b = self.bond(i)
        out = []
        for l, tgt in enumerate(self.summands(i + 1)):
            blocks = []
            for t, s in enumerate(src):
                hom = b.get(t, l)
                if hom is None:
                    continue
                if element[t].space is not s.space or element[t].n != s.size:
                    raise SizeMismatch(f"component {t} does not live in summand ({i},{t})")
                blocks.extend(element[t].values[lam.table] for lam in hom.maps)
            vals = block_diag(blocks) if blocks else np.zeros((len(tgt.space), 0, 0), dtype=complex)
            out.append(MatrixFunction(tgt.space, vals))
        return out

    def zero_element(self, i) -> list:
        return [MatrixFunction.zeros(s.space, s.size) for s in self.summands(i)]

    def unit_element(self, i) -> list:
        return [MatrixFunction.identity(s.space, s.size) for s in self.summands(i)]

    def element_in_summand(self, i, t, f: MatrixFunction) -> list:
        el = self.zero_element(i)
        s = self.summand(i, t)
        if f.space is not s.space or f.n != s.size:
            raise SizeMismatch(f"function does not live in summand ({i},{t})")
        el[t] = f
        return el


def system_compose(sys: AHSystem, i, j, t, l) -> Optional[DiagonalHom]:
    """phi^{t,l}_{i,j} with block offsets inside summand (j, l); None if no blocks."""
    if not (1 <= i < j <= sys.n_stages):
        raise BadIndices(f"need 1 <= i < j <= {sys.n_stages}, got i={i}, j={j}")
    edges = sys.edges(i, t, j, l)
    if not edges:
        return None
    s = sys.summand(i, t)
    return DiagonalHom(s.size, s.space, sys.summand(j, l).space, [lam for _, lam in edges],
                       offsets=[o for o, _ in edges], ambient=sys.summand(j, l).size)


def validate(sys: AHSystem) -> list[str]:
    """Every violated invariant, as a readable line. Empty means valid."""
    out = []
    if len(sys.bonds) != sys.n_stages - 1:
        out.append(f"{sys.n_stages} stages need {sys.n_stages - 1} bonds, found {len(sys.bonds)}")
    seen = []
    for i, stage in enumerate(sys.stages, start=1):
        if not stage:
            out.append(f"stage {i} has no summands")
        for t, s in enumerate(stage):
            if s.size < 1:
                out.append(f"summand ({i},{t}) has size {s.size}")
            if not any(s.space is sp for sp in seen):
                seen.append(s.space)
                out.extend(s.space.violations())
    for k, b in enumerate(sys.bonds, start=1):
        if b.stage != k:
            out.append(f"bond #{k} claims to start at stage {b.stage}")
            continue
        if k >= sys.n_stages:
            continue
        src, tgt = sys.stages[k - 1], sys.stages[k]
        for (t, l), hom in b.partial.items():
            where = f"bond {k} partial ({t},{l})"
            if not (0 <= t < len(src) and 0 <= l < len(tgt)):
                out.append(f"{where}: summand index out of range")
                continue
            if hom.size != src[t].size:
                out.append(f"{where}: acts on size {hom.size}, summand has size {src[t].size}")
            if hom.source is not src[t].space or hom.target is not tgt[l].space:
                out.append(f"{where}: spaces do not match the summands")
        for l, s in enumerate(tgt):
            total = sum(src[t].size * (b.get(t, l).multiplicity if b.get(t, l) else 0)
                        for t in range(len(src)))
            if total != s.size:
                out.append(f"bond {k} into summand ({k + 1},{l}): not unital, "
                           f"blocks fill {total} of {s.size}")
    return out


def injectivize(sys: AHSystem, horizon: int) -> AHSystem:
    """Shrink each X_{i,t} to the points hit by eigenvalue maps at every later stage.

    Only stages up to ``horizon`` are kept and the intersection runs over
    j <= horizon, so the result approximates the infinite construction; it
    carries ``horizon_tag = horizon``.
    """
    if not 1 <= horizon <= sys.n_stages:
        raise BadIndices(f"horizon {horizon} outside 1..{sys.n_stages}")
    keep = {}
    for i in range(1, horizon + 1):
        for t, s in enumerate(sys.summands(i)):
            members = np.ones(len(s.space), dtype=bool)
            for j in range(i + 1, horizon + 1):
                hit = np.zeros(len(s.space), dtype=bool)
                for l in range(len(sys.summands(j))):
                    for _, lam in sys.edges(i, t, j, l):
                        hit[lam.table] = True
                members &= hit
            keep[(i, t)] = members

    new_spaces = {}

    def restricted(i, t):
        s = sys.summand(i, t)
        key = (id(s.space), keep[(i, t)].tobytes())
        if keep[(i, t)].all():
            return s.space
        if key not in new_spaces:
            new_spaces[key] = s.space.subspace(np.flatnonzero(keep[(i, t)]),
                                               name=f"{s.space.name}~{i}.{t}")
        return new_spaces[key]

    stages = [[Summand(s.size, restricted(i, t)) for t, s in enumerate(sys.summands(i))]
              for i in range(1, horizon + 1)]
    bonds = []
    for i in range(1, horizon):
        partial = {}
        for (t, l), hom in sys.bond(i).partial.items():
            src_space = stages[i - 1][t].space
            tgt_space = stages[i][l].space
            dom = np.flatnonzero(keep[(i + 1, l)])
            reindex = np.full(len(sys.summand(i, t).space), -1)
            reindex[np.flatnonzero(keep[(i, t)])] = np.arange(keep[(i, t)].sum())
            maps = [PointMap(tgt_space, src_space, reindex[lam.table[dom]], lam.label)
                    for lam in hom.maps]
            partial[(t, l)] = DiagonalHom(hom.size, src_space, tgt_space, maps)
        bonds.append(BondingMap(i, partial))
    return AHSystem(stages, bonds, name=f"{sys.name}~{horizon}", horizon_tag=horizon)
