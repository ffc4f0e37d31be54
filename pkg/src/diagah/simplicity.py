"""Finite-horizon checks of the covering criterion for simplicity of a limit."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .diagonal_hom import AHSystem, ep_preimage, injectivize
from .errors import BadIndices, SizeMismatch, ZeroInput
from .matrix_function import MatrixFunction, pointwise_norms
from .metric_space import Subset, ball


@dataclass
class SimplicityCertificate:
    stage: int
    summand: int
    horizon: int
    j0: Optional[int]
    table: dict                     # (j, l) -> bool
    injectivized: bool
    open_set: Subset = field(repr=False, default=None)

    @property
    def verdict(self) -> str:
        return "Covered" if self.j0 is not None else "FailedAtHorizon"

    @property
    def covered(self) -> bool:
        return self.j0 is not None


def _first_stable(passes: dict, i: int, horizon: int) -> Optional[int]:
    """Least j in (i, horizon] with passes[j'] for all j' >= j."""
    j0 = None
    for j in range(horizon, i, -1):
        if not passes[j]:
            break
        j0 = j
    return j0


def _locate(sys: AHSystem, i: int, U: Subset, t: Optional[int]) -> int:
    if t is not None:
        if sys.summand(i, t).space is not U.space:
            raise SizeMismatch(f"U is not a subset of X_({i},{t})")
        return t
    for tt, s in enumerate(sys.summands(i)):
        if s.space is U.space:
            return tt
    raise SizeMismatch(f"U lives on none of the spaces at stage {i}")


def _transfer(old_space, new_space, U: Subset) -> Subset:
    if new_space is old_space:
        return U
    parents = new_space.parent_index
    old_parent = old_space.parent_index if old_space.parent_index is not None else np.arange(len(old_space))
    wanted = set(int(old_parent[m]) for m in U.members)
    return Subset.of(new_space, [k for k, p in enumerate(parents) if int(p) in wanted])


def covering_check(sys: AHSystem, i: int, U: Subset, horizon: int, t: Optional[int] = None,
                   injectivize_first: bool = True) -> SimplicityCertificate:
    """Find j0 with sp(phi^{t,l}_{i,j}) hitting U from every point, for all l and j0 <= j <= horizon.

    By default the system is first cut down to its injective form up to the
    horizon (unchanged for systems whose maps are already jointly onto).
    """
    if not 1 <= i < horizon <= sys.n_stages:
        raise BadIndices(f"need 1 <= i < horizon <= {sys.n_stages}, got i={i}, horizon={horizon}")
    t = _locate(sys, i, U, t)
    work, Uw = sys, U
    if injectivize_first and sys.horizon_tag is None:
        work = injectivize(sys, horizon)
        Uw = _transfer(sys.summand(i, t).space, work.summand(i, t).space, U)
    table = {}
    passes = {}
    for j in range(i + 1, horizon + 1):
        ok = True
        for l in range(len(work.summands(j))):
            edges = work.edges(i, t, j, l)
            hit = bool(edges) and len(ep_preimage([lam for _, lam in edges], Uw)) == len(work.summand(j, l).space)
            table[(j, l)] = hit
            ok &= hit
        passes[j] = ok
    return SimplicityCertificate(i, t, horizon, _first_stable(passes, i, horizon), table,
                                 work is not sys, U)


@dataclass
class NonzeroReport:
    stage: int
    horizon: int
    j0: Optional[int]
    min_norms: dict                 # j -> min over summands and points of ||phi_ij(a)||

    @property
    def verdict(self) -> str:
        return "NowhereZero" if self.j0 is not None else "FailedAtHorizon"


def nowhere_zero_check(sys: AHSystem, i: int, a, horizon: int, t: int = 0,
                       tol: float = 1e-12) -> NonzeroReport:
    """Least j0 such that phi_{i,j}(a) is nonzero at every point for j0 <= j <= horizon.

    ``a`` is either a full stage-i element (one function per summand) or a
    single function placed in summand t. Norms are read off the eigenvalue
    maps, never by materialising the pushed element.
    """
    if not 1 <= i < horizon <= sys.n_stages:
        raise BadIndices(f"need 1 <= i < horizon <= {sys.n_stages}")
    element = a if isinstance(a, (list, tuple)) else sys.element_in_summand(i, t, a)
    norms = []
    for tt, (f, s) in enumerate(zip(element, sys.summands(i))):
        if f.space is not s.space or f.n != s.size:
            raise SizeMismatch(f"component {tt} does not live in summand ({i},{tt})")
        norms.append(pointwise_norms(f))
    if max(float(n.max()) for n in norms) == 0.0:
        raise ZeroInput("the element is zero")
    mins, passes = {}, {}
    for j in range(i + 1, horizon + 1):
        low = np.inf
        for l, target in enumerate(sys.summands(j)):
            here = np.zeros(len(target.space))
            for tt in range(len(element)):
                for _, lam in sys.edges(i, tt, j, l):
                    np.maximum(here, norms[tt][lam.table], out=here)
            low = min(low, float(here.min()))
        mins[j] = low
        passes[j] = low > tol
    return NonzeroReport(i, horizon, _first_stable(passes, i, horizon), mins)


def select_centers(space, rule) -> list[int]:
    """``"all"``, ``"grid:K"`` (K evenly spaced indices) or an explicit index list."""
    if isinstance(rule, str):
        if rule == "all":
            return list(range(len(space)))
        if rule.startswith("grid:"):
            k = int(rule.split(":", 1)[1])
            return sorted(set(int(round(v)) for v in np.linspace(0, len(space) - 1, k)))
        raise ValueError(f"unknown center rule {rule!r}")
    return [int(c) for c in rule]


@dataclass
class ProbeRow:
    stage: int
    summand: int
    center: int
    label: str
    radius: float
    j0: Optional[int]
    horizon: int


@dataclass
class ProbeReport:
    horizon: int
    rows: list

    @property
    def all_covered(self) -> bool:
        return all(r.j0 is not None for r in self.rows)

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r.j0 is None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "summand", "center", "radius", "j0", "horizon"])
        for r in self.rows:
            w.writerow([r.stage, r.summand, r.label, repr(r.radius),
                        r.j0 if r.j0 is not None else "FAIL", r.horizon])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"horizon {self.horizon}: {len(self.rows)} balls, "
                 f"{len(self.failures)} not covered"]
        for r in self.rows:
            res = f"j0={r.j0}" if r.j0 is not None else "FAIL"
            lines.append(f"  stage {r.stage} summand {r.summand} center {r.label} "
                         f"radius {r.radius!r}: {res}")
        return "\n".join(lines)


def simplicity_probe(sys: AHSystem, horizon: int, radii: Sequence[float] = (0.3, 0.5),
                     centers="grid:11", stages: Optional[Sequence[int]] = None) -> ProbeReport:
    """Run the covering check over balls of the given radii at every stage below the horizon."""
    if not 2 <= horizon <= sys.n_stages:
        raise BadIndices(f"horizon {horizon} outside 2..{sys.n_stages}")
    work = injectivize(sys, horizon) if sys.horizon_tag is None else sys
    rows = []
    for i in (stages or range(1, horizon)):
        for t, s in enumerate(work.summands(i)):
            for c in select_centers(s.space, centers):
                for r in sorted(radii):
                    U = ball(s.space, Subset.of(s.space, [c]), r)
                    cert = covering_check(work, i, U, horizon, t=t, injectivize_first=False)
                    rows.append(ProbeRow(i, t, c, str(s.space.points[c]), float(r), cert.j0, horizon))
    return ProbeReport(horizon, rows)
