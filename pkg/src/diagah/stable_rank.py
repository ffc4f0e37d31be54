"""Invertible approximation in diagonal AH systems.

The pipeline for a stage-i element a, one corner (summand) at a time:

1. a corner already invertible is kept as it is;
2. otherwise pick the point x0 where sigma_min is smallest;
3. constant unitaries u, v with u a(x0) v = diag(0, c);
4. a property-P certificate for b = u a v at x0 gives a stage j and
   unitaries w_l with w phi_ij(b) w* close to diag(b(x0), b'_l);
5. zeroing the first row and column of that target gives an element whose
   image at a later stage m, after collecting the zero rows in front, has
   the shape diag(0_Z, b''_1, ..., b''_Z) with Z larger than every block;
6. the cyclic block shift makes such an element strictly upper triangular,
   so adding delta on the shifted diagonal makes it invertible;
7. all conjugations are undone and the corners are summed at a common stage.

Distances and margins are recomputed from raw data by ``verify``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corner import property_p_certify
from .diagonal_hom import AHSystem, system_compose
from .errors import (BadIndices, CertificateFailed, CornerTooSmall, HorizonExhausted,
                     MissingStructure, SizeMismatch, SlotOverlap)
from .homotopy import Permutation
from .matrix_function import (SINGULAR_TOL, MatrixFunction, finite_dim_invertible_approx,
                              invertibility_margin, pointwise_norms, smallest_singular_values,
                              svd_zero_corner)


def block_shift(k: int, block_sizes: Sequence[int]) -> Permutation:
    """Row permutation sending block rows (B_0, B_1, ..., B_n) to (B_1, ..., B_n, B_0).

    As a matrix U[pi] with (U a)[p] = a[order[p]]; B_0 has size k.
    """
    order = _shift_order(k, block_sizes)
    images = [0] * len(order)
    for p, r in enumerate(order):
        images[r] = p
    return Permutation(images)


def _shift_order(k, block_sizes):
    n = k + sum(block_sizes)
    return np.concatenate([np.arange(k, n), np.arange(k)]).astype(int)


def _check_structure(a: np.ndarray, k: int, block_sizes) -> None:
    mask = np.ones(a.shape[1:], dtype=bool)
    o = k
    for s in block_sizes:
        mask[o:o + s, o:o + s] = False
        o += s
    if np.any(a[:, mask] != 0):
        raise MissingStructure("entries outside diag(0_k, a_1, ..., a_n) are not zero")


def zero_corner_invertible(a: MatrixFunction, k: int, block_sizes: Sequence[int], eps: float,
                           delta: Optional[float] = None) -> MatrixFunction:
    """b = U^-1 (U a + delta 1) for a = diag(0_k, a_1, ..., a_n); ||a - b|| = delta.

    U a is strictly upper triangular (checked entry by entry), so U a + delta 1
    is upper triangular with delta on the diagonal.
    """
    block_sizes = [int(s) for s in block_sizes]
    if eps <= 0:
        raise ValueError("eps must be positive")
    if k + sum(block_sizes) != a.n:
        raise MissingStructure(f"blocks {k} + {block_sizes} do not fill size {a.n}")
    if block_sizes and k <= max(block_sizes):
        raise CornerTooSmall(f"zero corner {k} is not larger than block size {max(block_sizes)}")
    delta = eps / 2 if delta is None else float(delta)
    if not 0 < delta <= eps / 2:
        raise ValueError("delta must lie in (0, eps/2]")
    _check_structure(a.values, k, block_sizes)
    order = _shift_order(k, block_sizes)
    shifted = a.values[:, order, :]
    if np.any(np.tril(np.ones(a.n, dtype=bool))[None] & (shifted != 0)):
        raise MissingStructure("shifted element is not strictly upper triangular")
    diag = np.arange(a.n)
    shifted[:, diag, diag] = delta
    b = np.empty_like(shifted)
    b[:, order, :] = shifted
    return MatrixFunction(a.space, b)


@dataclass
class CornerPart:
    """An element at ``stage`` supported on ``slots[q] x slots[q]`` in summand q."""

    stage: int
    element: list
    slots: list
    distance: float
    margin: float
    trace: dict = field(default_factory=dict)


def corner_sum_invertible(p: CornerPart, q: CornerPart) -> CornerPart:
    """Direct sum of two parts with orthogonal slots at the same stage."""
    if p.stage != q.stage:
        raise SlotOverlap(f"parts live at stages {p.stage} and {q.stage}")
    if len(p.slots) != len(q.slots):
        raise SlotOverlap("parts have different numbers of summands")
    for a, b in zip(p.slots, q.slots):
        if np.intersect1d(a, b).size:
            raise SlotOverlap("slots overlap")
    element = [MatrixFunction(x.space, x.values + y.values) for x, y in zip(p.element, q.element)]
    slots = [np.union1d(a, b) for a, b in zip(p.slots, q.slots)]
    return CornerPart(p.stage, element, slots, max(p.distance, q.distance), min(p.margin, q.margin))


def corner_slots(sys: AHSystem, i: int, t: int, m: int) -> list:
    """Rows of each stage-m summand occupied by the image of summand (i, t)."""
    if m == i:
        return [np.arange(s.size) if tt == t else np.zeros(0, dtype=int)
                for tt, s in enumerate(sys.summands(i))]
    out = []
    for q in range(len(sys.summands(m))):
        hom = system_compose(sys, i, m, t, q)
        out.append(np.zeros(0, dtype=int) if hom is None else hom.cut_indices())
    return out


def _slot_margin(element, slots) -> float:
    low = np.inf
    for f, sl in zip(element, slots):
        if len(sl):
            sub = f.values[:, sl[:, None], sl[None, :]]
            low = min(low, float(np.linalg.svd(sub, compute_uv=False)[:, -1].min()))
    return low


def _restrict(f: MatrixFunction, rows) -> np.ndarray:
    return f.values[:, rows[:, None], rows[None, :]]


def _embed(space, n, rows, vals) -> MatrixFunction:
    out = np.zeros((len(space), n, n), dtype=complex)
    out[:, rows[:, None], rows[None, :]] = vals
    return MatrixFunction(space, out)


def _unit_with(sys, stage, t, block: MatrixFunction) -> list:
    el = sys.unit_element(stage)
    el[t] = block
    return el


def _find_stage_m(sys, j, corner_l, remainder, horizon):
    """First m in (j, horizon] where every summand has enough collected zeros."""
    for m in range(j + 1, horizon + 1):
        plan = []
        ok = True
        for q, target in enumerate(sys.summands(m)):
            blocks = [(o, l) for l in corner_l for o, _ in sys.edges(j, l, m, q)]
            blocks.sort()
            sizes = [remainder[l] for _, l in blocks]
            single = len(target.space) == 1
            if blocks and not single and len(blocks) <= max(sizes):
                ok = False
                break
            plan.append((q, blocks, single))
        if ok:
            return m, plan
    raise HorizonExhausted(f"no stage in ({j}, {horizon}] has more zero rows than block size")


def _summand_pipeline(sys: AHSystem, i: int, t: int, a_t: MatrixFunction, eps: float,
                      horizon: int, tol: float) -> CornerPart:
    margin, x0 = invertibility_margin(a_t)
    trace = {"summand": t, "x0": x0, "sigma_min_at_x0": margin}
    u, v, c = svd_zero_corner(a_t.values[x0], tol)
    b = MatrixFunction(a_t.space, u @ a_t.values @ v)
    budget = eps / 4
    try:
        cert = property_p_certify(sys, i, t, b, x0, budget, horizon)
    except HorizonExhausted as exc:
        raise CertificateFailed(f"summand {t}: {exc}") from exc
    if cert.achieved >= 2 * budget:
        raise CertificateFailed(f"summand {t}: corner error {cert.achieved!r} >= {2 * budget!r}")
    j = cert.j
    trace.update(certified_stage=j, corner_eps=budget, corner_achieved=cert.achieved)

    # stage-j element E: first row and column of each corner target zeroed
    E = sys.zero_element(j)
    W = sys.unit_element(j)
    corner_l, remainder, residual = [], {}, 0.0
    for sc in cert.summands:
        D0 = sc.target.values.copy()
        D0[:, 0, :] = 0
        D0[:, :, 0] = 0
        residual = max(residual, float(pointwise_norms(
            MatrixFunction(sc.target.space, sc.target.values - D0)).max()))
        n_jl = sys.summand(j, sc.l).size
        E[sc.l] = _embed(sc.target.space, n_jl, sc.cut, D0)
        W[sc.l] = sc.unitary
        corner_l.append(sc.l)
        remainder[sc.l] = len(sc.cut) - 1
    trace["zeroing_residual"] = residual

    m, plan = _find_stage_m(sys, j, corner_l, remainder, horizon)
    trace["collection_stage"] = m
    delta = eps / 2
    slots = corner_slots(sys, i, t, m)
    cut_of = {sc.l: sc.cut for sc in cert.summands}
    pushed_E = sys.push(E, j, m)
    pushed_W = sys.push(W, j, m)
    pushed_U = sys.push(_unit_with(sys, i, t, MatrixFunction.constant(a_t.space, u)), i, m)
    pushed_V = sys.push(_unit_with(sys, i, t, MatrixFunction.constant(a_t.space, v)), i, m)

    element, branches, collection = [], [], {}
    for q, blocks, single in plan:
        target = sys.summand(m, q)
        if not blocks:
            element.append(MatrixFunction.zeros(target.space, target.size))
            continue
        zeros = np.array([o + cut_of[l][0] for o, l in blocks], dtype=int)
        rest = [o + cut_of[l][1:] for o, l in blocks]
        rows = np.concatenate([zeros] + rest)
        collection[q] = [int(r) for r in rows]
        if not np.array_equal(np.sort(rows), slots[q]):
            raise AssertionError("collected rows disagree with the corner slot")
        collected = _restrict(pushed_E[q], rows)
        if single:
            e = finite_dim_invertible_approx(collected[0], eps)[None]
            branches.append("finite-dim")
        else:
            e = zero_corner_invertible(MatrixFunction(target.space, collected), len(zeros),
                                       [len(r) for r in rest], eps, delta).values
            branches.append("zero-corner")
        # undo: phi(u)* phi(w)* e phi(w) phi(v)*, all restricted to the slot
        sl = slots[q]
        e_slot = np.empty_like(e)
        pos = np.searchsorted(sl, rows)
        e_slot[:, pos[:, None], pos[None, :]] = e
        Pw = _restrict(pushed_W[q], sl)
        Pu = _restrict(pushed_U[q], sl)
        Pv = _restrict(pushed_V[q], sl)
        H = lambda x: np.conj(np.swapaxes(x, 1, 2))
        val = H(Pu) @ H(Pw) @ e_slot @ Pw @ H(Pv)
        element.append(_embed(target.space, target.size, sl, val))
    trace["branches"] = branches
    trace["collection"] = collection
    trace["delta"] = delta
    book = cert.achieved + residual + delta
    return CornerPart(m, element, slots, book, _slot_margin(element, slots), trace)


def _kept_part(sys, i, t, a_t) -> CornerPart:
    element = sys.element_in_summand(i, t, a_t)
    slots = corner_slots(sys, i, t, i)
    return CornerPart(i, element, slots, 0.0, _slot_margin(element, slots),
                      {"summand": t, "kept": True})


def _advance(sys, part: CornerPart, i, t, M) -> CornerPart:
    if part.stage == M:
        return part
    element = sys.push(part.element, part.stage, M)
    slots = corner_slots(sys, i, t, M)
    return CornerPart(M, element, slots, part.distance, _slot_margin(element, slots), part.trace)


@dataclass
class InvertibleApproximant:
    stage: int
    element: list
    eps: float
    distance: float          # recomputed from raw data
    margin: float            # recomputed from raw data
    bookkeeping: float       # sum of the budget contributions
    trace: list

    @property
    def ok(self) -> bool:
        return self.distance < self.eps and self.margin > 0

    def report(self) -> dict:
        return {"stage": self.stage, "eps": self.eps, "distance": self.distance,
                "margin": self.margin, "bookkeeping": self.bookkeeping, "summands": self.trace}

    def to_json(self) -> str:
        return json.dumps(self.report(), indent=1, sort_keys=True)


def verify(sys: AHSystem, i: int, a: Sequence[MatrixFunction], stage: int, element) -> tuple[float, float]:
    """(sup ||phi_{i,stage}(a) - element||, min sigma_min(element)), from scratch."""
    target = sys.push(list(a), i, stage)
    dist, margin = 0.0, np.inf
    for x, y in zip(target, element):
        if y.n == 0:
            continue
        dist = max(dist, float(pointwise_norms(MatrixFunction(x.space, x.values - y.values)).max()))
        margin = min(margin, float(smallest_singular_values(y).min()))
    return dist, margin


def invertible_approx(sys: AHSystem, i: int, a, eps: float, horizon: int,
                      tol: float = SINGULAR_TOL) -> InvertibleApproximant:
    """Invertible element at some stage <= horizon within eps of the image of ``a``.

    ``a`` is a stage-i element (list, one function per summand) or a single
    function when stage i has one summand.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 1 <= i < horizon <= sys.n_stages:
        raise BadIndices(f"need 1 <= i < horizon <= {sys.n_stages}")
    a = list(a) if isinstance(a, (list, tuple)) else [a]
    if len(a) != len(sys.summands(i)):
        raise SizeMismatch(f"stage {i} has {len(sys.summands(i))} summands, got {len(a)} components")
    for t, (f, s) in enumerate(zip(a, sys.summands(i))):
        if f.space is not s.space or f.n != s.size:
            raise SizeMismatch(f"component {t} does not live in summand ({i},{t})")

    parts = []
    for t, a_t in enumerate(a):
        if invertibility_margin(a_t)[0] > tol:
            parts.append(_kept_part(sys, i, t, a_t))
        else:
            parts.append(_summand_pipeline(sys, i, t, a_t, eps, horizon, tol))
    M = max(p.stage for p in parts)
    combined = None
    for t, p in enumerate(parts):
        p = _advance(sys, p, i, t, M)
        combined = p if combined is None else corner_sum_invertible(combined, p)
    dist, margin = verify(sys, i, a, M, combined.element)
    return InvertibleApproximant(M, combined.element, eps, dist, margin, combined.distance,
                                 [p.trace for p in parts])
