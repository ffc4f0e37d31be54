"""Corner extraction: conjugating a diagonal image so that f(x0) sits in the corner.

Given phi(f) = diag(f o lam_1, ..., f o lam_n) and closed sets F_k on which
lam_k stays within eta of x0, ``corner_extract`` builds a unitary u in
M_m(C(Y)) (+) 1_{n-m} with

    || u(y) phi(f)(y) u(y)* - diag(f(x0), b(y), f o lam_{m+1}(y), ...) || <= eps

on the union of the F_k. The unitary is assembled one set at a time: step k
multiplies by a crossing unitary for the transposition (1 k+1) that is the
identity away from a delta-neighbourhood of F_k and the swap on F_k.

Matrix-valued f (size s > 1) uses the same scalar unitary: in the tensor
layout it acts as 1_s (x) u, and the intertwining permutation moves it to the
block-diagonal layout, where it equals kron(u, 1_s).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
import numpy as np

from .diagonal_hom import AHSystem, DiagonalHom, apply, ep_preimage, system_compose, tensor_intertwiner
from .errors import (EmptyF, HorizonExhausted, HypothesisFailed, NotCovering, SizeMismatch,
                     SpaceMismatch, ToleranceTooLarge)
from .homotopy import transposition_factorization
from .matrix_function import (MatrixFunction, block_diag, function_from_list, function_to_list,
                              operator_norm, pointwise_norms)
from .metric_space import (Subset, ScalarFunction, ball, bounded_extension, continuity_delta,
                           modulus_eta, urysohn, violation_distance)

CLAIM_TOL = 1e-9


@dataclass
class CornerReport:
    eps: float
    eta: float
    delta: float
    x0: int
    x0_slack: float
    order: list            # eigenvalue-map index processed at each position
    depth: int             # number of F-sets (m)
    achieved: float        # sup over the union of F of the conjugation error
    global_estimate: float  # sup over Y of ||diag(eps_i)||
    claim_residual: float  # sup over the union of F of ||u g u* - target||
    claim_steps: list = field(default_factory=list)
    off_block_exact: bool = True

    @property
    def bound(self) -> float:
        return 2 * self.eps


def _resolve_point(space, x0):
    """Index of x0 and the distance to the net point actually used."""
    if isinstance(x0, (int, np.integer)):
        if not 0 <= x0 < len(space):
            raise IndexError(f"x0={x0} outside {space!r}")
        return int(x0), 0.0
    i = space.nearest(float(x0))
    return i, float(abs(space.coords[i] - float(x0)))


def _as_matrix_values(f):
    vals = np.asarray(f.values)
    if vals.ndim == 1:
        return vals.astype(complex)[:, None, None]
    return vals.astype(complex)


def _kron_layout(u_scalar: np.ndarray, s: int) -> np.ndarray:
    """Block-diagonal-layout unitary for a scalar-level u, via the tensor intertwiner."""
    if s == 1:
        return u_scalar
    N, n, _ = u_scalar.shape
    tensor = np.zeros((N, n * s, n * s), dtype=complex)
    for a in range(s):
        tensor[:, a * n:(a + 1) * n, a * n:(a + 1) * n] = u_scalar
    pi = np.array(tensor_intertwiner(n, s).images)
    out = np.empty_like(tensor)
    # U[pi] X U[pi]^T: entry (p, q) moves to (pi(p), pi(q)); exact reindexing
    out[:, pi[:, None], pi[None, :]] = tensor
    return out


def _claim_residual(u, g, fx0, points, k1):
    """Max deviation of u g u* from diag(f(x0), *, g_k1, ...) on ``points``.

    ``u`` is scalar level (N, n, n), ``g`` is (N, n, s, s). Only the first
    block row/column can deviate; the trailing rows are untouched exactly,
    which is checked structurally.
    """
    if len(points) == 0:
        return 0.0
    up = u[points]
    gp = g[points]
    row0 = np.einsum("pk,pkab,pjk->pjab", up[:, 0, :], gp, up.conj())
    col0 = np.einsum("pjk,pkab,pk->pjab", up, gp, up[:, 0, :].conj())
    row0[:, 0] -= fx0
    col0[:, 0] -= fx0
    res = max(np.abs(row0).max(), np.abs(col0).max())
    n = u.shape[1]
    if k1 < n:
        tail = u[:, k1:, :]
        ident = np.eye(n)[k1:]
        if not np.array_equal(tail, np.broadcast_to(ident, tail.shape)):
            return np.inf
    return float(res)


def _extract(phi: DiagonalHom, fvals: np.ndarray, x0: int, eps: float, Fs: list, eta: float,
             check_claim: bool):
    """Core recursion. Maps are used in stored order; Fs[k] pairs with map k."""
    Y = phi.target
    X = phi.source
    maps = phi.maps
    n = len(maps)
    m = len(Fs)
    s = fvals.shape[1]
    if m == 0:
        raise EmptyF("need at least one F-set")
    if m > n:
        raise ValueError(f"{m} F-sets for {n} eigenvalue maps")
    for k, F in enumerate(Fs):
        if len(F) == 0:
            raise EmptyF(f"F_{k + 1} is empty")
        if F.space is not Y:
            raise SpaceMismatch(f"F_{k + 1} is not a subset of {Y!r}")
        far = X.dist[maps[k].table[F.indices], x0]
        if np.any(far >= eta):
            raise HypothesisFailed(f"F_{k + 1}: eigenvalue map reaches distance {far.max()!r} "
                                   f">= eta={eta!r} from x0")

    delta = continuity_delta(list(maps), eta)
    fx0 = fvals[x0]

    # eps_k on the closed delta-neighbourhood of F_k, extended with norm <= eps
    img = np.stack([fvals[lam.table] for lam in maps], axis=1)  # (Ny, n, s, s)
    errs = np.zeros_like(img)
    for k, F in enumerate(Fs):
        nb = ball(Y, F, delta)
        local = img[nb.indices, k] - fx0
        # the local values are strictly inside eps; clamping at their own
        # maximum keeps the extension strictly inside as well
        r = float(np.linalg.norm(local, ord=2, axis=(1, 2)).max())
        ext = bounded_extension(Y, nb, local if s > 1 else local[:, 0, 0], r)
        errs[:, k] = ext.values if s > 1 else ext.values[:, None, None]
    g = img - errs

    union = np.zeros(len(Y), dtype=bool)
    union[Fs[0].indices] = True
    u = np.broadcast_to(np.eye(n, dtype=complex), (len(Y), n, n)).copy()
    steps = []
    if check_claim:
        steps.append(_claim_residual(u, g, fx0, np.flatnonzero(union), 1))
    for k in range(1, m):
        B = Fs[k]
        A = Subset.all(Y) - ball(Y, B, delta)
        if len(A):
            t = urysohn(Y, A, B).values.real
        else:
            t = np.ones(len(Y))
        fac = transposition_factorization(k, n)
        inner = fac.inner.evaluate_many(t)                 # (Ny, 2, 2)
        rows = list(fac.slot)
        u[:, rows, :] = inner @ u[:, rows, :]              # u_{k+1} = v u_k
        union[B.indices] = True
        if check_claim:
            steps.append(_claim_residual(u, g, fx0, np.flatnonzero(union), k + 1))

    off_block_exact = bool(
        np.array_equal(u[:, m:, :], np.broadcast_to(np.eye(n)[m:], u[:, m:, :].shape))
        and np.array_equal(u[:, :, m:], np.broadcast_to(np.eye(n)[:, m:], u[:, :, m:].shape)))

    pts = np.flatnonzero(union)
    claim = _claim_residual(u, g, fx0, pts, m)

    U = _kron_layout(u, s)
    image = block_diag([img[:, k] for k in range(n)])
    G = block_diag([g[:, k] for k in range(n)])
    UG = U @ G @ U.conj().transpose(0, 2, 1)
    target = UG.copy()
    target[:, :s, :] = 0
    target[:, :, :s] = 0
    target[:, :s, :s] = fx0
    conj = U @ image @ U.conj().transpose(0, 2, 1)
    diff = (conj - target)[pts]
    achieved = float(np.linalg.norm(diff, ord=2, axis=(1, 2)).max()) if diff.shape[1] else 0.0
    global_est = float(pointwise_norms(MatrixFunction(Y, block_diag([errs[:, k] for k in range(n)]))).max())
    return dict(u=U, target=target, conj=conj, delta=delta, achieved=achieved, claim=claim,
                steps=steps, global_estimate=global_est, off_block_exact=off_block_exact,
                union=pts)


def corner_extract(phi: DiagonalHom, f, x0, eps: float, Fs: list, check_claim: bool = True):
    """Corner extraction for a map on scalars (phi.size == 1).

    Returns ``(u, b, report)``: u is the unitary (size n), b the middle block
    of the conjugated comparison element (size m - 1).
    """
    if phi.size != 1:
        raise SizeMismatch("corner_extract acts on C(X); use covering_corner for matrices")
    if f.space is not phi.source:
        raise SpaceMismatch("f does not live on the map's source space")
    if eps <= 0:
        raise ValueError("eps must be positive")
    x0, slack = _resolve_point(phi.source, x0)
    fvals = _as_matrix_values(f)
    _, eta = _covering_radius(ScalarFunction(f.space, fvals[:, 0, 0]), eps, x0, phi.source)
    r = _extract(phi, fvals, x0, eps, list(Fs), eta, check_claim)
    m = len(Fs)
    Y = phi.target
    u = MatrixFunction(Y, r["u"])
    b = MatrixFunction(Y, r["target"][:, 1:m, 1:m])
    report = CornerReport(eps, eta, r["delta"], x0, slack, list(range(len(phi.maps))), m,
                          r["achieved"], r["global_estimate"], r["claim"], r["steps"],
                          r["off_block_exact"])
    return u, b, report


def _covering_radius(f, eps, x0, space):
    """eta from the modulus; when f has no eps-violating pair any ball works, so cover X."""
    eta = modulus_eta(f, eps)
    if np.isfinite(violation_distance(f, eps)):
        return eta, eta
    diam = space.diameter
    return eta, (2 * diam if diam > 0 else 1.0)


def covering_corner(phi: DiagonalHom, f: MatrixFunction, x0, eps: float, check_claim: bool = False):
    """u phi(f) u* within eps (certified < 2 eps) of diag(f(x0), b) on all of Y.

    Requires the eigenvalue preimages of the eta-ball around x0 to cover Y.
    Maps whose preimage is empty are moved to the back (a block permutation,
    folded into u). Returns ``(u, b, report)``.
    """
    if f.space is not phi.source:
        raise SpaceMismatch("f does not live on the map's source space")
    if f.n != phi.size:
        raise SizeMismatch(f"f has size {f.n}, map expects {phi.size}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    X, Y = phi.source, phi.target
    x0, slack = _resolve_point(X, x0)
    eta, eta_used = _covering_radius(f, eps, x0, X)
    U = ball(X, Subset.of(X, [x0]), eta_used)
    pre = [lam.preimage(U) for lam in phi.maps]
    if not phi.maps or len(ep_preimage(phi.maps, U)) != len(Y):
        raise NotCovering("eigenvalue preimages of the ball do not cover Y")

    order = [k for k, p in enumerate(pre) if len(p)] + [k for k, p in enumerate(pre) if not len(p)]
    m = sum(1 for p in pre if len(p))
    reordered = DiagonalHom(phi.size, X, Y, [phi.maps[k] for k in order])
    r = _extract(reordered, f.values, x0, eps, [pre[k] for k in order[:m]], eta_used, check_claim)

    s = phi.size
    rows_new = np.concatenate([np.arange(k * s, (k + 1) * s) for k in order])
    u_total = np.empty_like(r["u"])
    u_total[:, :, rows_new] = r["u"]
    u = MatrixFunction(Y, u_total)
    b = MatrixFunction(Y, r["target"][:, s:, s:])
    report = CornerReport(eps, eta_used, r["delta"], x0, slack, order, m, r["achieved"],
                          r["global_estimate"], r["claim"], r["steps"], r["off_block_exact"])
    report.target = MatrixFunction(Y, r["target"])
    return u, b, report


@dataclass
class SummandCorner:
    l: int
    cut: np.ndarray               # rows of summand (j, l) holding the image of summand (i, t)
    unitary: MatrixFunction       # full size n_{j,l}, identity off the cut
    target: MatrixFunction        # diag(f(x0), b_l) in cut coordinates
    image: MatrixFunction         # phi^{t,l}_{i,j}(f) in cut coordinates
    achieved: float
    report: CornerReport


@dataclass
class CornerCertificate:
    i: int
    t: int
    j: int
    eps: float
    x0: int
    x0_slack: float
    source_size: int
    summands: list
    f: MatrixFunction = field(repr=False)

    @property
    def bound(self) -> float:
        return 2 * self.eps

    @property
    def achieved(self) -> float:
        return max(sc.achieved for sc in self.summands)

    @property
    def within_eps(self) -> bool:
        """Tighter bound (< eps) than the one the construction guarantees (< 2 eps)."""
        return self.achieved < self.eps

    def to_json(self, include_unitaries=False) -> str:
        data = {
            "stage": self.i, "summand": self.t, "certified_stage": self.j,
            "eps": self.eps, "bound": self.bound, "x0": self.x0, "x0_slack": self.x0_slack,
            "achieved": self.achieved,
            "f": function_to_list(self.f),
            "summands": [],
        }
        for sc in self.summands:
            entry = {"l": sc.l, "achieved": sc.achieved,
                     "block_sizes": [self.source_size, len(sc.cut) - self.source_size],
                     "cut": [int(c) for c in sc.cut], "order": sc.report.order,
                     "eta": sc.report.eta, "delta": sc.report.delta}
            if include_unitaries:
                entry["unitary"] = function_to_list(sc.unitary)
            data["summands"].append(entry)
        return json.dumps(data, indent=1)


def property_p_certify(sys: AHSystem, i: int, t: int, f: MatrixFunction, x0, eps: float,
                       horizon: int) -> CornerCertificate:
    """Find the first stage j <= horizon where every phi^{t,l}_{i,j} covers, and extract corners."""
    s = sys.summand(i, t)
    if f.space is not s.space or f.n != s.size:
        raise SizeMismatch(f"f does not live in summand ({i},{t})")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if horizon > sys.n_stages:
        raise HorizonExhausted(f"horizon {horizon} beyond the last stage {sys.n_stages}")
    x0, slack = _resolve_point(s.space, x0)
    _, eta_used = _covering_radius(f, eps, x0, s.space)
    U = ball(s.space, Subset.of(s.space, [x0]), eta_used)

    for j in range(i + 1, horizon + 1):
        homs = [system_compose(sys, i, j, t, l) for l in range(len(sys.summands(j)))]
        if any(h is None for h in homs):
            continue
        if all(len(ep_preimage(h.maps, U)) == len(h.target) for h in homs):
            break
    else:
        raise HorizonExhausted(f"no stage in ({i}, {horizon}] covers the ball of radius "
                               f"{eta_used!r} around point {x0}")

    parts = []
    for l, hom in enumerate(homs):
        u, b, rep = covering_corner(hom, f, x0, eps)
        n_jl = sys.summand(j, l).size
        cut = hom.cut_indices()
        full = np.broadcast_to(np.eye(n_jl, dtype=complex), (len(hom.target), n_jl, n_jl)).copy()
        full[:, cut[:, None], cut[None, :]] = u.values
        parts.append(SummandCorner(l, cut, MatrixFunction(hom.target, full), rep.target,
                                   apply(hom, f), rep.achieved, rep))
    return CornerCertificate(i, t, j, eps, x0, slack, s.size, parts, f)


def replay_certificate(sys: AHSystem, text: str) -> tuple[CornerCertificate, bool]:
    """Rebuild a certificate from its JSON and compare every achieved norm bit for bit."""
    data = json.loads(text)
    i, t = data["stage"], data["summand"]
    f = function_from_list(sys.summand(i, t).space, data["f"])
    cert = property_p_certify(sys, i, t, f, data["x0"], data["eps"], data["certified_stage"])
    same = (cert.j == data["certified_stage"]
            and [sc.achieved for sc in cert.summands] == [e["achieved"] for e in data["summands"]])
    return cert, same


@dataclass
class NonvanishingReport:
    norm_at_x0: float
    margin: float
    lower_bound: float


def property_p_implies_nonvanishing(cert: CornerCertificate, f: MatrixFunction, x0) -> NonvanishingReport:
    """With ||f(x0)|| > 2 eps, the certified image of f has no zero."""
    x0, _ = _resolve_point(f.space, x0)
    nx0 = operator_norm(f.values[x0])
    if nx0 <= 2 * cert.eps:
        raise ToleranceTooLarge(f"||f(x0)|| = {nx0!r} <= 2 eps = {2 * cert.eps!r}")
    margin = min(float(pointwise_norms(sc.image).min()) for sc in cert.summands)
    return NonvanishingReport(nx0, margin, nx0 - cert.achieved)
