"""Walkthrough 3: moving f(x0) into the corner of a diagonal image.

Run: python walkthroughs/03_corner_extraction.py
"""
import numpy as np

from diagah.corner import corner_extract
from diagah.diagonal_hom import DiagonalHom, PointMap
from diagah.metric_space import FiniteMetricSpace, ScalarFunction, Subset, ball, modulus_eta

X = Y = FiniteMetricSpace.interval(0, 1, 201)
f = ScalarFunction(X, np.cos(2 * np.pi * X.coords) + 0.5j * X.coords)
x0 = X.nearest(0.25)

# Four eigenvalue maps. Two of them pass near x0 somewhere; one is a constant far away.
maps = [PointMap.identity(Y, X), PointMap.affine(Y, X, 0.5, -0.5), PointMap.constant(Y, X, 180),
        PointMap.affine(Y, X, 0.0, 0.3)]
phi = DiagonalHom(1, X, Y, maps)

eps = 0.1
U = ball(X, Subset.of(X, [x0]), modulus_eta(f, eps))
Fs = [lam.preimage(U) for lam in maps]
print("preimage sizes:", [len(F) for F in Fs])
# Nonempty preimages go first; the constant map at 0.9 never visits U.
order = [0, 1, 3, 2]
phi = DiagonalHom(1, X, Y, [maps[k] for k in order])
Fs = [Fs[k] for k in order if len(Fs[k])]

u, b, rep = corner_extract(phi, f, x0, eps, Fs)
print(f"achieved {rep.achieved:.4f} against eps {eps} (guaranteed < {rep.bound})")
print(f"claim residual {rep.claim_residual:.1e}, off-block exact: {rep.off_block_exact}")

y = Fs[0].indices[0]
conj = u.values[y] @ np.diag([f.values[lam.table[y]] for lam in phi.maps]) @ u.values[y].conj().T
print(f"at y={Y.coords[y]:.3f}: corner entry {conj[0, 0]:.4f}, f(x0) = {f.values[x0]:.4f}")
