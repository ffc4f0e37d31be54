"""Walkthrough 4: deciding, up to a horizon, whether eigenvalue maps eventually reach every open set.

Run: python walkthroughs/04_simplicity.py
"""
import numpy as np

from diagah.corner import property_p_certify, property_p_implies_nonvanishing
from diagah.demos import goodearl, identity_system
from diagah.matrix_function import MatrixFunction
from diagah.metric_space import Subset, ball
from diagah.simplicity import covering_check, simplicity_probe

g = goodearl(5)
X = g.summand(1, 0).space

# A single small ball around 0.8: once a point evaluation near 0.8 shows up, every stage after it sees U.
U = ball(X, Subset.of(X, [X.nearest(0.8)]), 0.1)
cert = covering_check(g, 1, U, horizon=5)
print(f"goodearl, ball(0.8, 0.1): {cert.verdict}, first stable stage j0={cert.j0}")

probe = simplicity_probe(g, horizon=4, radii=(0.3, 0.5), centers="grid:5")
print(probe.to_text())

# The identity system never leaves a ball, so the same question fails at every horizon.
ident = identity_system(6)
Xi = ident.summand(1, 0).space
Ui = ball(Xi, Subset.of(Xi, [Xi.nearest(0.8)]), 0.1)
print("identity system:", covering_check(ident, 1, Ui, horizon=6).verdict)

# A covered ball lets us conjugate f(x0) into a corner at a later stage.
f = MatrixFunction.scalar(X, np.exp(1j * X.coords))
pcert = property_p_certify(g, 1, 0, f, X.nearest(0.5), 0.3, horizon=4)
print(f"corner certificate at stage {pcert.j}: achieved {pcert.achieved:.3f} < {pcert.bound}"
      f" (also < eps: {pcert.within_eps})")
rep = property_p_implies_nonvanishing(pcert, f, X.nearest(0.5))
print(f"so the image of f has norm at least {rep.lower_bound:.3f} everywhere at stage {pcert.j}")
