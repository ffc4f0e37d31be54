"""Walkthrough 5: approximating a singular element by an invertible one further up the system.

Run: python walkthroughs/05_stable_rank.py
"""
import numpy as np

from diagah.demos import goodearl
from diagah.matrix_function import MatrixFunction, block_diag
from diagah.metric_space import FiniteMetricSpace
from diagah.stable_rank import invertible_approx, verify, zero_corner_invertible

# First the finite-dimensional trick: a zero corner bigger than every other block
# lets a cyclic block shift make the matrix strictly upper triangular, so adding
# a small multiple of the inverse shift gives an invertible matrix.
P = FiniteMetricSpace.interval(0, 1, 3)
rng = np.random.default_rng(0)
a = MatrixFunction(P, block_diag([np.zeros((3, 3, 3)), rng.normal(size=(3, 2, 2)), rng.normal(size=(3, 1, 1))]))
b = zero_corner_invertible(a, 3, [2, 1], eps=0.2)
print("distance", np.linalg.norm(b.values - a.values, 2, axis=(1, 2)).max(),
      "| smallest singular value", np.linalg.svd(b.values, compute_uv=False).min().round(6))

# Now the full pipeline on x - 0.5, which vanishes at 0.5.
g = goodearl(3)
X = g.summand(1, 0).space
res = invertible_approx(g, 1, MatrixFunction.scalar(X, X.coords - 0.5), eps=0.1, horizon=3)
print(f"stage {res.stage}: distance {res.distance:.4f} < 0.1, margin {res.margin:.2e}")
print("independent check (distance, margin):", verify(g, 1, [MatrixFunction.scalar(X, X.coords - 0.5)],
                                                       res.stage, res.element))
for key in ("certified_stage", "corner_achieved", "collection_stage", "delta"):
    print(f"  {key}: {res.trace[0][key]}")
