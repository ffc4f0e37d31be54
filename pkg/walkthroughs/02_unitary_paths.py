"""Walkthrough 2: paths of unitaries between permutation matrices.

Run: python walkthroughs/02_unitary_paths.py
"""
import numpy as np

from diagah.homotopy import Permutation, commutator_defect, crossing_unitary, perm_matrix, sigma_path
from diagah.metric_space import FiniteMetricSpace, ScalarFunction, Subset

sigma = Permutation([2, 0, 1, 4, 3])
print("sigma =", sigma.images, "cycles:", sigma.cycles())

path = sigma_path(sigma)
ts = np.linspace(0, 1, 5)
for t, u in zip(ts, path.evaluate_many(ts)):
    print(f"t={t:.2f}  ||u u* - 1|| = {np.linalg.norm(u @ u.conj().T - np.eye(5), 2):.1e}"
          f"  ||u - U[sigma]|| = {np.linalg.norm(u - perm_matrix(sigma), 2):.3f}")

# Diagonals that are constant along the cycles of sigma commute with the whole path.
D = np.diag([2, 2, 2, 7j, 7j])
print("max commutator with D:", max(np.linalg.norm(u @ D - D @ u, 2) for u in path.evaluate_many(ts)))

# Crossing unitary: identity on A, U[sigma] on B, interpolated through an Urysohn function.
X = FiniteMetricSpace.interval(0, 1, 11)
A = Subset.of(X, [0, 1])
B = Subset.of(X, [9, 10])
lams = [ScalarFunction(X, np.full(11, c, dtype=complex)) for c in (1, 1, 1, 3, 3)]
v = crossing_unitary(X, A, B, sigma, lams)
print("v on A is 1:", np.array_equal(v.values[0], np.eye(5)),
      "| v on B is U[sigma]:", np.array_equal(v.values[10], perm_matrix(sigma)))
worst = max(commutator_defect(v.values[x], [lam.values[x] for lam in lams]) for x in range(len(X)))
print("worst pointwise commutator defect:", worst)
