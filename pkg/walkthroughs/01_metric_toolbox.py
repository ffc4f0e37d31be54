"""Walkthrough 1: finite metric nets and the functions built on them.

Run: python walkthroughs/01_metric_toolbox.py
"""
import numpy as np

from diagah.metric_space import (FiniteMetricSpace, ScalarFunction, Subset, ball, bounded_extension,
                                 continuity_delta, modulus_eta, urysohn)
from diagah.diagonal_hom import PointMap

# A 21-point grid on [0, 1]; every object below lives on this net.
X = FiniteMetricSpace.interval(0, 1, 21)
print(X)

# Strict balls: points at distance < 0.15 from {0.5}.
centre = Subset.of(X, [X.nearest(0.5)])
print("ball(0.5, 0.15) ->", X.coords[ball(X, centre, 0.15).indices])

# An Urysohn function is 0 on A, 1 on B, and in between elsewhere.
A = Subset.of(X, [0, 1, 2])
B = Subset.of(X, [18, 19, 20])
u = urysohn(X, A, B)
print("urysohn:", np.round(u.values, 2))

# Extend complex data from A to all of X without growing past radius r.
data = np.array([1.0, 1j, -1.0])
ext = bounded_extension(X, A, data, r=1.0)
print("extension agrees on A:", np.allclose(ext.values[A.indices], data),
      "| sup |ext| =", round(float(np.abs(ext.values).max()), 3))

# How close must two points be for f to move by less than eps?
f = ScalarFunction(X, np.sin(3 * X.coords))
eta = modulus_eta(f, 0.2)
print("modulus eta for sin(3x), eps=0.2:", eta)

# And how close must points be so that a family of maps moves them by less than eta?
maps = [PointMap.identity(X), PointMap.affine(X, X, 0.0, 0.5)]
print("continuity delta for {id, x/2}:", continuity_delta(maps, eta))
