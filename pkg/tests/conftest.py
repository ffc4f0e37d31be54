import numpy as np
import pytest
from hypothesis import settings

from diagah.metric_space import FiniteMetricSpace

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_space(seed, n=None, dim=2, max_points=50):
    """Random Euclidean point cloud; duplicate points are jittered apart."""
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(1, max_points + 1))
    pts = rng.random((n, dim))
    pts += np.arange(n)[:, None] * 1e-9
    return FiniteMetricSpace.from_coords(pts, name=f"rand{seed}")


def path_metric_space(seed, n):
    """Shortest-path metric of a random weighted complete graph (not Euclidean)."""
    rng = np.random.default_rng(seed)
    w = rng.random((n, n)) + 0.05
    w = np.minimum(w, w.T)
    np.fill_diagonal(w, 0)
    d = w.copy()
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    d = np.minimum(d, d.T)
    return FiniteMetricSpace(f"path{seed}", list(range(n)), d)


@pytest.fixture
def line3():
    return FiniteMetricSpace.from_coords([0.0, 0.5, 1.0], name="L3")
