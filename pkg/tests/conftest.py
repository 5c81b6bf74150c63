import numpy as np
import pytest

from expander_cs import (
    SensingMatrix,
    affine_plane_graph,
    cover_set,
    find_certified_graph,
)
from expander_cs.rng import stream


@pytest.fixture(scope="session")
def ag_graph():
    """Order-4 affine plane: n=20, m=16, d=4, exactly (2, eps)-expanding
    for every eps > 1/8."""
    return affine_plane_graph()


@pytest.fixture(scope="session")
def certified_small():
    """(graph, eps, k) triples certified by exhaustive enumeration."""
    out = []
    for n, m, d, k in [(16, 12, 4, 2), (24, 16, 4, 3), (12, 8, 3, 2)]:
        g, eps, _ = find_certified_graph(n, m, d, k, base_seed=0)
        out.append((g, eps, k))
    return out


@pytest.fixture(scope="session")
def small_sensing(certified_small):
    g, eps, k = certified_small[0]
    return SensingMatrix(g), cover_set(g), eps, k


def random_sparse(rng, n, k, signed=True, scale=1.0):
    x = np.zeros(n)
    support = rng.choice(n, size=k, replace=False)
    vals = rng.uniform(0.2, 1.0, size=k) * scale
    if signed:
        vals *= rng.choice([-1.0, 1.0], size=k)
    x[support] = vals
    return x


def rng_for(*key):
    return stream(20240811, *key)
