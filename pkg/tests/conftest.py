"""Shared fixtures and random-instance generators."""

import numpy as np
import pytest

from wisdomdyn import WeightedDigraph, build_reference_example, is_strongly_connected


@pytest.fixture(scope="session")
def reference():
    return build_reference_example()


def random_digraph(rng, n, density=0.5, self_loops=False):
    """Random weighted digraph, not necessarily connected."""
    w = (rng.random((n, n)) < density) * rng.uniform(0.2, 2.0, (n, n))
    if self_loops:
        w[np.arange(n), np.arange(n)] = rng.uniform(0.2, 2.0, n)
    else:
        np.fill_diagonal(w, 0.0)
    return WeightedDigraph(w)


def random_strongly_connected(rng, n, density=0.5, self_loops=False):
    """Rejection-sample a strongly connected random digraph."""
    while True:
        g = random_digraph(rng, n, density, self_loops)
        if is_strongly_connected(g):
            return g


def random_positive(rng, n, low=0.25, high=4.0):
    """Log-uniform positive vector."""
    return np.exp(rng.uniform(np.log(low), np.log(high), size=n))
