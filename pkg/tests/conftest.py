import numpy as np
import pytest

from epiwalk.graph import from_edges


def complete_graph(n):
    return from_edges([(i, j) for i in range(n) for j in range(i + 1, n)], node_count=n)


def path_graph(n):
    return from_edges([(i, i + 1) for i in range(n - 1)], node_count=n)


def cycle_graph(n):
    return from_edges([(i, (i + 1) % n) for i in range(n)], node_count=n)


def star_graph(leaves):
    return from_edges([(0, i) for i in range(1, leaves + 1)], node_count=leaves + 1)


def two_cliques_bridged(k, bridges=1):
    """Two K_k cliques joined by `bridges` disjoint edges. Nodes 0..k-1 are
    the first clique, k..2k-1 the second."""
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges += [(k + i, k + j) for i in range(k) for j in range(i + 1, k)]
    edges += [(i, k + i) for i in range(bridges)]
    return from_edges(edges, node_count=2 * k)


@pytest.fixture
def rng():
    return np.random.default_rng(0xFEED)


@pytest.fixture(scope="session")
def paillier_key():
    import random

    from epiwalk.mpc import keygen_joint

    return keygen_joint(3, 1024, random.Random(0xC0FFEE))
