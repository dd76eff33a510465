import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pastel.graph import Graph


def graph_from_edges(n: int, edges, features=None) -> Graph:
    adj = np.zeros((n, n))
    for u, v in edges:
        adj[u, v] = adj[v, u] = 1.0
    if features is None:
        features = np.eye(n)
    return Graph(adjacency=adj, features=np.asarray(features, dtype=float))


@pytest.fixture
def path3() -> Graph:
    """v0 - v1 - v2."""
    return graph_from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(2024)


def random_connected_graph(gen: np.random.Generator, n: int, extra: float = 0.3) -> Graph:
    """Random spanning tree plus extra edges; always connected."""
    adj = np.zeros((n, n))
    order = gen.permutation(n)
    for i in range(1, n):
        j = order[gen.integers(0, i)]
        adj[order[i], j] = adj[j, order[i]] = 1.0
    mask = np.triu(gen.random((n, n)) < extra, k=1)
    adj = np.maximum(adj, (mask | mask.T).astype(float))
    np.fill_diagonal(adj, 0.0)
    return Graph(adjacency=adj, features=gen.standard_normal((n, 3)))
