"""Independent reference implementations used only by the tests.

Everything here deliberately avoids the library's own algorithms: transport
optima come from enumerating vertices (basic feasible solutions) of the
transportation polytope, PageRank from plain power iteration, shortest paths
from breadth-first search over explicit adjacency lists, and so on.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np


# ------------------------------------------------ transportation polytope

def _spanning_trees(a: int, b: int) -> list[list[tuple[int, int]]]:
    """All spanning trees of the complete bipartite graph K_{a,b}.

    Edges are (source, sink) pairs. Enumerates edge subsets of size
    a + b - 1 and keeps the acyclic connected ones; fine for a, b <= 4-ish.
    """
    edges = [(i, j) for i in range(a) for j in range(b)]
    need = a + b - 1
    trees = []
    for subset in itertools.combinations(edges, need):
        parent = list(range(a + b))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for i, j in subset:
            ri, rj = find(i), find(a + j)
            if ri == rj:
                ok = False
                break
            parent[ri] = rj
        if ok:
            trees.append(list(subset))
    return trees


_TREE_CACHE: dict[tuple[int, int], list] = {}


def transport_vertex_enumeration(
    supply: np.ndarray, demand: np.ndarray, cost: np.ndarray
) -> float:
    """Exact transport optimum as the min over all polytope vertices.

    Every vertex is the flow of some spanning tree of the bipartite support
    graph; tree flows are forced by conservation (leaf elimination).
    Infeasible (negative) tree flows are skipped.
    """
    a, b = len(supply), len(demand)
    key = (a, b)
    if key not in _TREE_CACHE:
        _TREE_CACHE[key] = _spanning_trees(a, b)
    best = np.inf
    for tree in _TREE_CACHE[key]:
        flows = _tree_flow(a, b, tree, supply, demand)
        if flows is None:
            continue
        total = sum(f * cost[i, j] for (i, j), f in zip(tree, flows))
        best = min(best, total)
    return best


def _tree_flow(a, b, tree, supply, demand):
    """Unique flow on a spanning tree; None if any edge goes negative."""
    balance = np.concatenate([supply, -np.asarray(demand)]).astype(float)
    adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(a + b)}
    for idx, (i, j) in enumerate(tree):
        adj[i].append((a + j, idx))
        adj[a + j].append((i, idx))
    flows = [0.0] * len(tree)
    degree = {v: len(adj[v]) for v in adj}
    removed = [False] * len(tree)
    leaves = deque(v for v in adj if degree[v] == 1)
    while leaves:
        v = leaves.popleft()
        edge = next(
            ((u, idx) for u, idx in adj[v] if not removed[idx]), None
        )
        if edge is None:
            continue
        u, idx = edge
        # Positive flow runs source -> sink; a source leaf pushes its
        # remaining balance out, a sink leaf pulls its deficit in.
        flow = balance[v] if v < a else -balance[v]
        if flow < -1e-12:
            return None
        flows[idx] = flow
        balance[u] += balance[v]
        balance[v] = 0.0
        removed[idx] = True
        degree[u] -= 1
        degree[v] -= 1
        if degree[u] == 1:
            leaves.append(u)
    return flows


def cancel_shared(support_mu, mass_mu, support_nu, mass_nu):
    """Shared-mass cancellation for measures over a common ground set."""
    mu = dict(zip(support_mu, mass_mu))
    nu = dict(zip(support_nu, mass_nu))
    for node in set(mu) & set(nu):
        shared = min(mu[node], nu[node])
        mu[node] -= shared
        nu[node] -= shared
    mu = {k: v for k, v in mu.items() if v > 1e-15}
    nu = {k: v for k, v in nu.items() if v > 1e-15}
    return mu, nu


# ------------------------------------------------------------ graph basics

def adjacency_lists(adjacency: np.ndarray) -> list[list[int]]:
    return [list(np.flatnonzero(adjacency[i] > 0)) for i in range(adjacency.shape[0])]


def bfs_reference(adjacency: np.ndarray, source: int) -> np.ndarray:
    """Plain queue BFS over adjacency lists."""
    n = adjacency.shape[0]
    dist = np.full(n, -1, dtype=int)
    dist[source] = 0
    queue = deque([source])
    nbrs = adjacency_lists(adjacency)
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def all_shortest_paths(adjacency: np.ndarray, src: int, dst: int) -> list[list[int]]:
    """Every shortest path from src to dst as vertex sequences."""
    dist = bfs_reference(adjacency, src)
    if dist[dst] < 0:
        return []
    nbrs = adjacency_lists(adjacency)
    paths: list[list[int]] = []

    def extend(path: list[int]) -> None:
        tail = path[-1]
        if tail == dst:
            paths.append(path)
            return
        for v in nbrs[tail]:
            if dist[v] == dist[tail] + 1 and dist[dst] >= dist[v]:
                extend(path + [v])

    extend([src])
    return [p for p in paths if len(p) - 1 == dist[dst]]


# ------------------------------------------------------------------- pagerank

def gpr_power_iteration(
    adjacency: np.ndarray,
    anchor_sets: list[np.ndarray],
    alpha: float,
    tol: float = 1e-13,
    max_iter: int = 100000,
) -> np.ndarray:
    """Fixed-point iteration of the class-wise restart equations."""
    n = adjacency.shape[0]
    deg = adjacency.sum(axis=0)
    walk = np.zeros_like(adjacency, dtype=float)
    nz = deg > 0
    walk[:, nz] = adjacency[:, nz] / deg[nz]
    teleport = np.zeros((n, len(anchor_sets)))
    for c, members in enumerate(anchor_sets):
        teleport[members, c] = 1.0 / len(members)
    values = teleport.copy()
    for _ in range(max_iter):
        nxt = (1.0 - alpha) * walk @ values + alpha * teleport
        if np.abs(nxt - values).max() < tol:
            return nxt
        values = nxt
    return values


# ------------------------------------------------------------------ lazy mass

def lazy_mass_reference(adjacency: np.ndarray, node: int, laziness: float = 0.5):
    nbrs = list(np.flatnonzero(adjacency[node] > 0))
    if not nbrs:
        return {node: 1.0}
    out = {node: laziness}
    for v in nbrs:
        out[v] = (1.0 - laziness) / len(nbrs)
    return out


def curvature_reference(adjacency: np.ndarray, u: int, v: int) -> float:
    """Edge curvature via shared-mass cancellation + vertex enumeration."""
    mu = lazy_mass_reference(adjacency, u)
    nu = lazy_mass_reference(adjacency, v)
    mu, nu = cancel_shared(list(mu), list(mu.values()), list(nu), list(nu.values()))
    if not mu or not nu:
        return 1.0
    sup_mu, mass_mu = list(mu), np.array(list(mu.values()))
    sup_nu, mass_nu = list(nu), np.array(list(nu.values()))
    cost = np.empty((len(sup_mu), len(sup_nu)))
    for i, s in enumerate(sup_mu):
        d = bfs_reference(adjacency, s)
        for j, t in enumerate(sup_nu):
            cost[i, j] = d[t]
    return 1.0 - transport_vertex_enumeration(mass_mu, mass_nu, cost)
