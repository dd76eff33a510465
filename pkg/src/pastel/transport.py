"""Exact discrete optimal transport (1-Wasserstein) on small supports.

The solver is a successive-shortest-path min-cost flow on the complete
bipartite graph between the two supports, with node potentials keeping all
reduced costs nonnegative so each augmentation is a plain Dijkstra. The
answer is the exact optimum of the transportation LP (a vertex solution),
which matters because downstream curvature values must carry exact signs.

Supports here are tiny (a node's neighborhood plus itself), so the dense
O(V^2) Dijkstra is the right shape; the kernel is JIT-compiled because
curvature maps evaluate it once per edge of a graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InfeasibleTransport, InvalidParams, NumericalError

MASS_TOL = 1e-9


@dataclass(frozen=True)
class DiscreteMeasure:
    """A finitely supported probability measure over graph nodes."""

    support: np.ndarray  # int node ids, distinct
    mass: np.ndarray     # nonnegative, sums to 1 within 1e-9

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        mass = np.asarray(self.mass, dtype=np.float64)
        if support.ndim != 1 or mass.shape != support.shape:
            raise InvalidParams("support and mass must be 1-D and same length")
        if support.size == 0:
            raise InvalidParams("support must be nonempty")
        if np.unique(support).size != support.size:
            raise InvalidParams("support ids must be distinct")
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise InvalidParams("masses must be finite and nonnegative")
        if abs(mass.sum() - 1.0) > MASS_TOL:
            raise InvalidParams(f"masses must sum to 1 within {MASS_TOL:g}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "mass", mass)

    def __len__(self) -> int:
        return int(self.support.size)


@njit(cache=True, nogil=True)
def _transport_cost(supply, demand, cost):  # pragma: no cover - jitted
    a = supply.shape[0]
    b = demand.shape[0]
    n = a + b
    inf = 1e30
    flow = np.zeros((a, b))
    pot = np.zeros(n)
    rem_s = supply.copy()
    rem_d = demand.copy()
    dist = np.empty(n)
    done = np.empty(n, np.bool_)
    parent = np.empty(n, np.int64)
    remaining = rem_s.sum()
    eps = 1e-15
    max_rounds = 4 * a * b + 16

    for _ in range(max_rounds):
        if remaining <= MASS_TOL:
            break
        # Multi-source Dijkstra over the residual graph using reduced costs.
        for v in range(n):
            dist[v] = inf
            done[v] = False
            parent[v] = -1
        for i in range(a):
            if rem_s[i] > eps:
                dist[i] = 0.0
        for _round in range(n):
            u = -1
            best = inf
            for v in range(n):
                if not done[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u < 0:
                break
            done[u] = True
            if u < a:
                for j in range(b):
                    if done[a + j]:
                        continue
                    rc = cost[u, j] + pot[u] - pot[a + j]
                    nd = dist[u] + rc
                    if nd < dist[a + j]:
                        dist[a + j] = nd
                        parent[a + j] = u
            else:
                j = u - a
                for i in range(a):
                    if done[i] or flow[i, j] <= eps:
                        continue
                    rc = -cost[i, j] + pot[u] - pot[i]
                    nd = dist[u] + rc
                    if nd < dist[i]:
                        dist[i] = nd
                        parent[i] = u

        # Cheapest sink that still needs mass.
        t = -1
        bestd = inf
        for j in range(b):
            if rem_d[j] > eps and dist[a + j] < bestd:
                bestd = dist[a + j]
                t = a + j
        if t < 0:
            break
        for v in range(n):
            pot[v] += dist[v] if dist[v] < inf else bestd

        # Bottleneck along the shortest augmenting path.
        bottleneck = rem_d[t - a]
        v = t
        while parent[v] >= 0:
            u = parent[v]
            if v >= a:  # forward arc u -> v
                pass
            else:       # backward arc: flow[v, u - a] is being reduced
                if flow[v, u - a] < bottleneck:
                    bottleneck = flow[v, u - a]
            v = u
        if rem_s[v] < bottleneck:
            bottleneck = rem_s[v]

        v = t
        while parent[v] >= 0:
            u = parent[v]
            if v >= a:
                flow[u, v - a] += bottleneck
            else:
                flow[v, u - a] -= bottleneck
            v = u
        rem_s[v] -= bottleneck
        rem_d[t - a] -= bottleneck
        remaining -= bottleneck

    total = 0.0
    for i in range(a):
        for j in range(b):
            total += flow[i, j] * cost[i, j]
    return total, remaining


def transport_cost(
    supply: np.ndarray, demand: np.ndarray, cost: np.ndarray
) -> float:
    """Exact optimal value of the transportation problem.

    Minimizes ``sum(plan * cost)`` over nonnegative plans whose row sums are
    ``supply`` and column sums are ``demand``.
    """
    supply = np.ascontiguousarray(supply, dtype=np.float64)
    demand = np.ascontiguousarray(demand, dtype=np.float64)
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    if cost.shape != (supply.size, demand.size):
        raise InvalidParams(
            f"cost shape {cost.shape} does not match supports "
            f"({supply.size}, {demand.size})"
        )
    if np.any(cost < 0) or not np.all(np.isfinite(cost)):
        raise InvalidParams("costs must be finite and nonnegative")
    ts, td = supply.sum(), demand.sum()
    if abs(ts - td) > MASS_TOL:
        raise InfeasibleTransport(
            f"mass totals differ by {abs(ts - td):.3g} (> {MASS_TOL:g})"
        )
    if ts <= MASS_TOL:
        return 0.0
    # Remove exact rounding slack so the flow saturates both sides.
    demand = demand * (ts / td)
    total, leftover = _transport_cost(supply, demand, cost)
    if leftover > 10 * MASS_TOL:
        raise NumericalError(
            f"transport solver left {leftover:.3g} mass unrouted"
        )
    return float(total)


def wasserstein1(
    mu: DiscreteMeasure, nu: DiscreteMeasure, dist: np.ndarray
) -> float:
    """Exact 1-Wasserstein distance between two discrete measures.

    ``dist[i, j]`` is the ground cost from ``mu.support[i]`` to
    ``nu.support[j]`` (pairwise geodesic distances, finite and nonnegative).
    """
    return transport_cost(mu.mass, nu.mass, np.asarray(dist, dtype=np.float64))
