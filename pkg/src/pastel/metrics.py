"""Topology-imbalance diagnostics: reaching and squashing coefficients.

The reaching coefficient scores how close unlabeled nodes sit to the labeled
anchors of their own class (log-scaled by the graph diameter, in [0, 1]).
The squashing coefficient averages Ollivier-Ricci edge curvature along the
shortest supervision paths; bridge-like bottleneck edges carry negative
curvature, so a larger (less negative) value means supervision flows through
fewer bottlenecks.

Curvature here is the lazy random-walk form ``1 - W1(m_u, m_v) / d(u, v)``
with half the mass staying home and half spread uniformly over neighbors.
The printed ratio form without the ``1 -`` would be nonnegative everywhere
and could never mark a bridge, so the signed form is the one implemented.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDiameter,
    EmptyAnchorSet,
    EmptyGraph,
    NoReachablePairs,
    NotAnEdge,
)
from .graph import Graph, LabelSplit, bfs_distances_multi, diameter
from .transport import DiscreteMeasure, wasserstein1

LAZINESS = 0.5


@dataclass
class CurvatureMap:
    """Curvature value for every edge of one graph."""

    edges: np.ndarray   # (E, 2) with u < v
    values: np.ndarray  # (E,)

    def __post_init__(self):
        self._index = {
            (int(u), int(v)): i for i, (u, v) in enumerate(self.edges)
        }

    def __getitem__(self, edge: tuple[int, int]) -> float:
        u, v = int(edge[0]), int(edge[1])
        key = (u, v) if u < v else (v, u)
        if key not in self._index:
            raise NotAnEdge(f"({u}, {v}) is not an edge")
        return float(self.values[self._index[key]])

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class ImbalanceReport:
    """Both diagnostics plus their per-node terms and the curvature map."""

    rc: float
    sc: float
    reach_terms: np.ndarray   # per unlabeled node
    squash_terms: np.ndarray  # per unlabeled node; NaN where skipped
    unlabeled: np.ndarray     # node ids the term arrays refer to
    curvature: CurvatureMap


def _lazy_mass(g: Graph, node: int, laziness: float) -> DiscreteMeasure:
    nbrs = g.neighbors(node)
    support = np.concatenate(([node], nbrs))
    mass = np.empty(support.size)
    mass[0] = laziness if nbrs.size else 1.0
    if nbrs.size:
        mass[1:] = (1.0 - laziness) / nbrs.size
    return DiscreteMeasure(support=support, mass=mass)


def _cancel_shared_mass(
    mu: DiscreteMeasure, nu: DiscreteMeasure
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Drop mass the two measures share at the same node.

    Valid because ground costs are a metric: shared mass can always stay in
    place in some optimal plan. Returns (support_mu, mass_mu, support_nu,
    mass_nu) of the reduced problem; either side may come back empty when
    the measures coincide.
    """
    mu_map = dict(zip(mu.support.tolist(), mu.mass.tolist()))
    nu_map = dict(zip(nu.support.tolist(), nu.mass.tolist()))
    for node in set(mu_map) & set(nu_map):
        shared = min(mu_map[node], nu_map[node])
        mu_map[node] -= shared
        nu_map[node] -= shared
    keep_mu = [(s, m) for s, m in mu_map.items() if m > 1e-15]
    keep_nu = [(s, m) for s, m in nu_map.items() if m > 1e-15]
    sup_mu = np.array([s for s, _ in keep_mu], dtype=np.int64)
    sup_nu = np.array([s for s, _ in keep_nu], dtype=np.int64)
    return (
        sup_mu,
        np.array([m for _, m in keep_mu]),
        sup_nu,
        np.array([m for _, m in keep_nu]),
    )


def ricci_curvature(
    g: Graph,
    edge: tuple[int, int],
    laziness: float = LAZINESS,
    _hop_dist: np.ndarray | None = None,
) -> float:
    """Ollivier-Ricci curvature of one edge.

    Ground costs are hop distances on the full graph, restricted to the
    union of the two mass supports; the transport itself is exact.
    ``_hop_dist`` lets a caller share one all-pairs distance table across
    many edges.
    """
    k, t = int(edge[0]), int(edge[1])
    if not g.has_edge(k, t):
        raise NotAnEdge(f"({k}, {t}) is not an edge")
    mu = _lazy_mass(g, k, laziness)
    nu = _lazy_mass(g, t, laziness)
    sup_mu, mass_mu, sup_nu, mass_nu = _cancel_shared_mass(mu, nu)
    if sup_mu.size == 0 or sup_nu.size == 0:
        return 1.0  # identical neighborhoods transport for free
    if _hop_dist is None:
        dist = bfs_distances_multi(g, sup_mu)[:, sup_nu].astype(np.float64)
    else:
        dist = _hop_dist[np.ix_(sup_mu, sup_nu)].astype(np.float64)
    total = mass_mu.sum()
    w1 = total * wasserstein1(
        DiscreteMeasure(sup_mu, mass_mu / total),
        DiscreteMeasure(sup_nu, mass_nu / mass_nu.sum()),
        dist,
    )
    return 1.0 - w1  # d_geo(k, t) = 1 for an edge


def curvature_map(
    g: Graph, laziness: float = LAZINESS, workers: int | None = None
) -> CurvatureMap:
    """Curvature of every edge, sharing one all-pairs BFS.

    Edges are independent; ``workers`` threads split them (the transport
    kernel releases the GIL). Defaults to the PASTEL_THREADS environment
    variable, else 1.
    """
    edges = g.edges()
    if edges.shape[0] == 0:
        return CurvatureMap(edges=edges.reshape(0, 2), values=np.empty(0))
    hop_dist = bfs_distances_multi(g, np.arange(g.n))
    values = np.empty(edges.shape[0])

    def fill(span: range) -> None:
        for i in span:
            u, v = edges[i]
            values[i] = ricci_curvature(
                g, (int(u), int(v)), laziness=laziness, _hop_dist=hop_dist
            )

    if workers is None:
        workers = int(os.environ.get("PASTEL_THREADS", "1"))
    workers = max(1, min(workers, edges.shape[0]))
    if workers == 1:
        fill(range(edges.shape[0]))
    else:
        from concurrent.futures import ThreadPoolExecutor

        spans = [
            range(k, edges.shape[0], workers) for k in range(workers)
        ]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, spans))
    return CurvatureMap(edges=edges, values=values)


def _check_split(split: LabelSplit) -> list[np.ndarray]:
    anchors = split.anchor_sets()
    for c, members in enumerate(anchors):
        if members.size == 0:
            raise EmptyAnchorSet(f"class {c} has no labeled anchor")
    return anchors


def _diagnosed_nodes(split: LabelSplit) -> np.ndarray:
    """Unlabeled nodes whose ground-truth class is known (label >= 0)."""
    return np.flatnonzero(~split.train_mask & (split.labels >= 0))


def reaching_coefficient(g: Graph, split: LabelSplit) -> float:
    """Mean log-scaled closeness of unlabeled nodes to same-class anchors.

    Unreachable pairs enter with path length equal to the diameter (their
    term is 0); adjacent pairs contribute 1. Result is in [0, 1].
    """
    rc, _terms, _unlabeled = _reach_terms(g, split)
    return rc


def _reach_terms(
    g: Graph, split: LabelSplit
) -> tuple[float, np.ndarray, np.ndarray]:
    _check_split(split)
    if g.num_edges() == 0:
        raise EmptyGraph("reaching coefficient needs at least one edge")
    d_g = diameter(g)
    if d_g < 2:
        raise DegenerateDiameter(f"diameter {d_g} < 2 makes log scaling degenerate")
    log_d = np.log(d_g)
    labeled = split.labeled
    dist = bfs_distances_multi(g, labeled).astype(np.float64)
    dist[dist < 0] = d_g  # unreachable pairs count as diameter-length
    anchor_label = split.labels[labeled]
    unlabeled = _diagnosed_nodes(split)
    terms = np.empty(unlabeled.size)
    for idx, v in enumerate(unlabeled):
        same = anchor_label == split.labels[v]
        lengths = dist[same, v]
        terms[idx] = np.mean(1.0 - np.log(lengths) / log_d)
    return float(terms.mean()) if terms.size else 0.0, terms, unlabeled


def squashing_coefficient(
    g: Graph, split: LabelSplit, curv: CurvatureMap
) -> float:
    """Mean curvature along shortest supervision paths.

    For each unlabeled node and each reachable same-class anchor, averages
    the curvature of the edges on one shortest path (the deterministic
    smallest-parent BFS path), then averages over anchors and over nodes.
    Nodes that reach no same-class anchor are skipped.
    """
    sc, _terms, _unlabeled = _squash_terms(g, split, curv)
    return sc


def _squash_terms(
    g: Graph, split: LabelSplit, curv: CurvatureMap
) -> tuple[float, np.ndarray, np.ndarray]:
    anchors = _check_split(split)
    labeled = split.labeled
    dist = bfs_distances_multi(g, labeled)
    anchor_label = split.labels[labeled]
    unlabeled = _diagnosed_nodes(split)

    # Deterministic shortest paths: walking from any node toward the BFS
    # root via the smallest-id neighbor one hop closer gives the
    # lexicographically smallest shortest path.
    adj = g.adj_bool
    parents = np.full((labeled.size, g.n), -1, dtype=np.int64)
    for a_idx in range(labeled.size):
        d = dist[a_idx]
        closer = adj & (d[None, :] == d[:, None] - 1)
        has = closer.any(axis=1)
        parents[a_idx, has] = np.argmax(closer[has], axis=1)

    terms = np.full(unlabeled.size, np.nan)
    for idx, v in enumerate(unlabeled):
        cls = split.labels[v]
        path_means = []
        for a_idx in np.flatnonzero(anchor_label == cls):
            if dist[a_idx, v] < 0:
                continue
            total = 0.0
            node = int(v)
            hops = 0
            while node != labeled[a_idx]:
                nxt = int(parents[a_idx, node])
                total += curv[(node, nxt)]
                node = nxt
                hops += 1
            path_means.append(total / hops)
        if path_means:
            terms[idx] = float(np.mean(path_means))
    kept = terms[~np.isnan(terms)]
    if kept.size == 0:
        raise NoReachablePairs("no unlabeled node reaches a same-class anchor")
    return float(kept.mean()), terms, unlabeled


def imbalance_report(g: Graph, split: LabelSplit) -> ImbalanceReport:
    """Compute both diagnostics and package the per-node terms."""
    if g.num_edges() == 0:
        raise NoReachablePairs("graph has no edges")
    curv = curvature_map(g)
    rc, reach_terms, unlabeled = _reach_terms(g, split)
    sc, squash_terms, _ = _squash_terms(g, split, curv)
    return ImbalanceReport(
        rc=rc,
        sc=sc,
        reach_terms=reach_terms,
        squash_terms=squash_terms,
        unlabeled=unlabeled,
        curvature=curv,
    )
