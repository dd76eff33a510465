"""Graph data model, SBM generation, shortest paths, splits and file IO.

A graph is an undirected weighted structure stored densely: a symmetric
nonnegative ``(n, n)`` adjacency (0 = no edge, zero diagonal) plus an
``(n, d0)`` feature matrix. Everything downstream treats nonzero entries as
edges and measures distances in unweighted hops: path lengths count message
passing layers, not edge weights.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng as rng_mod
from .errors import (
    EmptyGraph,
    InconsistentNodeCount,
    InsufficientClassMembers,
    InvalidParams,
    ParseError,
    ShapeMismatch,
)

SYMMETRY_TOL = 1e-12
UNREACHABLE = -1  # sentinel in hop-distance arrays


@dataclass
class Graph:
    """Immutable-by-convention graph universe shared by all modules."""

    adjacency: np.ndarray
    features: np.ndarray
    diameter_cache: int | None = None
    _adj_bool: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.float64)
        feats = np.asarray(self.features, dtype=np.float64)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ShapeMismatch(f"adjacency must be square, got {adj.shape}")
        if feats.ndim != 2 or feats.shape[0] != adj.shape[0]:
            raise ShapeMismatch(
                f"features must have one row per node, got {feats.shape} for "
                f"{adj.shape[0]} nodes"
            )
        if not np.all(np.isfinite(adj)) or not np.all(np.isfinite(feats)):
            raise InvalidParams("adjacency and features must be finite")
        if np.any(adj < 0):
            raise InvalidParams("edge weights must be nonnegative")
        if np.abs(adj - adj.T).max(initial=0.0) > SYMMETRY_TOL:
            raise InvalidParams("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise InvalidParams("adjacency diagonal must be zero")
        self.adjacency = adj
        self.features = feats

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def adj_bool(self) -> np.ndarray:
        """Boolean edge indicator, cached."""
        if self._adj_bool is None:
            self._adj_bool = self.adjacency > 0
        return self._adj_bool

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adj_bool[i])

    def edges(self) -> np.ndarray:
        """All edges as an (E, 2) array of (u, v) with u < v."""
        u, v = np.nonzero(np.triu(self.adj_bool, k=1))
        return np.stack([u, v], axis=1)

    def num_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adj_bool, k=1)))

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj_bool[u, v])


@dataclass
class LabelSplit:
    """Ground-truth labels plus the labeled/val/test partition of the nodes.

    ``labels`` holds a class id for every node (the diagnostics need the
    true class of unlabeled nodes); training code only ever reads labels
    under the masks. Anchor set ``c`` is the labeled nodes of class ``c``.
    """

    labels: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        n = labels.shape[0]
        for name in ("train_mask", "val_mask", "test_mask"):
            m = np.asarray(getattr(self, name), dtype=bool)
            if m.shape != (n,):
                raise ShapeMismatch(f"{name} must have shape ({n},)")
            setattr(self, name, m)
        if np.any(self.train_mask & self.val_mask) or np.any(
            self.train_mask & self.test_mask
        ):
            raise InvalidParams("train mask overlaps val/test mask")
        if np.any(labels[self.train_mask] < 0):
            raise InvalidParams("labeled nodes must have a class id")
        self.labels = labels

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def labeled(self) -> np.ndarray:
        return np.flatnonzero(self.train_mask)

    @property
    def unlabeled(self) -> np.ndarray:
        return np.flatnonzero(~self.train_mask)

    def anchor_sets(self) -> list[np.ndarray]:
        """Labeled node ids per class; every set must be nonempty."""
        sets = [
            np.flatnonzero(self.train_mask & (self.labels == c))
            for c in range(self.num_classes)
        ]
        return sets


@dataclass(frozen=True)
class SbmParams:
    """Stochastic block model parameters.

    ``p`` is the within-community edge probability, ``q`` the between-
    community one. Communities are sized ``n // c`` with the remainder
    spread over the first ``n % c`` communities.
    """

    n: int
    c: int
    p: float
    q: float
    feature_dim: int = 16
    feature_noise: float = 1.0

    def __post_init__(self):
        if self.n < self.c or self.c < 1:
            raise InvalidParams(f"need n >= c >= 1, got n={self.n} c={self.c}")
        if not (0.0 <= self.q <= self.p <= 1.0):
            raise InvalidParams(f"need 0 <= q <= p <= 1, got p={self.p} q={self.q}")
        if self.feature_dim < 1 or self.feature_noise < 0:
            raise InvalidParams("feature_dim >= 1 and feature_noise >= 0 required")

    def community_of(self) -> np.ndarray:
        """Deterministic community assignment by node index."""
        sizes = np.full(self.c, self.n // self.c, dtype=np.int64)
        sizes[: self.n % self.c] += 1
        return np.repeat(np.arange(self.c), sizes)


def generate_sbm(params: SbmParams, seed: int) -> tuple[Graph, np.ndarray]:
    """Sample an SBM graph plus its ground-truth community labels.

    Every intra-community pair is connected independently with probability
    ``p``, inter-community pairs with ``q``. Features are a one-hot
    community indicator (first ``c`` columns, truncated if ``feature_dim``
    is smaller) plus Gaussian noise of scale ``feature_noise``.
    """
    gen = rng_mod.stream(seed, "sbm")
    comm = params.community_of()
    n = params.n
    same = comm[:, None] == comm[None, :]
    prob = np.where(same, params.p, params.q)
    draw = gen.random((n, n))
    upper = np.triu(draw < prob, k=1)
    adj = (upper | upper.T).astype(np.float64)

    onehot = np.zeros((n, params.feature_dim))
    onehot[np.arange(n), comm % params.feature_dim] = 1.0
    feats = onehot + params.feature_noise * gen.standard_normal((n, params.feature_dim))
    return Graph(adjacency=adj, features=feats), comm


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Exact hop distances from ``source``; unreachable nodes get -1."""
    if not 0 <= source < g.n:
        raise InvalidParams(f"source {source} out of range for n={g.n}")
    return bfs_distances_multi(g, np.array([source]))[0]


def bfs_distances_multi(g: Graph, sources: np.ndarray) -> np.ndarray:
    """Hop distances from each source, as a (len(sources), n) int array.

    Level-synchronous frontier expansion; one dense matmul per BFS level,
    which is the right trade at dense desk scale (all sources advance in
    lockstep).
    """
    sources = np.asarray(sources, dtype=np.int64)
    k, n = sources.size, g.n
    adj_f = g.adj_bool.astype(np.float32)
    dist = np.full((k, n), UNREACHABLE, dtype=np.int32)
    frontier = np.zeros((k, n), dtype=bool)
    frontier[np.arange(k), sources] = True
    reached = frontier.copy()
    dist[np.arange(k), sources] = 0
    level = 0
    while frontier.any():
        level += 1
        nxt = (frontier.astype(np.float32) @ adj_f) > 0
        nxt &= ~reached
        dist[nxt] = level
        reached |= nxt
        frontier = nxt
    return dist


def diameter(g: Graph) -> int:
    """Largest finite hop distance over the graph (per-component maximum).

    Cached on the graph. Disconnected graphs are fine: cross-component
    pairs are simply not finite and do not contribute.
    """
    if g.diameter_cache is not None:
        return g.diameter_cache
    if g.num_edges() == 0:
        raise EmptyGraph("diameter needs at least one edge")
    dist = bfs_distances_multi(g, np.arange(g.n))
    g.diameter_cache = int(dist.max())
    return g.diameter_cache


def normalized_adjacency(g: Graph) -> np.ndarray:
    """Symmetric degree normalization with self-loops added first.

    Returns ``D^-1/2 (A + I) D^-1/2``; isolated nodes come out as identity
    rows. The result is exactly symmetric.
    """
    a_hat = g.adjacency + np.eye(g.n)
    d_inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    out = a_hat * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]
    return (out + out.T) / 2.0


def sample_split(
    g: Graph,
    labels: np.ndarray,
    per_class: int,
    seed: int,
    val_fraction: float = 0.1,
) -> LabelSplit:
    """Sample ``per_class`` labeled nodes per class, uniformly w/o replacement.

    Remaining nodes are unlabeled and split ``val_fraction : rest`` into
    validation and test; everything is deterministic under ``seed``.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (g.n,):
        raise ShapeMismatch(f"labels must have shape ({g.n},)")
    gen = rng_mod.stream(seed, "split")
    train = np.zeros(g.n, dtype=bool)
    for c in range(int(labels.max()) + 1):
        members = np.flatnonzero(labels == c)
        if members.size < per_class:
            raise InsufficientClassMembers(
                f"class {c} has {members.size} members, needs {per_class}"
            )
        chosen = gen.choice(members, size=per_class, replace=False)
        train[chosen] = True
    rest = np.flatnonzero(~train)
    rest = rest[gen.permutation(rest.size)]
    n_val = int(round(val_fraction * rest.size))
    val = np.zeros(g.n, dtype=bool)
    test = np.zeros(g.n, dtype=bool)
    val[rest[:n_val]] = True
    test[rest[n_val:]] = True
    return LabelSplit(labels=labels, train_mask=train, val_mask=val, test_mask=test)


# ------------------------------------------------------------------ file IO
#
# Edge file: whitespace-separated "src dst [weight]" lines, '#' comments.
# Feature file: CSV, row i = node i. Label file: CSV "node_id,class_id".


def load_graph(
    edge_file: str | Path,
    feature_file: str | Path | None = None,
    label_file: str | Path | None = None,
) -> tuple[Graph, np.ndarray | None]:
    """Load a graph (and labels, if given) from disk.

    Node ids are densified to ``0..n-1`` in sorted order, duplicate edges
    collapse (last weight wins) and the adjacency is symmetrized.
    """
    edge_file = Path(edge_file)
    raw_edges: dict[tuple[int, int], float] = {}
    ids: set[int] = set()
    with edge_file.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) not in (2, 3):
                raise ParseError(str(edge_file), lineno, "expected 'src dst [weight]'")
            try:
                u, v = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError as exc:
                raise ParseError(str(edge_file), lineno, str(exc)) from None
            if u < 0 or v < 0:
                raise ParseError(str(edge_file), lineno, "node ids must be >= 0")
            if not np.isfinite(w) or w < 0:
                raise ParseError(str(edge_file), lineno, "weight must be >= 0")
            ids.add(u)
            ids.add(v)
            if u != v:
                raw_edges[(min(u, v), max(u, v))] = w

    labels_raw: dict[int, int] | None = None
    if label_file is not None:
        labels_raw = {}
        with Path(label_file).open() as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise ParseError(str(label_file), lineno, "expected 'node_id,class_id'")
                try:
                    node, cls = int(row[0]), int(row[1])
                except ValueError as exc:
                    raise ParseError(str(label_file), lineno, str(exc)) from None
                labels_raw[node] = cls
                ids.add(node)

    feats: np.ndarray | None = None
    if feature_file is not None:
        rows: list[list[float]] = []
        with Path(feature_file).open() as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                try:
                    rows.append([float(x) for x in row])
                except ValueError as exc:
                    raise ParseError(str(feature_file), lineno, str(exc)) from None
        if rows:
            width = len(rows[0])
            for i, r in enumerate(rows):
                if len(r) != width:
                    raise ParseError(str(feature_file), i + 1, "ragged feature row")
            feats = np.asarray(rows, dtype=np.float64)

    id_list = sorted(ids)
    index = {node: i for i, node in enumerate(id_list)}
    n = len(id_list)
    if feats is not None:
        if n == 0:
            n = feats.shape[0]
            index = {i: i for i in range(n)}
        elif feats.shape[0] != n:
            raise InconsistentNodeCount(
                f"feature file has {feats.shape[0]} rows, graph has {n} nodes"
            )
    if n == 0:
        raise InconsistentNodeCount("no nodes found in input files")

    adj = np.zeros((n, n))
    for (u, v), w in raw_edges.items():
        adj[index[u], index[v]] = w
        adj[index[v], index[u]] = w
    if feats is None:
        feats = np.zeros((n, 1))

    labels: np.ndarray | None = None
    if labels_raw is not None:
        labels = np.full(n, -1, dtype=np.int64)
        for node, cls in labels_raw.items():
            labels[index[node]] = cls
    return Graph(adjacency=adj, features=feats), labels


def save_graph(
    g: Graph,
    edge_file: str | Path,
    feature_file: str | Path | None = None,
    label_file: str | Path | None = None,
    labels: np.ndarray | None = None,
) -> None:
    """Write a graph in the same formats :func:`load_graph` reads.

    Floats are written with ``repr`` so a save/load round trip is
    bit-exact.
    """
    with Path(edge_file).open("w") as fh:
        for u, v in g.edges():
            fh.write(f"{u} {v} {float(g.adjacency[u, v])!r}\n")
    if feature_file is not None:
        with Path(feature_file).open("w") as fh:
            for row in g.features:
                fh.write(",".join(repr(x) for x in row.tolist()) + "\n")
    if label_file is not None:
        if labels is None:
            raise InvalidParams("labels required to write a label file")
        with Path(label_file).open("w") as fh:
            for node, cls in enumerate(np.asarray(labels, dtype=np.int64).tolist()):
                if cls >= 0:
                    fh.write(f"{node},{cls}\n")
