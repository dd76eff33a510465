"""Group PageRank label influence, KL conflict and annealed edge weights.

Group PageRank runs one personalized PageRank per class with teleport mass
spread uniformly over that class's labeled anchors; row ``i`` of the result
scores how much supervision each class pushes onto node ``i``. The conflict
between two nodes is the KL divergence of their (normalized) influence rows,
and a cosine annealing of the conflict *rank* turns it into an edge weight:
the more conflicting a pair, the smaller the weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyAnchorSet, InvalidParams, ZeroRow
from .graph import Graph, LabelSplit
from .numerics import solve_linear

KL_SMOOTHING = 1e-10
ZERO_ROW_TOL = 1e-12


@dataclass
class GprMatrix:
    """Per-class label influence, one column per class."""

    values: np.ndarray  # (N, C), nonnegative
    alpha: float        # restart probability in (0, 1)


@dataclass
class ConflictWeights:
    """Pairwise conflict and the annealed weights derived from it."""

    kl: np.ndarray  # (N, N), zero diagonal; +inf marks unreached nodes
    w: np.ndarray   # (N, N) in (0, 1]


def _column_normalized(adjacency: np.ndarray) -> np.ndarray:
    """Column-stochastic walk matrix; zero-degree columns stay zero."""
    deg = adjacency.sum(axis=0)
    out = np.zeros_like(adjacency)
    nz = deg > 0
    out[:, nz] = adjacency[:, nz] / deg[nz]
    return out


def group_pagerank(g: Graph, split: LabelSplit, alpha: float) -> GprMatrix:
    """Solve the restart equations for all classes with one linear solve.

    Influence spreads along the column-normalized adjacency; the teleport
    matrix puts ``1/|anchors_c|`` on each class-c anchor. On graphs without
    zero-degree nodes every class column of the result sums to 1.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParams(f"alpha must be in (0, 1), got {alpha}")
    anchors = split.anchor_sets()
    for c, members in enumerate(anchors):
        if members.size == 0:
            raise EmptyAnchorSet(f"class {c} has no labeled anchor")
    n = g.n
    teleport = np.zeros((n, len(anchors)))
    for c, members in enumerate(anchors):
        teleport[members, c] = 1.0 / members.size
    walk = _column_normalized(g.adjacency)
    system = np.eye(n) - (1.0 - alpha) * walk
    values = alpha * solve_linear(system, teleport)
    # The system is strictly column diagonally dominant for alpha > 0, so
    # the solve cannot fail; tiny negative round-off is clipped.
    np.clip(values, 0.0, None, out=values)
    return GprMatrix(values=values, alpha=alpha)


def _smoothed_rows(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """L1-normalize rows with additive smoothing; flag numerically-zero rows."""
    sums = values.sum(axis=1)
    zero = sums < ZERO_ROW_TOL
    smoothed = values + KL_SMOOTHING
    smoothed /= smoothed.sum(axis=1, keepdims=True)
    return smoothed, zero


def conflict_kl(gpr: GprMatrix, i: int, j: int) -> float:
    """KL divergence of node i's influence row from node j's.

    Rows are L1-normalized with additive smoothing first (they are not
    distributions on their own). Raises :class:`ZeroRow` when either row
    carries no influence at all; batch callers substitute maximal conflict
    for such nodes instead.
    """
    rows = gpr.values[[i, j], :]
    smoothed, zero = _smoothed_rows(rows)
    if zero.any():
        raise ZeroRow(f"node {i if zero[0] else j} has an all-zero influence row")
    p, q = smoothed
    return float(np.sum(p * (np.log(p) - np.log(q))))


def conflict_matrix(gpr: GprMatrix) -> np.ndarray:
    """All-pairs KL conflict with zero diagonal.

    Nodes whose influence row is numerically zero get ``+inf`` against all
    partners (maximal conflict: they should not be wired up aggressively
    until some label influence actually reaches them).
    """
    smoothed, zero = _smoothed_rows(gpr.values)
    logs = np.log(smoothed)
    negentropy = np.sum(smoothed * logs, axis=1)
    kl = negentropy[:, None] - smoothed @ logs.T
    np.clip(kl, 0.0, None, out=kl)  # KL >= 0; trims round-off
    kl[zero, :] = np.inf
    kl[:, zero] = np.inf
    np.fill_diagonal(kl, 0.0)
    return kl


def anneal_weights(kl: np.ndarray) -> np.ndarray:
    """Cosine-annealed weights from descending conflict ranks.

    Rank 1 is the most conflicting ordered pair (weight near 0); the least
    conflicting pair gets weight 1; ties share their average rank.
    """
    n_sq = kl.size
    ranks = rankdata(-kl.ravel(), method="average")
    x = ranks / n_sq
    return (0.5 * (1.0 - np.cos(np.pi * x))).reshape(kl.shape)


def conflict_weights(gpr: GprMatrix) -> ConflictWeights:
    """Bundle the conflict matrix with its annealed weights."""
    kl = conflict_matrix(gpr)
    return ConflictWeights(kl=kl, w=anneal_weights(kl))
