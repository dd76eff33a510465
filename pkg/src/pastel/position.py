"""Anchor-based position encoding.

Each node gets a C-dimensional profile: its mean hop distance to the
reachable labeled anchors of every class (the diameter when none are
reachable). A trainable linear map lifts profiles into feature space; the
profiles themselves are constants of the gradient graph (hop counts are not
differentiable), only the projection weights receive gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .errors import EmptyAnchorSet, ShapeMismatch
from .graph import Graph, LabelSplit, bfs_distances_multi, diameter


@dataclass
class PositionProfile:
    """Per-node distance profile to the class anchor sets."""

    p: np.ndarray        # (N, C) mean hop distances
    graph_version: str   # which structure it was computed on


@dataclass
class PositionEncoder:
    """Trainable projection of profiles into the node feature space."""

    w_phi: np.ndarray  # (d0, C)

    @classmethod
    def init(cls, d0: int, num_classes: int, seed: int, name: str = "w_phi"):
        gen = rng_mod.stream(seed, "init", name)
        bound = 1.0 / np.sqrt(num_classes)
        return cls(w_phi=gen.uniform(-bound, bound, size=(d0, num_classes)))


def position_profile(
    g: Graph, split: LabelSplit, graph_version: str = "original"
) -> PositionProfile:
    """Mean hop distance from every node to each class's reachable anchors.

    Entries where no anchor of the class is reachable are set to the graph
    diameter. One BFS per anchor node, batched.
    """
    anchors = split.anchor_sets()
    for c, members in enumerate(anchors):
        if members.size == 0:
            raise EmptyAnchorSet(f"class {c} has no labeled anchor")
    labeled = split.labeled
    dist = bfs_distances_multi(g, labeled).astype(np.float64)
    d_g = float(diameter(g))
    anchor_label = split.labels[labeled]
    n, c_num = g.n, len(anchors)
    p = np.full((n, c_num), d_g)
    for c in range(c_num):
        block = dist[anchor_label == c]           # (k_c, N)
        reach = block >= 0
        counts = reach.sum(axis=0)
        sums = np.where(reach, block, 0.0).sum(axis=0)
        has = counts > 0
        p[has, c] = sums[has] / counts[has]
    return PositionProfile(p=p, graph_version=graph_version)


def encode(profile: PositionProfile, enc: PositionEncoder) -> np.ndarray:
    """Linear position encodings, one row per node (no bias)."""
    p = profile.p
    if p.shape[1] != enc.w_phi.shape[1]:
        raise ShapeMismatch(
            f"profile has {p.shape[1]} classes, encoder expects "
            f"{enc.w_phi.shape[1]}"
        )
    return p @ enc.w_phi.T


def encode_backward(profile: PositionProfile, d_out: np.ndarray) -> np.ndarray:
    """Gradient of a loss w.r.t. the encoder weights given d(loss)/d(encodings)."""
    return d_out.T @ profile.p
