"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParams, ShapeMismatch
from .graph import Graph, LabelSplit


def check_graph(g) -> Graph:
    if not isinstance(g, Graph):
        raise InvalidParams(
            f"expected a pastel Graph, got {type(g).__name__}; build one with "
            "Graph(adjacency=..., features=...) or load_graph(...)"
        )
    return g


def check_labels(g: Graph, y) -> np.ndarray:
    """Validate a per-node label vector; -1 marks unlabeled nodes."""
    y = np.asarray(y)
    if y.shape != (g.n,):
        raise ShapeMismatch(f"y must have shape ({g.n},), got {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise InvalidParams("labels must be integers (-1 for unlabeled)")
        y = y.astype(np.int64)
    else:
        y = y.astype(np.int64)
    if y.max(initial=-1) < 0:
        raise InvalidParams("at least one node must be labeled")
    return y


def check_mask(g: Graph, mask, name: str) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (g.n,):
        raise ShapeMismatch(f"{name} must have shape ({g.n},)")
    return mask


def split_from_labels(
    g: Graph,
    y: np.ndarray,
    val_mask: np.ndarray | None = None,
    test_mask: np.ndarray | None = None,
) -> LabelSplit:
    """Build a LabelSplit from a -1-marked label vector and optional masks.

    Labeled nodes outside the provided masks form the training set; without
    masks, all unlabeled nodes become the test set.
    """
    y = check_labels(g, y)
    labeled = y >= 0
    val = (
        check_mask(g, val_mask, "val_mask")
        if val_mask is not None
        else np.zeros(g.n, dtype=bool)
    )
    test = (
        check_mask(g, test_mask, "test_mask")
        if test_mask is not None
        else ~labeled
    )
    if np.any(val & test):
        raise InvalidParams("val_mask and test_mask overlap")
    train = labeled & ~val & ~test
    if not train.any():
        raise InvalidParams("no labeled nodes left for training")
    return LabelSplit(labels=y, train_mask=train, val_mask=val, test_mask=test)
