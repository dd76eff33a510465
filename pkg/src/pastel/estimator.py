"""Scikit-learn style estimators wrapping the training loops.

These follow the semi-supervised convention: ``fit(graph, y)`` takes the
full node label vector with ``-1`` marking unlabeled nodes, trains
transductively and exposes ``transduction_`` with a predicted class for
every node. ``get_params`` / ``set_params`` / ``clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .errors import InvalidParams
from .graph import Graph
from .trainer import (
    BASELINE_KINDS,
    TrainConfig,
    run_baseline,
    train,
)
from .validation import check_graph, split_from_labels


class _GraphClassifierMixin:
    def predict(self) -> np.ndarray:
        """Predicted class for every node of the fitted graph."""
        if not hasattr(self, "transduction_"):
            raise InvalidParams("call fit before predict")
        return self.transduction_

    def score(self, mask: np.ndarray, y: np.ndarray) -> float:
        """Accuracy of the transduction against ``y`` under a boolean mask."""
        mask = np.asarray(mask, dtype=bool)
        y = np.asarray(y)
        return float(np.mean(self.predict()[mask] == y[mask]))


class PastelClassifier(_GraphClassifierMixin, BaseEstimator):
    """Position-aware structure learning + GCN node classifier.

    Parameters mirror :class:`pastel.trainer.TrainConfig`; see there for the
    semantics and defaults of each knob.
    """

    def __init__(
        self,
        epochs: int = 200,
        heads: int = 4,
        restart_prob: float = 0.15,
        lambda1: float = 0.8,
        lambda2: float = 0.5,
        lambda_decay: float = 0.9,
        lambda_floor: float = 0.1,
        beta_smooth: float = 0.5,
        beta_connect: float = -0.3,
        beta_sparse: float = 0.1,
        a0: float = 0.1,
        lr: float = 0.01,
        hidden_dim: int = 256,
        embed_dim: int = 256,
        dropout: float = 0.5,
        patience: int = 50,
        seed: int = 0,
    ):
        self.epochs = epochs
        self.heads = heads
        self.restart_prob = restart_prob
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.lambda_decay = lambda_decay
        self.lambda_floor = lambda_floor
        self.beta_smooth = beta_smooth
        self.beta_connect = beta_connect
        self.beta_sparse = beta_sparse
        self.a0 = a0
        self.lr = lr
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.dropout = dropout
        self.patience = patience
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            heads=self.heads,
            restart_prob=self.restart_prob,
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            lambda_decay=self.lambda_decay,
            lambda_floor=self.lambda_floor,
            beta_smooth=self.beta_smooth,
            beta_connect=self.beta_connect,
            beta_sparse=self.beta_sparse,
            a0=self.a0,
            lr=self.lr,
            hidden_dim=self.hidden_dim,
            embed_dim=self.embed_dim,
            dropout=self.dropout,
            patience=self.patience,
            seed=self.seed,
        )

    def fit(
        self,
        graph: Graph,
        y: np.ndarray,
        val_mask: np.ndarray | None = None,
        test_mask: np.ndarray | None = None,
    ):
        """Train on the labeled nodes of ``graph`` (-1 in ``y`` = unlabeled)."""
        graph = check_graph(graph)
        split = split_from_labels(graph, y, val_mask, test_mask)
        result = train(graph, split, self._config())
        self.classes_ = np.arange(split.num_classes)
        self.transduction_ = result.predictions
        self.logits_ = result.logits
        self.structure_ = result.structure
        self.learned_graph_ = result.learned_graph
        self.records_ = result.records
        self.best_epoch_ = result.best_epoch
        self.model_state_ = result.state
        return self


class GcnClassifier(_GraphClassifierMixin, BaseEstimator):
    """Backbone GCN baseline on the original (optionally perturbed) structure.

    ``kind`` is one of ``plain_gcn``, ``add_edge``, ``drop_edge``; the
    perturbing kinds resample edges every epoch at ``rate``.
    """

    def __init__(
        self,
        kind: str = "plain_gcn",
        rate: float = 0.10,
        epochs: int = 200,
        lr: float = 0.01,
        hidden_dim: int = 256,
        embed_dim: int = 256,
        dropout: float = 0.5,
        patience: int = 50,
        seed: int = 0,
    ):
        self.kind = kind
        self.rate = rate
        self.epochs = epochs
        self.lr = lr
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.dropout = dropout
        self.patience = patience
        self.seed = seed

    def fit(
        self,
        graph: Graph,
        y: np.ndarray,
        val_mask: np.ndarray | None = None,
        test_mask: np.ndarray | None = None,
    ):
        if self.kind not in BASELINE_KINDS:
            raise InvalidParams(f"unknown baseline kind {self.kind!r}")
        graph = check_graph(graph)
        split = split_from_labels(graph, y, val_mask, test_mask)
        cfg = TrainConfig(
            epochs=self.epochs,
            lr=self.lr,
            hidden_dim=self.hidden_dim,
            embed_dim=self.embed_dim,
            dropout=self.dropout,
            patience=self.patience,
            seed=self.seed,
        )
        result = run_baseline(self.kind, graph, split, cfg, rate=self.rate)
        self.classes_ = np.arange(split.num_classes)
        self.transduction_ = result.predictions
        self.logits_ = result.logits
        self.records_ = result.records
        self.best_epoch_ = result.best_epoch
        self.model_state_ = result.state
        return self
