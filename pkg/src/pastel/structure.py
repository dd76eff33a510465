"""Differentiable structure learning: metric heads, fusion, regularizers.

The pipeline learns two dense candidate adjacencies with multi-head cosine
metric learners (one over current representations, one over raw features,
both concatenated with position encodings), scales the position view by the
conflict weights, row-normalizes both views and fuses them with the
normalized original adjacency. The fused matrix is symmetrized and entries
below a threshold are masked to exactly zero; the mask support is a constant
of the epoch, so gradients flow through surviving entries only.

Every forward here returns a tape holding exactly the intermediates its
hand-derived backward needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .errors import ShapeMismatch

ZERO_NORM_TOL = 1e-12


# -------------------------------------------------- multi-head cosine metric

@dataclass
class MetricLearner:
    """Multi-head cosine similarity with one square weight matrix per head."""

    heads: list[np.ndarray]  # m matrices of shape (d_in, d_in)

    @classmethod
    def init(cls, m: int, d_in: int, seed: int, name: str):
        if m < 1:
            raise ShapeMismatch("need at least one head")
        bound = 1.0 / np.sqrt(d_in)
        heads = [
            rng_mod.stream(seed, "init", f"{name}.{h}").uniform(
                -bound, bound, size=(d_in, d_in)
            )
            for h in range(m)
        ]
        return cls(heads=heads)

    @property
    def m(self) -> int:
        return len(self.heads)

    @property
    def input_dim(self) -> int:
        return self.heads[0].shape[1]


@dataclass
class MetricTape:
    inputs: np.ndarray
    unit_rows: list[np.ndarray]   # per head, transformed rows scaled to norm 1
    inv_norms: list[np.ndarray]   # per head, 1/norm with zero rows zeroed


def pairwise_metric(
    inputs: np.ndarray, learner: MetricLearner
) -> tuple[np.ndarray, MetricTape]:
    """Head-averaged cosine similarities between all row pairs.

    A transformed row whose norm underflows ``1e-12`` is treated as a zero
    vector: similarity 0 against every partner (guarded cosine).
    """
    if inputs.ndim != 2 or inputs.shape[0] < 2:
        raise ShapeMismatch("inputs must be (N >= 2, d_in)")
    if inputs.shape[1] != learner.input_dim:
        raise ShapeMismatch(
            f"inputs have width {inputs.shape[1]}, heads expect "
            f"{learner.input_dim}"
        )
    n = inputs.shape[0]
    sim = np.zeros((n, n))
    unit_rows, inv_norms = [], []
    for w in learner.heads:
        v = inputs @ w.T
        norms = np.linalg.norm(v, axis=1)
        inv = np.where(norms > ZERO_NORM_TOL, 1.0 / np.maximum(norms, 1e-300), 0.0)
        unit = v * inv[:, None]
        sim += unit @ unit.T
        unit_rows.append(unit)
        inv_norms.append(inv)
    sim /= learner.m
    return sim, MetricTape(inputs=inputs, unit_rows=unit_rows, inv_norms=inv_norms)


def pairwise_metric_backward(
    tape: MetricTape, learner: MetricLearner, d_sim: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    """Backward of :func:`pairwise_metric`: gradients for heads and inputs."""
    d_heads = []
    d_inputs = np.zeros_like(tape.inputs)
    for w, unit, inv in zip(learner.heads, tape.unit_rows, tape.inv_norms):
        d_unit = (d_sim + d_sim.T) @ unit / learner.m
        # through row normalization: dv = (du - (du . u) u) / norm
        proj = np.sum(d_unit * unit, axis=1, keepdims=True)
        d_v = (d_unit - proj * unit) * inv[:, None]
        d_heads.append(d_v.T @ tape.inputs)
        d_inputs += d_v @ w
    return d_heads, d_inputs


# --------------------------------------------------------- conflict weighting

def apply_conflict(a_p: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Scale learned edge possibilities by the conflict weights."""
    if a_p.shape != w.shape:
        raise ShapeMismatch(f"shape mismatch {a_p.shape} vs {w.shape}")
    return a_p * w


# ------------------------------------------------- row normalization (f(.))

@dataclass
class RowNormTape:
    positive: np.ndarray   # clamp mask
    normalized: np.ndarray
    inv_sums: np.ndarray   # 1/rowsum, zero rows zeroed


def row_normalize(matrix: np.ndarray) -> tuple[np.ndarray, RowNormTape]:
    """Clamp negatives to zero, then L1-normalize each row.

    Cosine similarities can be negative but an adjacency cannot; rows that
    clamp to all-zero stay zero.
    """
    positive = matrix > 0
    clamped = np.where(positive, matrix, 0.0)
    sums = clamped.sum(axis=1)
    inv = np.where(sums > ZERO_NORM_TOL, 1.0 / np.maximum(sums, 1e-300), 0.0)
    normalized = clamped * inv[:, None]
    return normalized, RowNormTape(positive=positive, normalized=normalized, inv_sums=inv)


def row_normalize_backward(tape: RowNormTape, d_out: np.ndarray) -> np.ndarray:
    """Backward of :func:`row_normalize`."""
    weighted = np.sum(d_out * tape.normalized, axis=1, keepdims=True)
    d_clamped = (d_out - weighted) * tape.inv_sums[:, None]
    return np.where(tape.positive, d_clamped, 0.0)


# --------------------------------------------------------------------- fusion

@dataclass
class FuseTape:
    lambda1: float
    lambda2: float
    support: np.ndarray  # surviving entries after masking
    norm_tape_n: RowNormTape
    norm_tape_p: RowNormTape


@dataclass
class LearnedStructure:
    """All intermediate adjacencies of one structure-learning step."""

    a_n: np.ndarray           # feature-view similarities
    a_p: np.ndarray           # position-view similarities, pre-weighting
    a_p_weighted: np.ndarray  # after conflict weights
    a_star: np.ndarray        # fused, symmetrized, masked
    lambda1: float
    lambda2: float
    threshold: float


def fuse(
    a_norm: np.ndarray,
    a_n: np.ndarray,
    a_p_weighted: np.ndarray,
    lambda1: float,
    lambda2: float,
    a0: float,
    support: np.ndarray | None = None,
) -> tuple[np.ndarray, FuseTape]:
    """Fuse original, feature-view and position-view structures.

    Convex mix of the normalized original adjacency with the row-normalized
    learned views, symmetrized by arithmetic mean; entries below ``a0`` are
    set to exactly zero (no row renormalization afterwards). Pass
    ``support`` to pin the mask to a precomputed one.
    """
    if not (0.0 <= lambda1 <= 1.0 and 0.0 <= lambda2 <= 1.0):
        raise ShapeMismatch("fusion coefficients must lie in [0, 1]")
    f_n, tape_n = row_normalize(a_n)
    f_p, tape_p = row_normalize(a_p_weighted)
    mixed = lambda1 * a_norm + (1.0 - lambda1) * (
        lambda2 * f_n + (1.0 - lambda2) * f_p
    )
    sym = (mixed + mixed.T) / 2.0
    if support is None:
        support = sym >= a0
    a_star = np.where(support, sym, 0.0)
    tape = FuseTape(
        lambda1=lambda1,
        lambda2=lambda2,
        support=support,
        norm_tape_n=tape_n,
        norm_tape_p=tape_p,
    )
    return a_star, tape


def fuse_backward(
    tape: FuseTape, d_a_star: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Backward of :func:`fuse` into the two learned views.

    The original adjacency is a constant, the mask support is the epoch's
    constant piecewise-identity, so masked-off entries receive nothing.
    """
    d_sym = np.where(tape.support, d_a_star, 0.0)
    d_mixed = (d_sym + d_sym.T) / 2.0
    d_f_n = (1.0 - tape.lambda1) * tape.lambda2 * d_mixed
    d_f_p = (1.0 - tape.lambda1) * (1.0 - tape.lambda2) * d_mixed
    d_a_n = row_normalize_backward(tape.norm_tape_n, d_f_n)
    d_a_pw = row_normalize_backward(tape.norm_tape_p, d_f_p)
    return d_a_n, d_a_pw


# --------------------------------------------------------------- regularizers

CONNECTIVITY_EPS = 1e-8


@dataclass
class RegularizerTerms:
    """Smoothness, connectivity and sparsity penalties of a structure."""

    smooth: float
    con: float
    spar: float


def regularizers(a_star: np.ndarray, x: np.ndarray) -> RegularizerTerms:
    """Graph-quality terms of the learned structure.

    smooth: Dirichlet energy of the features over the structure (scaled by
    1/N^2); con: log-barrier on row sums (scaled by 1/N) that rewards
    connectivity; spar: squared Frobenius norm (scaled by 1/N^2).
    """
    n = a_star.shape[0]
    if x.shape[0] != n:
        raise ShapeMismatch("features and structure disagree on node count")
    row_sums = a_star.sum(axis=1)
    sq_norms = np.sum(x * x, axis=1)
    smooth = (np.dot(row_sums, sq_norms) - np.sum((a_star @ x) * x)) / n**2
    con = float(np.sum(np.log(row_sums + CONNECTIVITY_EPS))) / n
    spar = float(np.sum(a_star * a_star)) / n**2
    return RegularizerTerms(smooth=float(smooth), con=con, spar=spar)


def regularizer_grads(
    a_star: np.ndarray, x: np.ndarray, beta1: float, beta2: float, beta3: float
) -> np.ndarray:
    """d(beta1*smooth + beta2*con + beta3*spar) / d(a_star)."""
    n = a_star.shape[0]
    grad = np.zeros_like(a_star)
    if beta1 != 0.0:
        sq_norms = np.sum(x * x, axis=1)
        grad += beta1 * (sq_norms[:, None] - x @ x.T) / n**2
    if beta2 != 0.0:
        row_sums = a_star.sum(axis=1)
        grad += beta2 / (n * (row_sums + CONNECTIVITY_EPS))[:, None]
    if beta3 != 0.0:
        grad += beta3 * 2.0 * a_star / n**2
    return grad
