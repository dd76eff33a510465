"""Two-layer GCN encoder plus the composed training-step forward/backward.

The model is ``Z = A* . relu(A* X W1) W2`` with a linear classifier on top;
``A*`` comes out of the structure pipeline already normalized, so it is used
directly for propagation. The backward pass is hand-derived matrix calculus
over a tape of cached intermediates: gradients of the total loss reach the
GCN weights, the classifier, both metric learners and the position encoder,
flowing through ``A*`` into the similarity and encoding steps. BFS profiles,
conflict weights and the mask support are constants of the epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as rng_mod
from .errors import ConsumedTape, NoLabeledNodes, ShapeMismatch
from .structure import (
    FuseTape,
    LearnedStructure,
    MetricLearner,
    MetricTape,
    fuse,
    fuse_backward,
    pairwise_metric,
    pairwise_metric_backward,
    regularizer_grads,
    regularizers,
)

ModelState = dict[str, np.ndarray]


def glorot(shape: tuple[int, int], seed: int, name: str) -> np.ndarray:
    gen = rng_mod.stream(seed, "init", name)
    bound = np.sqrt(6.0 / (shape[0] + shape[1]))
    return gen.uniform(-bound, bound, size=shape)


def init_model_state(
    d0: int,
    num_classes: int,
    hidden_dim: int,
    embed_dim: int,
    heads: int,
    seed: int,
) -> ModelState:
    """All trainable parameters, each drawn from its own named stream."""
    state: ModelState = {
        "w_phi": glorot((d0, num_classes), seed, "w_phi"),
        "w1": glorot((d0, hidden_dim), seed, "gcn.w1"),
        "w2": glorot((hidden_dim, embed_dim), seed, "gcn.w2"),
        "w_cls": glorot((embed_dim, num_classes), seed, "gcn.w_cls"),
    }
    bound_p = 1.0 / np.sqrt(embed_dim + d0)
    bound_n = 1.0 / np.sqrt(2 * d0)
    for h in range(heads):
        state[f"head_p_{h}"] = rng_mod.stream(seed, "init", f"head_p.{h}").uniform(
            -bound_p, bound_p, size=(embed_dim + d0, embed_dim + d0)
        )
        state[f"head_n_{h}"] = rng_mod.stream(seed, "init", f"head_n.{h}").uniform(
            -bound_n, bound_n, size=(2 * d0, 2 * d0)
        )
    return state


def heads_of(state: ModelState, prefix: str) -> list[np.ndarray]:
    keys = sorted(
        (k for k in state if k.startswith(prefix)),
        key=lambda k: int(k.rsplit("_", 1)[1]),
    )
    return [state[k] for k in keys]


# ----------------------------------------------------------- classification

def cross_entropy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    loss, _ = cross_entropy_with_grad(logits, labels, mask)
    return loss


def cross_entropy_with_grad(
    logits: np.ndarray, labels: np.ndarray, mask: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean negative log-softmax of the true class over masked nodes."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise NoLabeledNodes("cross entropy needs at least one labeled node")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    picked = log_probs[idx, labels[idx]]
    loss = -float(picked.mean())
    d_logits = np.zeros_like(logits)
    probs = np.exp(log_probs[idx])
    probs[np.arange(idx.size), labels[idx]] -= 1.0
    d_logits[idx] = probs / idx.size
    return loss, d_logits


# ------------------------------------------------------------- forward tape

@dataclass
class ForwardTape:
    """Intermediates of one training-step forward; consumed once."""

    # inputs treated as constants
    x: np.ndarray
    z_prev: np.ndarray
    profile: np.ndarray
    profile0: np.ndarray
    conflict_w: np.ndarray
    betas: tuple[float, float, float]
    labels: np.ndarray
    train_mask: np.ndarray
    dropout_mask: np.ndarray | None
    # parameters (references, not copies)
    state: ModelState
    heads_p: MetricLearner
    heads_n: MetricLearner
    # intermediates
    inputs_p: np.ndarray
    inputs_n: np.ndarray
    tape_p: MetricTape
    tape_n: MetricTape
    sim_p: np.ndarray
    fuse_tape: FuseTape
    a_star: np.ndarray
    b1: np.ndarray
    h1_pre: np.ndarray
    h1_dropped: np.ndarray
    b2: np.ndarray
    z: np.ndarray
    logits: np.ndarray
    consumed: bool = field(default=False)


@dataclass
class StepResult:
    loss: float
    loss_cls: float
    loss_smooth: float
    loss_con: float
    loss_spar: float
    structure: LearnedStructure
    z: np.ndarray
    logits: np.ndarray
    tape: ForwardTape


def forward_step(
    state: ModelState,
    *,
    x: np.ndarray,
    z_prev: np.ndarray,
    profile: np.ndarray,
    profile0: np.ndarray,
    a_norm: np.ndarray,
    conflict_w: np.ndarray,
    lambda1: float,
    lambda2: float,
    a0: float,
    betas: tuple[float, float, float],
    labels: np.ndarray,
    train_mask: np.ndarray,
    dropout_mask: np.ndarray | None = None,
    support: np.ndarray | None = None,
) -> StepResult:
    """One full differentiable pass from parameters to total loss.

    ``dropout_mask`` is a pre-drawn scaled keep mask for the hidden layer
    (None = evaluation mode); ``support`` pins the sparsification mask,
    which gradient checks need to stay differentiable.
    """
    heads_p = MetricLearner(heads=heads_of(state, "head_p_"))
    heads_n = MetricLearner(heads=heads_of(state, "head_n_"))
    w_phi = state["w_phi"]

    h_p = profile @ w_phi.T
    h_p0 = profile0 @ w_phi.T
    inputs_p = np.hstack([z_prev, h_p])
    inputs_n = np.hstack([x, h_p0])

    sim_p, tape_p = pairwise_metric(inputs_p, heads_p)
    sim_n, tape_n = pairwise_metric(inputs_n, heads_n)
    a_p_weighted = sim_p * conflict_w
    a_star, fuse_tape = fuse(
        a_norm, sim_n, a_p_weighted, lambda1, lambda2, a0, support=support
    )

    b1 = x @ state["w1"]
    h1_pre = a_star @ b1
    h1 = np.maximum(h1_pre, 0.0)
    h1_dropped = h1 * dropout_mask if dropout_mask is not None else h1
    b2 = h1_dropped @ state["w2"]
    z = a_star @ b2
    logits = z @ state["w_cls"]

    loss_cls = cross_entropy(logits, labels, train_mask)
    terms = regularizers(a_star, x)
    beta1, beta2, beta3 = betas
    loss = loss_cls + beta1 * terms.smooth + beta2 * terms.con + beta3 * terms.spar

    structure = LearnedStructure(
        a_n=sim_n,
        a_p=sim_p,
        a_p_weighted=a_p_weighted,
        a_star=a_star,
        lambda1=lambda1,
        lambda2=lambda2,
        threshold=a0,
    )
    tape = ForwardTape(
        x=x,
        z_prev=z_prev,
        profile=profile,
        profile0=profile0,
        conflict_w=conflict_w,
        betas=betas,
        labels=labels,
        train_mask=train_mask,
        dropout_mask=dropout_mask,
        state=state,
        heads_p=heads_p,
        heads_n=heads_n,
        inputs_p=inputs_p,
        inputs_n=inputs_n,
        tape_p=tape_p,
        tape_n=tape_n,
        sim_p=sim_p,
        fuse_tape=fuse_tape,
        a_star=a_star,
        b1=b1,
        h1_pre=h1_pre,
        h1_dropped=h1_dropped,
        b2=b2,
        z=z,
        logits=logits,
    )
    return StepResult(
        loss=float(loss),
        loss_cls=loss_cls,
        loss_smooth=terms.smooth,
        loss_con=terms.con,
        loss_spar=terms.spar,
        structure=structure,
        z=z,
        logits=logits,
        tape=tape,
    )


def backward_step(tape: ForwardTape) -> ModelState:
    """Exact gradients of the total loss for every trainable parameter."""
    if tape.consumed:
        raise ConsumedTape("forward tape already consumed by a backward pass")
    tape.consumed = True
    state = tape.state

    _, d_logits = cross_entropy_with_grad(tape.logits, tape.labels, tape.train_mask)
    grads: ModelState = {}
    grads["w_cls"] = tape.z.T @ d_logits
    d_z = d_logits @ state["w_cls"].T

    d_a_star = d_z @ tape.b2.T
    d_b2 = tape.a_star.T @ d_z
    grads["w2"] = tape.h1_dropped.T @ d_b2
    d_h1_dropped = d_b2 @ state["w2"].T
    d_h1 = (
        d_h1_dropped * tape.dropout_mask
        if tape.dropout_mask is not None
        else d_h1_dropped
    )
    d_h1_pre = d_h1 * (tape.h1_pre > 0)
    d_a_star += d_h1_pre @ tape.b1.T
    d_b1 = tape.a_star.T @ d_h1_pre
    grads["w1"] = tape.x.T @ d_b1

    beta1, beta2, beta3 = tape.betas
    if beta1 != 0.0 or beta2 != 0.0 or beta3 != 0.0:
        d_a_star += regularizer_grads(tape.a_star, tape.x, beta1, beta2, beta3)

    d_sim_n, d_a_pw = fuse_backward(tape.fuse_tape, d_a_star)
    d_sim_p = d_a_pw * tape.conflict_w

    d_heads_p, d_inputs_p = pairwise_metric_backward(tape.tape_p, tape.heads_p, d_sim_p)
    d_heads_n, d_inputs_n = pairwise_metric_backward(tape.tape_n, tape.heads_n, d_sim_n)
    for h, d_w in enumerate(d_heads_p):
        grads[f"head_p_{h}"] = d_w
    for h, d_w in enumerate(d_heads_n):
        grads[f"head_n_{h}"] = d_w

    d_embed = tape.z_prev.shape[1]
    d0 = tape.x.shape[1]
    d_h_p = d_inputs_p[:, d_embed:]
    d_h_p0 = d_inputs_n[:, d0:]
    grads["w_phi"] = d_h_p.T @ tape.profile + d_h_p0.T @ tape.profile0
    return grads


# ---------------------------------------------------------- plain GCN pieces

@dataclass
class GcnTape:
    x: np.ndarray
    a: np.ndarray
    b1: np.ndarray
    h1_pre: np.ndarray
    h1_dropped: np.ndarray
    b2: np.ndarray
    z: np.ndarray
    logits: np.ndarray
    dropout_mask: np.ndarray | None
    state: ModelState
    consumed: bool = field(default=False)


def gcn_forward(
    state: ModelState,
    a: np.ndarray,
    x: np.ndarray,
    dropout_mask: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, GcnTape]:
    """Encoder + classifier on a fixed propagation matrix.

    Returns (representations, logits, tape). ``a`` must already be
    normalized; with ``a`` = identity this is a plain two-layer MLP.
    """
    if a.shape[0] != x.shape[0]:
        raise ShapeMismatch("propagation matrix and features disagree on nodes")
    b1 = x @ state["w1"]
    h1_pre = a @ b1
    h1 = np.maximum(h1_pre, 0.0)
    h1_dropped = h1 * dropout_mask if dropout_mask is not None else h1
    b2 = h1_dropped @ state["w2"]
    z = a @ b2
    logits = z @ state["w_cls"]
    tape = GcnTape(
        x=x,
        a=a,
        b1=b1,
        h1_pre=h1_pre,
        h1_dropped=h1_dropped,
        b2=b2,
        z=z,
        logits=logits,
        dropout_mask=dropout_mask,
        state=state,
    )
    return z, logits, tape


def gcn_backward(tape: GcnTape, d_logits: np.ndarray) -> ModelState:
    """Gradients of the GCN weights for a fixed propagation matrix."""
    if tape.consumed:
        raise ConsumedTape("gcn tape already consumed")
    tape.consumed = True
    state = tape.state
    grads: ModelState = {"w_cls": tape.z.T @ d_logits}
    d_z = d_logits @ state["w_cls"].T
    d_b2 = tape.a.T @ d_z
    grads["w2"] = tape.h1_dropped.T @ d_b2
    d_h1 = d_b2 @ state["w2"].T
    if tape.dropout_mask is not None:
        d_h1 = d_h1 * tape.dropout_mask
    d_h1_pre = d_h1 * (tape.h1_pre > 0)
    d_b1 = tape.a.T @ d_h1_pre
    grads["w1"] = tape.x.T @ d_b1
    return grads
