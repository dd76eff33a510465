"""End-to-end training: structure learning per epoch, then representations.

Each epoch, in order: position profiles and label-influence conflicts are
recomputed on the current graph version (the previous epoch's sparsified
learned structure; the original graph on epoch one), the two candidate
structures are learned and fused, the GCN runs on the fused structure, and
one optimizer step minimizes classification loss plus the three structure
regularizers. The fusion coefficients decay geometrically toward a floor so
the learned position-aware view gradually takes over from the original
adjacency.

Model selection is the best validation weighted-F1 checkpoint with early
stopping on validation loss.
"""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .errors import DivergedLoss, EmptyMask, InvalidParams
from .gnn import (
    ModelState,
    backward_step,
    cross_entropy,
    cross_entropy_with_grad,
    forward_step,
    gcn_backward,
    gcn_forward,
    init_model_state,
)
from .gpr import conflict_weights, group_pagerank
from .graph import Graph, LabelSplit, normalized_adjacency, sample_split
from .metrics import curvature_map, reaching_coefficient, squashing_coefficient
from .optim import OptimizerState, optimizer_step
from .position import position_profile
from .structure import LearnedStructure


@dataclass
class TrainConfig:
    """Hyperparameters of one run; defaults follow the reference protocol
    (4 heads, restart probability 0.15, width 256, 20 labels per class)."""

    epochs: int = 200
    heads: int = 4
    restart_prob: float = 0.15
    lambda1: float = 0.8
    lambda2: float = 0.5
    lambda_decay: float = 0.9
    lambda_floor: float = 0.1
    beta_smooth: float = 0.5
    beta_connect: float = -0.3  # signed: negative rewards connectivity
    beta_sparse: float = 0.1
    a0: float = 0.1
    lr: float = 0.01
    hidden_dim: int = 256
    embed_dim: int = 256
    dropout: float = 0.5
    seed: int = 0
    per_class: int = 20
    patience: int = 50
    track_imbalance: bool = False

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidParams("epochs must be >= 1")
        if not 0.0 < self.restart_prob < 1.0:
            raise InvalidParams("restart_prob must be in (0, 1)")
        if not (0.0 <= self.lambda1 <= 1.0 and 0.0 <= self.lambda2 <= 1.0):
            raise InvalidParams("lambda coefficients must be in [0, 1]")
        if not 0.0 < self.lambda_decay <= 1.0:
            raise InvalidParams("lambda_decay must be in (0, 1]")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidParams("dropout must be in [0, 1)")
        if self.a0 < 0.0:
            raise InvalidParams("a0 must be nonnegative")


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    loss_cls: float
    loss_smooth: float
    loss_con: float
    loss_spar: float
    val_wf1: float | None
    val_mf1: float | None
    test_wf1: float | None
    test_mf1: float | None
    rc: float | None = None
    sc: float | None = None


@dataclass
class TrainResult:
    state: ModelState
    structure: LearnedStructure | None
    records: list[EpochRecord]
    predictions: np.ndarray
    logits: np.ndarray
    best_epoch: int
    learned_graph: Graph | None = None


# ------------------------------------------------------------------ metrics

def _f1(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float]:
    classes = np.unique(y_true)
    f1s = np.empty(classes.size)
    support = np.empty(classes.size)
    for i, c in enumerate(classes):
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        denom = 2 * tp + fp + fn
        f1s[i] = 2.0 * tp / denom if denom else 0.0
        support[i] = np.sum(y_true == c)
    weighted = float(np.average(f1s, weights=support))
    macro = float(f1s.mean())
    return weighted, macro


def evaluate(
    logits: np.ndarray, split: LabelSplit, mask: str | np.ndarray = "test"
) -> tuple[float, float]:
    """Weighted-F1 and Macro-F1 of argmax predictions under a mask.

    Macro averages over the classes present in the masked ground truth.
    """
    if isinstance(mask, str):
        try:
            mask = getattr(split, f"{mask}_mask")
        except AttributeError:
            raise InvalidParams(f"unknown mask name {mask!r}") from None
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMask("evaluation mask selects no nodes")
    y_true = split.labels[mask]
    y_pred = logits[mask].argmax(axis=1)
    return _f1(y_true, y_pred)


# ----------------------------------------------------------------- training

def _dropout_mask(
    gen: np.random.Generator, shape: tuple[int, int], rate: float
) -> np.ndarray | None:
    if rate <= 0.0:
        return None
    return (gen.random(shape) >= rate) / (1.0 - rate)


def _graph_from_structure(a_star: np.ndarray, g: Graph) -> Graph | None:
    """The learned structure as a graph (self-loops stripped); None if empty."""
    adj = a_star.copy()
    np.fill_diagonal(adj, 0.0)
    adj = (adj + adj.T) / 2.0
    if not (adj > 0).any():
        return None
    return Graph(adjacency=adj, features=g.features)


@dataclass
class _Checkpoint:
    epoch: int = -1
    score: float = -np.inf
    state: ModelState | None = None
    structure: LearnedStructure | None = None
    logits: np.ndarray | None = None
    graph: Graph | None = None

    def update(self, epoch, score, state, structure, logits, graph) -> bool:
        if score > self.score:
            self.epoch = epoch
            self.score = score
            self.state = {k: v.copy() for k, v in state.items()}
            self.structure = copy.deepcopy(structure)
            self.logits = logits.copy()
            self.graph = graph
            return True
        return False


def train(g: Graph, split: LabelSplit, cfg: TrainConfig) -> TrainResult:
    """Run the full position-aware structure-learning loop.

    Returns the best-validation checkpoint (last epoch when there is no
    validation mask) together with all epoch records and final predictions.
    """
    x = g.features
    d0 = x.shape[1]
    num_classes = split.num_classes
    state = init_model_state(
        d0, num_classes, cfg.hidden_dim, cfg.embed_dim, cfg.heads, cfg.seed
    )
    opt = OptimizerState(lr=cfg.lr)
    dropout_gen = rng_mod.stream(cfg.seed, "dropout")

    a_norm = normalized_adjacency(g)
    profile0 = position_profile(g, split, graph_version="original")
    version_graph = g
    version_profile = profile0

    # Bootstrap representations with one evaluation pass on the original
    # structure; afterwards each epoch reuses the previous epoch's output.
    z_prev, _, _ = gcn_forward(state, a_norm, x)

    lambda1, lambda2 = cfg.lambda1, cfg.lambda2
    has_val = bool(split.val_mask.any())
    has_test = bool(split.test_mask.any())
    best = _Checkpoint()
    best_val_loss = np.inf
    stale = 0
    records: list[EpochRecord] = []
    last_eval = None

    for epoch in range(1, cfg.epochs + 1):
        gpr = group_pagerank(version_graph, split, cfg.restart_prob)
        w = conflict_weights(gpr).w
        drop = _dropout_mask(dropout_gen, (g.n, cfg.hidden_dim), cfg.dropout)

        step_kwargs = dict(
            x=x,
            z_prev=z_prev,
            profile=version_profile.p,
            profile0=profile0.p,
            a_norm=a_norm,
            conflict_w=w,
            lambda1=lambda1,
            lambda2=lambda2,
            a0=cfg.a0,
            betas=(cfg.beta_smooth, cfg.beta_connect, cfg.beta_sparse),
            labels=split.labels,
            train_mask=split.train_mask,
        )
        res = forward_step(state, **step_kwargs, dropout_mask=drop)
        if not np.isfinite(res.loss):
            raise DivergedLoss(f"loss became non-finite at epoch {epoch}")
        grads = backward_step(res.tape)
        optimizer_step(state, grads, opt)

        # Clean evaluation pass with the updated parameters; its structure
        # and representations seed the next epoch.
        ev = forward_step(state, **step_kwargs, dropout_mask=None)
        last_eval = ev
        val = evaluate(ev.logits, split, "val") if has_val else (None, None)
        test = evaluate(ev.logits, split, "test") if has_test else (None, None)

        rc = sc = None
        if cfg.track_imbalance:
            snapshot = _graph_from_structure(ev.structure.a_star, g)
            if snapshot is not None:
                rc = reaching_coefficient(snapshot, split)
                sc = squashing_coefficient(
                    snapshot, split, curvature_map(snapshot)
                )
        records.append(
            EpochRecord(
                epoch=epoch,
                loss=res.loss,
                loss_cls=res.loss_cls,
                loss_smooth=res.loss_smooth,
                loss_con=res.loss_con,
                loss_spar=res.loss_spar,
                val_wf1=val[0],
                val_mf1=val[1],
                test_wf1=test[0],
                test_mf1=test[1],
                rc=rc,
                sc=sc,
            )
        )

        z_prev = ev.z
        next_graph = _graph_from_structure(ev.structure.a_star, g)
        if next_graph is not None:
            version_graph = next_graph
            version_profile = position_profile(
                version_graph, split, graph_version=f"epoch-{epoch}"
            )

        score = val[0] if has_val else float(epoch)
        best.update(epoch, score, state, ev.structure, ev.logits,
                    next_graph if next_graph is not None else version_graph)
        if has_val:
            val_loss = cross_entropy(ev.logits, split.labels, split.val_mask)
            if val_loss < best_val_loss - 1e-12:
                best_val_loss = val_loss
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break

        lambda1 = max(cfg.lambda_floor, cfg.lambda_decay * lambda1)
        lambda2 = max(cfg.lambda_floor, cfg.lambda_decay * lambda2)

    assert best.state is not None and best.logits is not None
    return TrainResult(
        state=best.state,
        structure=best.structure,
        records=records,
        predictions=best.logits.argmax(axis=1),
        logits=best.logits,
        best_epoch=best.epoch,
        learned_graph=best.graph,
    )


# ---------------------------------------------------------------- baselines

BASELINE_KINDS = ("plain_gcn", "add_edge", "drop_edge")


def _perturbed_adjacency(
    g: Graph, kind: str, rate: float, gen: np.random.Generator
) -> np.ndarray:
    edges = g.edges()
    adj = g.adjacency.copy()
    if kind == "drop_edge":
        keep = gen.random(edges.shape[0]) >= rate
        dropped = edges[~keep]
        adj[dropped[:, 0], dropped[:, 1]] = 0.0
        adj[dropped[:, 1], dropped[:, 0]] = 0.0
    else:  # add_edge
        count = int(gen.binomial(edges.shape[0], rate))
        if count:
            free_u, free_v = np.nonzero(np.triu(~g.adj_bool, k=1))
            if free_u.size:
                pick = gen.choice(free_u.size, size=min(count, free_u.size),
                                  replace=False)
                adj[free_u[pick], free_v[pick]] = 1.0
                adj[free_v[pick], free_u[pick]] = 1.0
    return adj


def run_baseline(
    kind: str,
    g: Graph,
    split: LabelSplit,
    cfg: TrainConfig,
    rate: float = 0.10,
) -> TrainResult:
    """Train the backbone GCN on a fixed or randomly perturbed structure.

    ``plain_gcn`` uses the normalized original adjacency every epoch;
    ``add_edge``/``drop_edge`` resample the perturbation each epoch with the
    given rate.
    """
    if kind not in BASELINE_KINDS:
        raise InvalidParams(f"unknown baseline {kind!r}")
    if kind != "plain_gcn" and not 0.0 <= rate < 1.0:
        raise InvalidParams("perturbation rate must be in [0, 1)")
    x = g.features
    num_classes = split.num_classes
    full_state = init_model_state(
        x.shape[1], num_classes, cfg.hidden_dim, cfg.embed_dim, cfg.heads, cfg.seed
    )
    state: ModelState = {k: full_state[k] for k in ("w1", "w2", "w_cls")}
    opt = OptimizerState(lr=cfg.lr)
    dropout_gen = rng_mod.stream(cfg.seed, "dropout")
    perturb_gen = rng_mod.stream(cfg.seed, "perturb")
    a_norm = normalized_adjacency(g)

    has_val = bool(split.val_mask.any())
    has_test = bool(split.test_mask.any())
    best = _Checkpoint()
    best_val_loss = np.inf
    stale = 0
    records: list[EpochRecord] = []

    for epoch in range(1, cfg.epochs + 1):
        if kind == "plain_gcn" or rate == 0.0:
            a_used = a_norm
        else:
            perturbed = Graph(
                adjacency=_perturbed_adjacency(g, kind, rate, perturb_gen),
                features=x,
            )
            a_used = normalized_adjacency(perturbed)
        drop = _dropout_mask(dropout_gen, (g.n, cfg.hidden_dim), cfg.dropout)
        _, logits, tape = gcn_forward(state, a_used, x, dropout_mask=drop)
        loss, d_logits = cross_entropy_with_grad(
            logits, split.labels, split.train_mask
        )
        if not np.isfinite(loss):
            raise DivergedLoss(f"loss became non-finite at epoch {epoch}")
        grads = gcn_backward(tape, d_logits)
        optimizer_step(state, grads, opt)

        _, ev_logits, _ = gcn_forward(state, a_used, x)
        val = evaluate(ev_logits, split, "val") if has_val else (None, None)
        test = evaluate(ev_logits, split, "test") if has_test else (None, None)
        records.append(
            EpochRecord(
                epoch=epoch,
                loss=loss,
                loss_cls=loss,
                loss_smooth=0.0,
                loss_con=0.0,
                loss_spar=0.0,
                val_wf1=val[0],
                val_mf1=val[1],
                test_wf1=test[0],
                test_mf1=test[1],
            )
        )
        score = val[0] if has_val else float(epoch)
        best.update(epoch, score, state, None, ev_logits, None)
        if has_val:
            val_loss = cross_entropy(ev_logits, split.labels, split.val_mask)
            if val_loss < best_val_loss - 1e-12:
                best_val_loss = val_loss
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break

    assert best.state is not None and best.logits is not None
    return TrainResult(
        state=best.state,
        structure=None,
        records=records,
        predictions=best.logits.argmax(axis=1),
        logits=best.logits,
        best_epoch=best.epoch,
        learned_graph=None,
    )


# ------------------------------------------------------------------ studies

@dataclass
class StudyRecord:
    rc: float
    sc: float
    wf1: float
    seed: int


def label_placement_study(
    g: Graph,
    labels: np.ndarray,
    trials: int,
    cfg: TrainConfig,
    workers: int = 1,
) -> list[StudyRecord]:
    """Resample label placements and relate the diagnostics to accuracy.

    For each trial: draw a fresh split, measure both diagnostics on the
    original graph, train the plain GCN and record its test weighted-F1.
    Trials carry independent derived seeds, so results do not depend on
    ``workers``.
    """
    if trials < 2:
        raise InvalidParams("need at least 2 trials")
    curv = curvature_map(g)

    def one(t: int) -> StudyRecord:
        trial_seed = int(rng_mod.stream(cfg.seed, "study", t).integers(2**63))
        split = sample_split(g, labels, cfg.per_class, seed=trial_seed)
        rc = reaching_coefficient(g, split)
        sc = squashing_coefficient(g, split, curv)
        trial_cfg = dataclasses.replace(cfg, seed=trial_seed)
        result = run_baseline("plain_gcn", g, split, trial_cfg)
        wf1, _ = evaluate(result.logits, split, "test")
        return StudyRecord(rc=rc, sc=sc, wf1=wf1, seed=trial_seed)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(workers, trials)) as pool:
            return list(pool.map(one, range(trials)))
    return [one(t) for t in range(trials)]
