"""Position-aware graph structure learning and topology-imbalance diagnostics.

The package provides:

- a graph data model with an SBM benchmark generator and plain-file IO,
- two topology-imbalance diagnostics (reaching and squashing coefficients)
  built on exact Ollivier-Ricci edge curvature,
- Group-PageRank label influence with a class-wise conflict measure,
- the position-aware structure learner with a built-in two-layer GCN and
  hand-derived exact gradients,
- scikit-learn style estimators and a CLI (``pastel``) tying it together.
"""

__version__ = "0.1.0"

from .errors import PastelError
from .estimator import GcnClassifier, PastelClassifier
from .gpr import GprMatrix, anneal_weights, conflict_kl, group_pagerank
from .graph import (
    Graph,
    LabelSplit,
    SbmParams,
    bfs_distances,
    diameter,
    generate_sbm,
    load_graph,
    normalized_adjacency,
    sample_split,
    save_graph,
)
from .metrics import (
    CurvatureMap,
    ImbalanceReport,
    curvature_map,
    imbalance_report,
    reaching_coefficient,
    ricci_curvature,
    squashing_coefficient,
)
from .numerics import finite_diff_check, solve_linear
from .optim import OptimizerState, optimizer_step
from .position import PositionEncoder, PositionProfile, encode, position_profile
from .trainer import (
    EpochRecord,
    StudyRecord,
    TrainConfig,
    TrainResult,
    evaluate,
    label_placement_study,
    run_baseline,
    train,
)
from .transport import DiscreteMeasure, transport_cost, wasserstein1

__all__ = [
    "__version__",
    "PastelError",
    "PastelClassifier",
    "GcnClassifier",
    "GprMatrix",
    "anneal_weights",
    "conflict_kl",
    "group_pagerank",
    "Graph",
    "LabelSplit",
    "SbmParams",
    "bfs_distances",
    "diameter",
    "generate_sbm",
    "load_graph",
    "normalized_adjacency",
    "sample_split",
    "save_graph",
    "CurvatureMap",
    "ImbalanceReport",
    "curvature_map",
    "imbalance_report",
    "reaching_coefficient",
    "ricci_curvature",
    "squashing_coefficient",
    "finite_diff_check",
    "solve_linear",
    "OptimizerState",
    "optimizer_step",
    "PositionEncoder",
    "PositionProfile",
    "encode",
    "position_profile",
    "EpochRecord",
    "StudyRecord",
    "TrainConfig",
    "TrainResult",
    "evaluate",
    "label_placement_study",
    "run_baseline",
    "train",
    "DiscreteMeasure",
    "transport_cost",
    "wasserstein1",
]
