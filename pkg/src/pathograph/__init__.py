"""Correlation brain-graph pruning, feature distillation and GCN classification."""

from .config import RunConfig
from .distill import (
    apply_masks,
    communal_scores,
    drop_noise_features,
    group_scores,
    masking_probabilities,
)
from .evaluation import compute_metrics, stratified_folds
from .gcn import GcnConfig, GcnModel, gradient_check, normalize_adjacency
from .ingest import load_cohort, pearson_graph
from .linalg import SvdResult, rank_one_residual, svd, symmetric_eigen
from .partition import partition_by_spectral_clustering, partition_from_atlas
from .pathofilter import build_pathograph_cohort, graph_to_svm_vector, patho_scores, train_svm
from .pipeline import run_pipeline, sweep
from .synth import SynthSpec, generate
from .types import BrainGraph, Cohort

__version__ = "0.1.0"

__all__ = [
    "BrainGraph",
    "Cohort",
    "GcnConfig",
    "GcnModel",
    "RunConfig",
    "SvdResult",
    "SynthSpec",
    "apply_masks",
    "build_pathograph_cohort",
    "communal_scores",
    "compute_metrics",
    "drop_noise_features",
    "generate",
    "gradient_check",
    "graph_to_svm_vector",
    "group_scores",
    "load_cohort",
    "masking_probabilities",
    "normalize_adjacency",
    "partition_by_spectral_clustering",
    "partition_from_atlas",
    "patho_scores",
    "pearson_graph",
    "rank_one_residual",
    "run_pipeline",
    "stratified_folds",
    "svd",
    "sweep",
    "symmetric_eigen",
    "train_svm",
]
