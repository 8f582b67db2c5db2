"""Subgraph relevance filter.

An RBF-kernel SVM classifies whole graphs (score alpha) and per-subgraph
masked graphs (patho-scores beta_i); subgraphs with beta_i >= alpha form the
pruned PathoGraph shared by every subject.
"""

import warnings as _warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.multiclass import OneVsRestClassifier
from sklearn.svm import SVC

from .errors import EmptyPathoGraph, InvalidInput, NumericalFailure
from .evaluation import stratified_fold_assignment
from .rng import substream

_SMO_MAX_ITER = 100_000


@dataclass
class FilterConfig:
    C: float = 1.0
    gamma: object = "scale"
    folds: int = 5
    seed: int = 0
    retrain_per_subgraph: bool = True
    selection_scope: str = "train_only"


@dataclass
class SvmModel:
    """Trained RBF-kernel SVM (SMO-solved) over flattened graph vectors."""

    estimator: object
    classes: np.ndarray
    C: float
    gamma_value: float

    def predict(self, vectors):
        return self.estimator.predict(vectors)

    def decision_function(self, vectors):
        return self.estimator.decision_function(vectors)

    def binary_duals(self):
        """(signed dual coefs, support vectors, intercept) of a binary problem."""
        est = self.estimator
        if isinstance(est, OneVsRestClassifier):
            raise InvalidInput("binary_duals is only defined for 2-class models")
        return est.dual_coef_[0], est.support_vectors_, float(est.intercept_[0])


def resolve_gamma(vectors, gamma):
    if gamma == "scale":
        var = float(np.asarray(vectors).var())
        return 1.0 / (vectors.shape[1] * var) if var > 0 else 1.0
    return float(gamma)


def train_svm(vectors, labels, C=1.0, gamma="scale"):
    """Fit the SVM; one-vs-rest for more than two classes."""
    vectors = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    classes, counts = np.unique(labels, return_counts=True)
    if classes.size < 2:
        raise InvalidInput("need at least 2 classes to train the SVM")
    if counts.min() < 2:
        raise InvalidInput("need at least 2 samples per class")
    gamma_value = resolve_gamma(vectors, gamma)
    base = SVC(kernel="rbf", C=C, gamma=gamma_value, max_iter=_SMO_MAX_ITER)
    est = base if classes.size == 2 else OneVsRestClassifier(base)
    with _warnings.catch_warnings():
        _warnings.simplefilter("error", ConvergenceWarning)
        try:
            est.fit(vectors, labels)
        except ConvergenceWarning as exc:
            raise NumericalFailure(
                f"SMO did not converge within {_SMO_MAX_ITER} iterations"
            ) from exc
    return SvmModel(estimator=est, classes=classes, C=C, gamma_value=gamma_value)


def upper_triangle_mask(n, keep_nodes):
    """Boolean mask over the strict upper triangle for edges inside keep_nodes."""
    iu, ju = np.triu_indices(n, k=1)
    keep = np.zeros(n, dtype=bool)
    keep[list(keep_nodes)] = True
    return keep[iu] & keep[ju]


def graph_to_svm_vector(graph, keep_nodes=None):
    """Flattened strict upper triangle; outside-subgraph edges zeroed."""
    n = graph.node_count
    iu, ju = np.triu_indices(n, k=1)
    vec = graph.adjacency[iu, ju].copy()
    if keep_nodes is not None:
        if any(not 0 <= int(v) < n for v in keep_nodes):
            raise InvalidInput("keep_nodes index out of range")
        vec[~upper_triangle_mask(n, keep_nodes)] = 0.0
    return vec


def cohort_vectors(cohort):
    """Stacked upper-triangle vectors, one row per subject."""
    n = cohort.node_count
    iu, ju = np.triu_indices(n, k=1)
    return np.stack([g.adjacency[iu, ju] for g in cohort.graphs])


@dataclass
class PathoScoreReport:
    alpha: float
    betas: np.ndarray
    subgraph_names: list
    scope: str
    seed: int

    @property
    def retained(self):
        """Subgraph indices with beta_i >= alpha (ties retain)."""
        return [i for i, b in enumerate(self.betas) if b >= self.alpha]

    def to_json(self):
        return {
            "alpha": float(self.alpha),
            "betas": [
                {"name": name, "beta": float(b)}
                for name, b in zip(self.subgraph_names, self.betas)
            ],
            "retained": [self.subgraph_names[i] for i in self.retained],
            "scope": self.scope,
            "seed": int(self.seed),
        }


def patho_scores(cohort, partition, cfg=None):
    """Cross-validated whole-graph score and per-subgraph patho-scores.

    The same seeded fold assignment is reused for alpha and every beta_i so
    the scores are comparable.  With ``retrain_per_subgraph`` every sample of
    train and test folds is masked to the subgraph before training; otherwise
    each fold's whole-graph SVM scores the masked test vectors directly.
    """
    cfg = cfg or FilterConfig()
    if partition.node_count != cohort.node_count:
        raise InvalidInput("partition and cohort disagree on node count")
    labels = cohort.labels
    vectors = cohort_vectors(cohort)
    rng = substream(cfg.seed, "pathofilter-folds")
    fold_of = stratified_fold_assignment(labels, cfg.folds, rng)

    masks = [
        upper_triangle_mask(cohort.node_count, partition.nodes_of(i))
        for i in range(partition.m)
    ]

    correct_full = 0
    correct_sub = np.zeros(partition.m, dtype=np.int64)
    for f in range(cfg.folds):
        test = fold_of == f
        train = ~test
        model = train_svm(vectors[train], labels[train], C=cfg.C, gamma=cfg.gamma)
        correct_full += int(np.sum(model.predict(vectors[test]) == labels[test]))
        for i, mask in enumerate(masks):
            masked = vectors * mask
            if cfg.retrain_per_subgraph:
                sub_model = train_svm(
                    masked[train], labels[train], C=cfg.C, gamma=cfg.gamma
                )
            else:
                sub_model = model
            correct_sub[i] += int(np.sum(sub_model.predict(masked[test]) == labels[test]))

    total = labels.size
    return PathoScoreReport(
        alpha=correct_full / total,
        betas=correct_sub / total,
        subgraph_names=list(partition.subgraph_names),
        scope=cfg.selection_scope,
        seed=cfg.seed,
    )


@dataclass
class PathoGraphCohort:
    """Per-subject induced submatrices on the retained node set."""

    node_index_map: np.ndarray
    adjacencies: list
    subject_ids: list
    labels: np.ndarray
    groups: np.ndarray
    class_names: list
    group_count: int
    provenance: object = None
    load_warnings: list = field(default_factory=list)

    @property
    def node_count(self):
        return self.node_index_map.size

    @property
    def size(self):
        return len(self.adjacencies)

    def feature_list(self):
        """Node-feature matrices (adjacency rows), one per subject."""
        return [a.copy() for a in self.adjacencies]

    @classmethod
    def from_cohort(cls, cohort, node_index_map, provenance=None):
        idx = np.asarray(node_index_map, dtype=np.int64)
        return cls(
            node_index_map=idx,
            adjacencies=[g.adjacency[np.ix_(idx, idx)].copy() for g in cohort.graphs],
            subject_ids=[g.subject_id for g in cohort.graphs],
            labels=cohort.labels,
            groups=cohort.groups,
            class_names=list(cohort.class_names),
            group_count=cohort.group_count,
            provenance=provenance,
        )

    @classmethod
    def from_full(cls, cohort):
        """Identity pruning: every node retained (filter disabled)."""
        return cls.from_cohort(cohort, np.arange(cohort.node_count))


def build_pathograph_cohort(cohort, partition, report):
    """Induced submatrices on the union of retained subgraphs' nodes."""
    retained = report.retained
    if not retained:
        raise EmptyPathoGraph("no subgraph reached the whole-graph score")
    nodes = np.sort(np.concatenate([partition.nodes_of(i) for i in retained]))
    return PathoGraphCohort.from_cohort(cohort, nodes, provenance=report)
