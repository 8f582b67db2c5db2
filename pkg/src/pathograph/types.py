"""Shared domain types for correlation brain graphs and cohorts."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, ShapeMismatch


@dataclass
class BrainGraph:
    """One subject's ROI graph.

    The adjacency is a symmetric correlation matrix with unit diagonal; node
    features are the adjacency rows themselves.
    """

    subject_id: str
    adjacency: np.ndarray
    label: int
    group: int

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInput(f"adjacency must be square, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInput("adjacency contains non-finite entries")
        if not np.allclose(a, a.T, atol=1e-9):
            raise InvalidInput("adjacency is not symmetric within 1e-9")
        if not np.allclose(np.diag(a), 1.0, atol=1e-9):
            raise InvalidInput("adjacency diagonal must be 1")
        if a.min() < -1.0 - 1e-9 or a.max() > 1.0 + 1e-9:
            raise InvalidInput("adjacency entries must lie in [-1, 1]")
        self.adjacency = a

    @property
    def node_count(self):
        return self.adjacency.shape[0]

    @property
    def node_features(self):
        """Row i is node i's feature vector (its adjacency row)."""
        return self.adjacency.copy()


@dataclass
class Cohort:
    """All subjects of one dataset, sharing a common node set."""

    graphs: list
    class_names: list
    group_count: int
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        if not self.graphs:
            raise InvalidInput("cohort has no subjects")
        n = self.graphs[0].node_count
        for g in self.graphs:
            if g.node_count != n:
                raise ShapeMismatch(
                    f"subject {g.subject_id} has {g.node_count} nodes, expected {n}"
                )
            if not 0 <= g.label < len(self.class_names):
                raise InvalidInput(f"subject {g.subject_id} has label {g.label}")
            if not 0 <= g.group < self.group_count:
                raise InvalidInput(f"subject {g.subject_id} has group {g.group}")

    @property
    def node_count(self):
        return self.graphs[0].node_count

    @property
    def size(self):
        return len(self.graphs)

    @property
    def labels(self):
        return np.array([g.label for g in self.graphs], dtype=np.int64)

    @property
    def groups(self):
        return np.array([g.group for g in self.graphs], dtype=np.int64)

    def subset(self, indices):
        """A new cohort holding the selected subjects (shared graph objects)."""
        return Cohort(
            graphs=[self.graphs[i] for i in indices],
            class_names=list(self.class_names),
            group_count=self.group_count,
        )
