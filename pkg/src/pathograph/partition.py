"""Node-set partitioning into named subgraphs.

Two routes: an atlas file mapping subgraph names to node indices, or spectral
clustering on the cohort-mean absolute-correlation affinity.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.cluster import KMeans

from .errors import InvalidInput, IoError, UncoveredNode
from .linalg import symmetric_eigen


@dataclass
class Partition:
    """Assignment of every node to exactly one named subgraph."""

    subgraph_names: list
    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        m = len(self.subgraph_names)
        if a.min(initial=0) < 0 or (a.size and a.max() >= m):
            raise InvalidInput("assignment index out of range")
        counts = np.bincount(a, minlength=m)
        if np.any(counts == 0):
            empty = self.subgraph_names[int(np.argmin(counts))]
            raise InvalidInput(f"subgraph {empty!r} is empty")
        self.assignment = a

    @property
    def m(self):
        return len(self.subgraph_names)

    @property
    def node_count(self):
        return self.assignment.size

    def nodes_of(self, index):
        """Node indices of one subgraph, ascending."""
        return np.flatnonzero(self.assignment == index)


@dataclass
class AtlasFile:
    """Ordered mapping subgraph name -> 0-based node indices."""

    subgraphs: dict


def read_atlas(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise IoError(f"atlas not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"atlas does not parse: {exc}") from exc
    subgraphs = {str(k): [int(i) for i in v] for k, v in raw["subgraphs"].items()}
    return AtlasFile(subgraphs=subgraphs)


def partition_from_atlas(atlas, n):
    """Partition from an atlas; overlapping nodes go to the first subgraph listed."""
    assignment = np.full(n, -1, dtype=np.int64)
    names = list(atlas.subgraphs)
    for si, name in enumerate(names):
        for node in atlas.subgraphs[name]:
            if not 0 <= node < n:
                raise InvalidInput(f"atlas index {node} out of range for n={n}")
            if assignment[node] == -1:
                assignment[node] = si
    uncovered = np.flatnonzero(assignment == -1)
    if uncovered.size:
        raise UncoveredNode(f"node {int(uncovered[0])} not covered by any subgraph")
    # Subgraphs fully shadowed by earlier ones would be empty; drop them.
    used = sorted(set(assignment.tolist()))
    if len(used) != len(names):
        remap = {old: new for new, old in enumerate(used)}
        assignment = np.array([remap[a] for a in assignment], dtype=np.int64)
        names = [names[old] for old in used]
    return Partition(subgraph_names=names, assignment=assignment)


def mean_affinity(cohort):
    """Cohort-mean |correlation| with zero diagonal."""
    acc = np.zeros((cohort.node_count, cohort.node_count))
    for g in cohort.graphs:
        acc += g.adjacency
    w = np.abs(acc / cohort.size)
    np.fill_diagonal(w, 0.0)
    return w


def partition_by_spectral_clustering(cohort, communities, seed):
    """Shared cohort partition via normalized-Laplacian spectral clustering."""
    if communities < 2:
        raise InvalidInput("need at least 2 communities")
    n = cohort.node_count
    if communities > n:
        raise InvalidInput(f"communities={communities} exceeds node count {n}")

    w = mean_affinity(cohort)
    deg = w.sum(axis=1) + 1e-12
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(n) - (inv_sqrt[:, None] * w) * inv_sqrt[None, :]
    _, vecs = symmetric_eigen(lap, communities)
    norms = np.linalg.norm(vecs, axis=1)
    norms[norms == 0.0] = 1.0
    embedding = vecs / norms[:, None]

    km = KMeans(
        n_clusters=communities,
        init="k-means++",
        n_init=100,
        max_iter=300,
        random_state=int(seed) & 0x7FFFFFFF,
    ).fit(embedding)
    labels = np.asarray(km.labels_, dtype=np.int64)

    # Relabel clusters by first occurrence so names are stable.
    remap = {}
    for lab in labels:
        if int(lab) not in remap:
            remap[int(lab)] = len(remap)
    labels = np.array([remap[int(lab)] for lab in labels], dtype=np.int64)
    names = [f"SG {i + 1}" for i in range(communities)]
    return Partition(subgraph_names=names, assignment=labels)
