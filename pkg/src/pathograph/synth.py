"""Synthetic cohorts with planted disease-relevant subgraphs.

A shared random factor-model correlation baseline gets a class-dependent mean
shift on intra-subgraph correlations inside the planted subgraphs, plus
per-subject symmetric noise; matrices are clipped to [-1, 1] with unit
diagonal.  The plant is emitted as ground truth for verification.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .partition import Partition
from .rng import substream
from .types import BrainGraph, Cohort

_MAX_CLIP_RATE = 0.2


@dataclass
class SynthSpec:
    subgraph_sizes: list
    planted: list
    subjects_per_class: int
    n_classes: int = 2
    signal_strength: float = 0.4
    noise_sigma: float = 0.05
    factor_rank: int = 3
    seed: int = 0
    class_names: list = field(default_factory=list)

    def __post_init__(self):
        if not self.subgraph_sizes or min(self.subgraph_sizes) < 1:
            raise InvalidSpec("subgraph_sizes must be positive")
        m = len(self.subgraph_sizes)
        if any(not 0 <= p < m for p in self.planted):
            raise InvalidSpec("planted index out of range")
        # Zero is allowed: it produces a null cohort with indistinguishable
        # classes, which calibration tests rely on.
        if not 0.0 <= self.signal_strength < 1.0:
            raise InvalidSpec("signal_strength must lie in [0, 1)")
        if self.noise_sigma < 0.0:
            raise InvalidSpec("noise_sigma must be nonnegative")
        if self.n_classes < 2:
            raise InvalidSpec("need at least 2 classes")
        if self.subjects_per_class < 2:
            raise InvalidSpec("need at least 2 subjects per class")
        if not self.class_names:
            self.class_names = [f"class{c}" for c in range(self.n_classes)]
        if len(self.class_names) != self.n_classes:
            raise InvalidSpec("class_names length must equal n_classes")

    @property
    def n_nodes(self):
        return int(sum(self.subgraph_sizes))

    def to_json(self):
        return {
            "subgraph_sizes": list(self.subgraph_sizes),
            "planted": list(self.planted),
            "subjects_per_class": self.subjects_per_class,
            "n_classes": self.n_classes,
            "signal_strength": self.signal_strength,
            "noise_sigma": self.noise_sigma,
            "factor_rank": self.factor_rank,
            "seed": self.seed,
            "class_names": list(self.class_names),
        }

    @classmethod
    def from_file(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise InvalidSpec(f"spec file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"spec does not parse: {exc}") from exc
        known = {
            "subgraph_sizes",
            "planted",
            "subjects_per_class",
            "n_classes",
            "signal_strength",
            "noise_sigma",
            "factor_rank",
            "seed",
            "class_names",
        }
        unknown = set(raw) - known
        if unknown:
            raise InvalidSpec(f"unknown spec keys: {sorted(unknown)}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise InvalidSpec(str(exc)) from exc


def spec_partition(spec):
    """The generator's own subgraph partition (contiguous blocks)."""
    assignment = np.concatenate(
        [np.full(size, i, dtype=np.int64) for i, size in enumerate(spec.subgraph_sizes)]
    )
    names = [f"SG {i + 1}" for i in range(len(spec.subgraph_sizes))]
    return Partition(subgraph_names=names, assignment=assignment)


def _class_shift(spec, cls):
    if spec.n_classes == 1:
        return 0.0
    return spec.signal_strength * (cls / (spec.n_classes - 1) - 0.5)


def generate(spec):
    """Return (cohort, ground_truth dict) for the spec; pure given the seed."""
    n = spec.n_nodes
    part = spec_partition(spec)
    base_rng = substream(spec.seed, "synth-base")
    factors = base_rng.normal(size=(n, spec.factor_rank))
    gram = factors @ factors.T
    scale = 1.0 / np.sqrt(np.diag(gram))
    baseline = (scale[:, None] * gram) * scale[None, :]
    np.fill_diagonal(baseline, 1.0)

    planted_mask = np.zeros((n, n), dtype=bool)
    for s in spec.planted:
        nodes = part.nodes_of(s)
        block = np.ix_(nodes, nodes)
        planted_mask[block] = True
    np.fill_diagonal(planted_mask, False)

    iu, ju = np.triu_indices(n, k=1)
    graphs = []
    clipped = 0
    total = 0
    for cls in range(spec.n_classes):
        shift = _class_shift(spec, cls)
        cls_rng = substream(spec.seed, f"synth-class-{cls}")
        for subject in range(spec.subjects_per_class):
            a = baseline.copy()
            a[planted_mask] += shift
            noise_upper = cls_rng.normal(0.0, spec.noise_sigma, size=iu.size)
            noise = np.zeros((n, n))
            noise[iu, ju] = noise_upper
            a = a + noise + noise.T
            clipped += int(np.sum((a[iu, ju] < -1.0) | (a[iu, ju] > 1.0)))
            total += iu.size
            a = np.clip(a, -1.0, 1.0)
            a = (a + a.T) / 2.0
            np.fill_diagonal(a, 1.0)
            graphs.append(
                BrainGraph(
                    subject_id=f"c{cls}_s{subject:03d}",
                    adjacency=a,
                    label=cls,
                    group=cls,
                )
            )
    clip_rate = clipped / total if total else 0.0
    if clip_rate > _MAX_CLIP_RATE:
        raise InvalidSpec(
            f"clip rate {clip_rate:.2%} exceeds {_MAX_CLIP_RATE:.0%}: "
            "signal_strength pushes too many entries out of range"
        )
    cohort = Cohort(
        graphs=graphs, class_names=list(spec.class_names), group_count=spec.n_classes
    )
    ground_truth = {
        "planted": sorted(int(p) for p in spec.planted),
        "signal_strength": spec.signal_strength,
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
        "clip_rate": clip_rate,
        "class_shifts": [_class_shift(spec, c) for c in range(spec.n_classes)],
        "subgraph_names": part.subgraph_names,
        "assignment": part.assignment.tolist(),
    }
    return cohort, ground_truth


def write_cohort(spec, out_dir):
    """Generate and write manifest, atlas, per-subject CSVs and ground truth."""
    cohort, ground_truth = generate(spec)
    part = spec_partition(spec)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    subjects = []
    for g in cohort.graphs:
        rel = f"{g.subject_id}.csv"
        np.savetxt(out_dir / rel, g.adjacency, fmt="%.17g", delimiter=",")
        subjects.append(
            {
                "id": g.subject_id,
                "label": int(g.label),
                "group": int(g.group),
                "path": rel,
                "kind": "adjacency",
            }
        )
    atlas = {
        "subgraphs": {
            name: part.nodes_of(i).tolist() for i, name in enumerate(part.subgraph_names)
        }
    }
    (out_dir / "atlas.json").write_text(json.dumps(atlas, indent=2) + "\n")
    manifest = {
        "class_names": list(cohort.class_names),
        "atlas": "atlas.json",
        "subjects": subjects,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (out_dir / "ground_truth.json").write_text(
        json.dumps({**ground_truth, "spec": spec.to_json()}, indent=2) + "\n"
    )
    return cohort, ground_truth
