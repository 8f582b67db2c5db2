"""Cohort loading: ROI time series or precomputed adjacency, manifest-driven.

Formats:
  manifest.json  {"class_names": [...], "atlas": "path|null",
                  "subjects": [{"id", "label", "group", "path",
                                "kind": "timeseries"|"adjacency"}]}
  time-series CSV: header row of ROI names, then one row per timepoint
  adjacency CSV:   N rows of N comma-separated values, no header
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateSignal, InvalidInput, IoError, ShapeMismatch
from .types import BrainGraph, Cohort


@dataclass
class TimeSeries:
    """Raw per-ROI signal: rows are timepoints, columns are ROIs."""

    subject_id: str
    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise InvalidInput("time series must be 2-D (timepoints x nodes)")
        if d.shape[0] < 3:
            raise InvalidInput("need at least 3 timepoints")
        if not np.all(np.isfinite(d)):
            raise InvalidInput("time series contains non-finite values")
        self.data = d

    @property
    def timepoints(self):
        return self.data.shape[0]

    @property
    def node_count(self):
        return self.data.shape[1]


@dataclass
class ManifestSubject:
    id: str
    label: int
    group: int
    path: Path
    kind: str


@dataclass
class CohortManifest:
    class_names: list
    atlas_path: object
    subjects: list


def pearson_correlation(data):
    """Pearson matrix of the columns, population (1/T) normalization."""
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / data.shape[0]
    var = np.diag(cov).copy()
    zero = np.flatnonzero(var <= 0.0)
    if zero.size:
        raise DegenerateSignal(int(zero[0]))
    std = np.sqrt(var)
    corr = cov / np.outer(std, std)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def pearson_graph(ts, label=0, group=0):
    """Correlation graph of one subject's time series."""
    return BrainGraph(
        subject_id=ts.subject_id,
        adjacency=pearson_correlation(ts.data),
        label=label,
        group=group,
    )


def read_manifest(manifest_path):
    manifest_path = Path(manifest_path)
    try:
        raw = json.loads(manifest_path.read_text())
    except FileNotFoundError as exc:
        raise IoError(f"manifest not found: {manifest_path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"manifest does not parse: {exc}") from exc

    base = manifest_path.parent
    subjects = []
    seen = set()
    for entry in raw.get("subjects", []):
        sid = str(entry["id"])
        if sid in seen:
            raise InvalidInput(f"duplicate subject id {sid!r}")
        seen.add(sid)
        kind = entry["kind"]
        if kind not in ("timeseries", "adjacency"):
            raise InvalidInput(f"unknown data kind {kind!r} for subject {sid}")
        subjects.append(
            ManifestSubject(
                id=sid,
                label=int(entry["label"]),
                group=int(entry["group"]),
                path=base / entry["path"],
                kind=kind,
            )
        )
    atlas = raw.get("atlas")
    return CohortManifest(
        class_names=list(raw["class_names"]),
        atlas_path=(base / atlas) if atlas else None,
        subjects=subjects,
    )


def _read_csv_matrix(path, skip_header):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise IoError(f"data file not found: {path}") from exc
    if skip_header:
        rows = rows[1:]
    try:
        return np.array([[float(x) for x in row] for row in rows if row])
    except ValueError as exc:
        raise InvalidInput(f"non-numeric value in {path}: {exc}") from exc


def _load_subject(sub, warnings):
    if sub.kind == "timeseries":
        data = _read_csv_matrix(sub.path, skip_header=True)
        return pearson_graph(
            TimeSeries(subject_id=sub.id, data=data), label=sub.label, group=sub.group
        )
    m = _read_csv_matrix(sub.path, skip_header=False)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"adjacency for {sub.id} is not square: {m.shape}")
    asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
    if asym > 1e-6:
        warnings.append(f"subject {sub.id}: asymmetry {asym:.3g} before symmetrization")
    a = (m + m.T) / 2.0
    out_of_range = float(max(0.0, a.max() - 1.0, -1.0 - a.min()))
    if out_of_range > 1e-9:
        warnings.append(f"subject {sub.id}: entries clipped to [-1, 1] by {out_of_range:.3g}")
    a = np.clip(a, -1.0, 1.0)
    np.fill_diagonal(a, 1.0)
    return BrainGraph(subject_id=sub.id, adjacency=a, label=sub.label, group=sub.group)


def load_cohort(manifest_path):
    """Load every subject listed in the manifest into one cohort."""
    manifest = read_manifest(manifest_path)
    if not manifest.subjects:
        raise InvalidInput("manifest lists no subjects")
    warnings = []
    graphs = [_load_subject(sub, warnings) for sub in manifest.subjects]
    n = graphs[0].node_count
    for g in graphs:
        if g.node_count != n:
            raise ShapeMismatch(
                f"subject {g.subject_id} has {g.node_count} nodes, expected {n}"
            )
    group_count = int(max(g.group for g in graphs)) + 1
    return Cohort(
        graphs=graphs,
        class_names=manifest.class_names,
        group_count=group_count,
        warnings=warnings,
    )
