"""Node-feature distillation and group-specific augmentation.

Per node, the first left singular vector of its cross-subject matrix scores
every feature dimension; the top-k (communal) and bottom-k (negligible)
dimensions are dropped.  Group-specific scores then drive log-ratio masking
probabilities and a shared Bernoulli mask per group.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, MissingPlan
from .linalg import first_left_vector
from .rng import substream

_WEIGHT_FLOOR = 1e-12


@dataclass
class CommunalScoreMatrix:
    """Row i = first left singular vector of node i's cross-subject matrix."""

    scores: np.ndarray
    zero_rows: list = field(default_factory=list)


def _score_rows(feature_list, width):
    """SVD score per node over stacked per-subject feature vectors."""
    n_nodes = feature_list[0].shape[0]
    scores = np.zeros((n_nodes, width))
    zero_rows = []
    for i in range(n_nodes):
        stacked = np.stack([x[i, :] for x in feature_list], axis=1)  # width x D
        if not np.any(stacked):
            zero_rows.append(i)
            continue
        scores[i, :] = first_left_vector(stacked)
    return scores, zero_rows


def communal_scores(feature_list):
    """Cross-subject communal score matrix for a list of node-feature matrices."""
    if len(feature_list) < 2:
        raise InvalidInput("need at least 2 subjects for cross-subject scoring")
    shapes = {x.shape for x in feature_list}
    if len(shapes) != 1:
        raise InvalidInput(f"inconsistent feature shapes: {shapes}")
    width = feature_list[0].shape[1]
    scores, zero_rows = _score_rows(feature_list, width)
    return CommunalScoreMatrix(scores=scores, zero_rows=zero_rows)


def ranked_drop_indices(score_row, k):
    """(top-k, bottom-k) indices by |score|, ties to the lower index, disjoint."""
    a = np.abs(score_row)
    n = a.size
    order_desc = np.lexsort((np.arange(n), -a))
    top = order_desc[:k]
    in_top = np.zeros(n, dtype=bool)
    in_top[top] = True
    order_asc = np.lexsort((np.arange(n), a))
    bottom = np.array([j for j in order_asc if not in_top[j]][:k], dtype=np.int64)
    return np.sort(top), np.sort(bottom)


@dataclass
class DistilledCohort:
    """Reduced per-subject feature matrices plus drop provenance."""

    features: list
    dropped_top: list
    dropped_bottom: list
    kept_indices: list
    k: int

    @property
    def width(self):
        return self.features[0].shape[1]

    @property
    def node_count(self):
        return self.features[0].shape[0]

    @property
    def size(self):
        return len(self.features)


def drop_noise_features(feature_list, communal, k):
    """Drop top-k and bottom-k |score| features per node, same sets per subject."""
    n = feature_list[0].shape[1]
    if k < 0:
        raise InvalidInput("k must be nonnegative")
    if 2 * k >= n:
        raise InvalidInput(f"2k={2 * k} must be smaller than feature width {n}")
    n_nodes = feature_list[0].shape[0]
    dropped_top, dropped_bottom, kept = [], [], []
    for i in range(n_nodes):
        top, bottom = ranked_drop_indices(communal.scores[i], k)
        drop = np.zeros(n, dtype=bool)
        drop[top] = True
        drop[bottom] = True
        dropped_top.append(top)
        dropped_bottom.append(bottom)
        kept.append(np.flatnonzero(~drop))
    features = []
    for x in feature_list:
        out = np.empty((n_nodes, n - 2 * k))
        for i in range(n_nodes):
            out[i, :] = x[i, kept[i]]
        features.append(out)
    return DistilledCohort(
        features=features,
        dropped_top=dropped_top,
        dropped_bottom=dropped_bottom,
        kept_indices=kept,
        k=k,
    )


@dataclass
class GroupScorePack:
    """Per-group score matrices, each (nodes x distilled width)."""

    matrices: dict
    fitted_on: dict


def group_scores(distilled, groups, fit_subjects=None):
    """Group-specific SVD scoring on distilled features.

    ``fit_subjects`` restricts the fit to a subset of subject positions
    (training split in inductive mode); defaults to all subjects.
    """
    groups = np.asarray(groups, dtype=np.int64)
    if groups.size != distilled.size:
        raise InvalidInput("groups length must match the cohort size")
    positions = (
        np.arange(distilled.size) if fit_subjects is None else np.asarray(fit_subjects)
    )
    matrices, fitted_on = {}, {}
    for y in np.unique(groups[positions]):
        members = [int(p) for p in positions if groups[p] == y]
        if len(members) < 2:
            raise InvalidInput(f"group {y} has fewer than 2 subjects")
        feats = [distilled.features[p] for p in members]
        scores, _ = _score_rows(feats, distilled.width)
        matrices[int(y)] = scores
        fitted_on[int(y)] = members
    return GroupScorePack(matrices=matrices, fitted_on=fitted_on)


@dataclass
class AugmentationPlan:
    """Weights, masking probabilities and the shared Bernoulli mask of a group."""

    group: int
    weights: np.ndarray
    w_max: float
    lambda_w: float
    probabilities: np.ndarray
    mask: np.ndarray
    rho: float
    p_t: float
    seed: int


def probabilities_from_weights(weights, rho, p_t):
    """Log-ratio masking probabilities for a weight vector, clamped to [0, p_t]."""
    weights = np.maximum(np.asarray(weights, dtype=np.float64), _WEIGHT_FLOOR)
    w_max = float(weights.max())
    lambda_w = float(weights.mean())
    log_span = np.log(w_max) - np.log(lambda_w)
    # Near-uniform weights make the span pure roundoff noise; treat as flat.
    if log_span <= 1e-9:
        return np.zeros_like(weights), w_max, lambda_w
    ratio = (np.log(w_max) - np.log(weights)) / log_span
    return np.clip(rho * ratio, 0.0, p_t), w_max, lambda_w


def masking_probabilities(distilled, pack, group, rho, p_t, seed=0, subjects=None):
    """Log-ratio masking probabilities and sampled mask for one group.

    Weights average |feature| * |group score| over the group's subjects and
    nodes, floored at 1e-12 before logarithms; probabilities are clamped to
    [0, p_t].
    """
    if rho <= 0:
        raise InvalidInput("rho must be positive")
    if not 0 < p_t < 1:
        raise InvalidInput("p_t must lie in (0, 1)")
    group = int(group)
    if group not in pack.matrices:
        raise MissingPlan(f"no score matrix for group {group}")
    members = pack.fitted_on[group] if subjects is None else list(subjects)
    score_abs = np.abs(pack.matrices[group])
    acc = np.zeros(distilled.width)
    for d in members:
        acc += np.mean(np.abs(distilled.features[d]) * score_abs, axis=0)
    weights = np.maximum(acc / len(members), _WEIGHT_FLOOR)
    probs, w_max, lambda_w = probabilities_from_weights(weights, rho, p_t)

    rng = substream(seed, f"mask-group-{group}")
    mask = (rng.random(distilled.width) >= probs).astype(np.float64)
    return AugmentationPlan(
        group=group,
        weights=weights,
        w_max=w_max,
        lambda_w=lambda_w,
        probabilities=probs,
        mask=mask,
        rho=rho,
        p_t=p_t,
        seed=seed,
    )


def apply_masks(distilled, plans, groups, mode="inductive", train_subjects=None):
    """Elementwise group-mask application; returns enhanced feature matrices.

    transductive: every subject is masked by its group's mask.
    inductive: only ``train_subjects`` are masked; evaluation subjects keep
    their distilled features unmasked (group treated as unknown at inference).
    """
    groups = np.asarray(groups, dtype=np.int64)
    if mode not in ("transductive", "inductive"):
        raise InvalidInput(f"unknown mode {mode!r}")
    if mode == "inductive":
        if train_subjects is None:
            raise InvalidInput("inductive mode requires train_subjects")
        to_mask = set(int(i) for i in train_subjects)
    else:
        to_mask = set(range(distilled.size))

    plan_of = {p.group: p for p in plans}
    out = []
    for d in range(distilled.size):
        x = distilled.features[d].copy()
        if d in to_mask:
            y = int(groups[d])
            if y not in plan_of:
                raise MissingPlan(f"subject {d} belongs to group {y} without a plan")
            x *= plan_of[y].mask[None, :]
        out.append(x)
    return out


def distill_report(distilled, plans, mode, seed):
    """Plot-ready JSON payload describing drops, weights and masks."""
    return {
        "k": int(distilled.k),
        "width": int(distilled.width),
        "mode": mode,
        "seed": int(seed),
        "dropped": [
            {"node": i, "top": t.tolist(), "bottom": b.tolist()}
            for i, (t, b) in enumerate(zip(distilled.dropped_top, distilled.dropped_bottom))
        ],
        "groups": [
            {
                "group": p.group,
                "weights": p.weights.tolist(),
                "probabilities": p.probabilities.tolist(),
                "mask": p.mask.astype(int).tolist(),
                "rho": p.rho,
                "p_t": p.p_t,
            }
            for p in plans
        ],
    }
