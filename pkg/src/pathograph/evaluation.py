"""Stratified fold planning and classification metrics."""

from dataclasses import dataclass, field

import numpy as np

from .errors import AucUndefined, InvalidInput
from .rng import substream


def stratified_fold_assignment(labels, folds, rng):
    """Per-sample fold index: seeded shuffle within class, then round-robin."""
    labels = np.asarray(labels, dtype=np.int64)
    fold_of = np.empty(labels.size, dtype=np.int64)
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size < folds:
            raise InvalidInput(
                f"class {cls} has {members.size} samples, fewer than {folds} folds"
            )
        members = members[rng.permutation(members.size)]
        fold_of[members] = np.arange(members.size) % folds
    return fold_of


@dataclass
class FoldPlan:
    """Test folds plus seeded 70/10/20 train/val/test roles per fold."""

    fold_of: np.ndarray
    folds: int
    seed: int
    labels: np.ndarray = None

    def roles(self, fold):
        """(train, val, test) index arrays for one fold."""
        test = np.flatnonzero(self.fold_of == fold)
        rest = np.flatnonzero(self.fold_of != fold)
        rng = substream(self.seed, f"fold-roles-{fold}")
        # Validation is 1/8 of the non-test split (10% of the cohort),
        # stratified per class.
        labels = self.labels[rest]
        val_sel = np.zeros(rest.size, dtype=bool)
        for cls in np.unique(labels):
            members = np.flatnonzero(labels == cls)
            members = members[rng.permutation(members.size)]
            n_val = max(1, int(round(members.size / 8.0)))
            val_sel[members[:n_val]] = True
        return rest[~val_sel], rest[val_sel], test


def stratified_folds(labels, folds, seed):
    """Stratified fold plan; per-class fold counts differ by at most 1."""
    labels = np.asarray(labels, dtype=np.int64)
    rng = substream(seed, "folds")
    fold_of = stratified_fold_assignment(labels, folds, rng)
    return FoldPlan(fold_of=fold_of, folds=folds, seed=seed, labels=labels)


def _binary_auc(truth, scores):
    """Mann-Whitney statistic with 0.5 credit for tied scores."""
    pos = scores[truth]
    neg = scores[~truth]
    if pos.size == 0 or neg.size == 0:
        return None
    greater = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (greater + 0.5 * ties) / (pos.size * neg.size)


@dataclass
class MetricsEntry:
    acc: float
    auc: float
    macro_f1: float
    warnings: list = field(default_factory=list)


def compute_metrics(true_labels, predicted_labels, class_scores):
    """ACC, one-vs-rest AUC and macro-F1 for one evaluation split."""
    truth = np.asarray(true_labels, dtype=np.int64)
    pred = np.asarray(predicted_labels, dtype=np.int64)
    scores = np.asarray(class_scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != truth.size:
        raise InvalidInput("class_scores must be (samples x classes)")
    if not np.allclose(scores.sum(axis=1), 1.0, atol=1e-6):
        raise InvalidInput("score rows must sum to 1")
    n_classes = scores.shape[1]

    acc = float(np.mean(pred == truth))

    # Macro-F1 over all classes; classes absent from truth and prediction
    # contribute F1 = 0 and stay in the average.
    f1s = []
    for cls in range(n_classes):
        tp = int(np.sum((pred == cls) & (truth == cls)))
        fp = int(np.sum((pred == cls) & (truth != cls)))
        fn = int(np.sum((pred != cls) & (truth == cls)))
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    macro_f1 = float(np.mean(f1s))

    warnings = []
    if n_classes == 2:
        auc = _binary_auc(truth == 1, scores[:, 1])
        aucs = [] if auc is None else [auc]
        if auc is None:
            warnings.append("AUC skipped: one class absent from truth")
    else:
        aucs = []
        for cls in range(n_classes):
            auc = _binary_auc(truth == cls, scores[:, cls])
            if auc is None:
                warnings.append(f"AUC skipped for class {cls}: no positives or negatives")
            else:
                aucs.append(auc)
    if not aucs:
        raise AucUndefined("AUC undefined for every class")
    return MetricsEntry(
        acc=acc, auc=float(np.mean(aucs)), macro_f1=macro_f1, warnings=warnings
    )


@dataclass
class MetricsReport:
    """Per-fold metrics with mean/std aggregates and efficiency counters."""

    entries: list
    parameter_count: int = 0
    mean_epoch_seconds: float = 0.0
    peak_bytes: int = 0
    extras: dict = field(default_factory=dict)

    def _agg(self, attr):
        vals = np.array([getattr(e, attr) for e in self.entries])
        return float(vals.mean()), float(vals.std())

    @property
    def acc(self):
        return self._agg("acc")

    @property
    def auc(self):
        return self._agg("auc")

    @property
    def macro_f1(self):
        return self._agg("macro_f1")

    def to_json(self):
        acc_m, acc_s = self.acc
        auc_m, auc_s = self.auc
        f1_m, f1_s = self.macro_f1
        return {
            "folds": [
                {"acc": e.acc, "auc": e.auc, "macro_f1": e.macro_f1, "warnings": e.warnings}
                for e in self.entries
            ],
            "acc": {"mean": acc_m, "std": acc_s},
            "auc": {"mean": auc_m, "std": auc_s},
            "macro_f1": {"mean": f1_m, "std": f1_s},
            "efficiency": {
                "parameter_count": int(self.parameter_count),
                "mean_epoch_seconds": float(self.mean_epoch_seconds),
                "peak_bytes": int(self.peak_bytes),
            },
            **self.extras,
        }
