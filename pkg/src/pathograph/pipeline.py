"""End-to-end driver: partition -> filter -> distill -> GCN, cross-validated.

Also hosts the hyperparameter sweep used by the CLI.
"""

from dataclasses import replace

import numpy as np

from .config import RunConfig
from .distill import (
    apply_masks,
    communal_scores,
    distill_report,
    drop_noise_features,
    group_scores,
    masking_probabilities,
)
from .errors import EmptyPathoGraph, InvalidInput
from .evaluation import MetricsReport, compute_metrics, stratified_folds
from .gcn import GcnModel, normalize_adjacency, predict, train
from .partition import partition_by_spectral_clustering
from .pathofilter import (
    FilterConfig,
    PathoGraphCohort,
    build_pathograph_cohort,
    patho_scores,
)
from .rng import substream_seed


def resolve_partition(cohort, config, partition=None):
    """Use the provided atlas partition, else spectral-cluster the cohort."""
    if partition is not None:
        return partition
    if config.communities is None:
        raise InvalidInput("no atlas partition given and communities is unset")
    return partition_by_spectral_clustering(
        cohort, config.communities, seed=substream_seed(config.seed, "kmeans")
    )


def _fit_filter(cohort, partition, config, subjects=None):
    """Patho-score report fitted on a subject subset (or the whole cohort)."""
    target = cohort if subjects is None else cohort.subset(subjects)
    cfg = FilterConfig(
        C=config.svm_c,
        gamma=config.svm_gamma,
        folds=min(config.folds, 5),
        seed=substream_seed(config.seed, "svm"),
        retrain_per_subgraph=config.retrain_per_subgraph,
        selection_scope=config.selection_scope,
    )
    return patho_scores(target, partition, cfg)


def _distill_stage(patho, config, train_idx, warnings):
    """Distilled + augmented features for all subjects; fit per distill_mode."""
    feats = patho.feature_list()
    groups = patho.groups
    transductive = config.distill_mode == "transductive"
    fit_idx = list(range(len(feats))) if transductive else [int(i) for i in train_idx]

    n_hat = feats[0].shape[1]
    k = config.k
    if 2 * k >= n_hat:
        k = max((n_hat - 1) // 2, 0)
        warnings.append(f"k reduced from {config.k} to {k} for width {n_hat}")

    communal = communal_scores([feats[i] for i in fit_idx])
    distilled = drop_noise_features(feats, communal, k)
    pack = group_scores(distilled, groups, fit_subjects=fit_idx)
    plans = [
        masking_probabilities(
            distilled,
            pack,
            y,
            rho=config.rho,
            p_t=config.p_t,
            seed=substream_seed(config.seed, "masks"),
        )
        for y in sorted(pack.matrices)
    ]
    enhanced = apply_masks(
        distilled,
        plans,
        groups,
        mode=config.distill_mode,
        train_subjects=None if transductive else fit_idx,
    )
    return enhanced, distilled, plans


def _stack(features, adjacencies, indices):
    feats = np.stack([features[i] for i in indices])
    adjs = np.stack([adjacencies[i] for i in indices])
    return feats, adjs


def run_pipeline(cohort, config=None, partition=None):
    """Cross-validated evaluation of the configured pipeline."""
    config = config or RunConfig()
    labels = cohort.labels
    plan = stratified_folds(labels, config.folds, substream_seed(config.seed, "folds"))

    shared_report = None
    if config.filter_enabled:
        part = resolve_partition(cohort, config, partition)
        if config.selection_scope == "full_cohort":
            shared_report = _fit_filter(cohort, part, config)

    entries = []
    fold_meta = []
    patho_reports = []
    warnings = []
    param_count = 0
    epoch_seconds = []
    peak_bytes = 0
    last_model = None
    for fold in range(config.folds):
        train_idx, val_idx, test_idx = plan.roles(fold)

        if config.filter_enabled:
            report = shared_report or _fit_filter(cohort, part, config, subjects=train_idx)
            patho_reports.append(report.to_json())
            try:
                patho = build_pathograph_cohort(cohort, part, report)
            except EmptyPathoGraph:
                warnings.append(f"fold {fold}: empty PathoGraph, falling back to full graph")
                patho = PathoGraphCohort.from_full(cohort)
                patho.provenance = report
        else:
            patho = PathoGraphCohort.from_full(cohort)

        if config.distill_enabled:
            enhanced, last_distilled, last_plans = _distill_stage(
                patho, config, train_idx, warnings
            )
        else:
            enhanced = patho.feature_list()
            last_distilled = last_plans = None

        norm_adjs = [normalize_adjacency(a) for a in patho.adjacencies]
        gcn_cfg = replace(config.gcn, seed=substream_seed(config.seed, f"init-fold{fold}"))
        model = GcnModel(gcn_cfg, in_features=enhanced[0].shape[1], n_classes=len(cohort.class_names))
        tr_f, tr_a = _stack(enhanced, norm_adjs, train_idx)
        va_f, va_a = _stack(enhanced, norm_adjs, val_idx)
        te_f, te_a = _stack(enhanced, norm_adjs, test_idx)
        train(model, tr_f, tr_a, labels[train_idx], val=(va_f, va_a, labels[val_idx]))
        probs = predict(model, te_f, te_a)
        entry = compute_metrics(labels[test_idx], probs.argmax(axis=1), probs)
        entries.append(entry)

        param_count = model.parameter_count()
        epoch_seconds.extend(model.epoch_times)
        peak_bytes = max(peak_bytes, model.peak_feature_bytes)
        last_model = model
        fold_meta.append(
            {
                "fold": fold,
                "retained": (
                    patho.provenance.to_json()["retained"]
                    if patho.provenance is not None
                    else None
                ),
                "node_count": int(patho.node_count),
                "feature_width": int(enhanced[0].shape[1]),
            }
        )

    report = MetricsReport(
        entries=entries,
        parameter_count=param_count,
        mean_epoch_seconds=float(np.mean(epoch_seconds)) if epoch_seconds else 0.0,
        peak_bytes=peak_bytes,
        extras={
            "fold_meta": fold_meta,
            "warnings": warnings,
            "patho_reports": patho_reports,
        },
    )
    report.extras["config"] = config.to_json()
    if last_distilled is not None:
        report.extras["distill_report"] = distill_report(
            last_distilled, last_plans, config.distill_mode, config.seed
        )
    return report, last_model


SWEEP_PARAMETERS = ("k", "rho", "communities", "layers_neurons")


def sweep(cohort, parameter, values, base_config=None, partition=None, jobs=1):
    """One pipeline run per value; shared fold seed; returns plot-ready rows."""
    base_config = base_config or RunConfig()
    if parameter not in SWEEP_PARAMETERS:
        raise InvalidInput(f"unknown sweep parameter {parameter!r}")
    if not values:
        raise InvalidInput("sweep values must be nonempty")

    def configure(value):
        if parameter == "k":
            return base_config.with_overrides(k=int(value)), partition
        if parameter == "rho":
            return base_config.with_overrides(rho=float(value)), partition
        if parameter == "communities":
            # Partition must be recomputed per value.
            return base_config.with_overrides(communities=int(value)), None
        layers, neurons = value
        gcn = replace(base_config.gcn, layers=int(layers), hidden=int(neurons))
        return base_config.with_overrides(gcn=gcn), partition

    def one(value):
        cfg, part = configure(value)
        report, _ = run_pipeline(cohort, cfg, partition=part)
        return report

    if jobs > 1:
        from joblib import Parallel, delayed

        reports = Parallel(n_jobs=jobs)(delayed(one)(v) for v in values)
    else:
        reports = [one(v) for v in values]

    rows = []
    for value, report in zip(values, reports):
        acc_m, acc_s = report.acc
        auc_m, auc_s = report.auc
        f1_m, f1_s = report.macro_f1
        rows.append(
            {
                "parameter_value": value if not isinstance(value, (list, tuple)) else "x".join(map(str, value)),
                "acc_mean": acc_m,
                "acc_std": acc_s,
                "auc_mean": auc_m,
                "auc_std": auc_s,
                "f1_mean": f1_m,
                "f1_std": f1_s,
                "params": report.parameter_count,
                "epoch_seconds": report.mean_epoch_seconds,
                "peak_bytes": report.peak_bytes,
            }
        )
    return rows, reports
