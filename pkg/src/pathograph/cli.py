"""Batch command-line front end.

Exit codes: 0 success, 2 config/usage error, 3 data error, 4 numerical failure.
"""

import csv
import json
import sys
from pathlib import Path

import click

from . import errors
from .config import PROFILES, RunConfig
from .gcn import save_checkpoint
from .ingest import load_cohort, read_manifest
from .partition import partition_from_atlas, read_atlas
from .pipeline import SWEEP_PARAMETERS, run_pipeline, sweep
from .synth import SynthSpec, write_cohort

_CONFIG_ERRORS = (errors.ConfigError, errors.InvalidInput, errors.InvalidSpec)
_DATA_ERRORS = (
    errors.IoError,
    errors.ShapeMismatch,
    errors.DegenerateSignal,
    errors.UncoveredNode,
    errors.EmptyPathoGraph,
    errors.MissingPlan,
)


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    try:
        return fn()
    except _CONFIG_ERRORS as exc:
        _fail(2, exc)
    except _DATA_ERRORS as exc:
        _fail(3, exc)
    except errors.NumericalFailure as exc:
        _fail(4, exc)


def _load_inputs(manifest, config_path, profile, overrides):
    cohort = load_cohort(manifest)
    if config_path:
        cfg = RunConfig.from_file(config_path, profile=profile)
    else:
        cfg = RunConfig.from_dict({}, profile=profile)
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    partition = None
    atlas_path = read_manifest(manifest).atlas_path
    if atlas_path is not None and cfg.communities is None:
        partition = partition_from_atlas(read_atlas(atlas_path), cohort.node_count)
    return cohort, cfg, partition


def _write_reports(out_dir, report, model):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = report.to_json()
    (out_dir / "metrics.json").write_text(json.dumps(payload, indent=2) + "\n")
    patho = payload.get("patho_reports")
    if patho:
        (out_dir / "pathoscores.json").write_text(json.dumps(patho[-1], indent=2) + "\n")
    distill = payload.get("distill_report")
    if distill:
        (out_dir / "distill_report.json").write_text(json.dumps(distill, indent=2) + "\n")
    if model is not None:
        save_checkpoint(model, out_dir / "model.ckpt")


@click.group()
def main():
    """Correlation-graph pruning, feature distillation and GCN classification."""


@main.command("synth")
@click.argument("spec_path", type=click.Path())
@click.argument("out_dir", type=click.Path())
def cmd_synth(spec_path, out_dir):
    """Generate a synthetic cohort with planted ground truth."""

    def body():
        spec = SynthSpec.from_file(spec_path)
        write_cohort(spec, out_dir)
        click.echo(f"wrote cohort to {out_dir}")

    _guarded(body)


def _common_run_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None)(fn)
    fn = click.option("--profile", type=click.Choice(sorted(PROFILES)), default=None)(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), default="out")(fn)
    fn = click.option("--seed", type=int, default=None)(fn)
    fn = click.option(
        "--scope", type=click.Choice(["train_only", "full_cohort"]), default=None
    )(fn)
    fn = click.option(
        "--mode", type=click.Choice(["inductive", "transductive"]), default=None
    )(fn)
    fn = click.option("--filter/--no-filter", "filter_enabled", default=None)(fn)
    fn = click.option("--distill/--no-distill", "distill_enabled", default=None)(fn)
    return fn


def _collect_overrides(seed, scope, mode, filter_enabled, distill_enabled):
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if scope is not None:
        overrides["selection_scope"] = scope
    if mode is not None:
        overrides["distill_mode"] = mode
    if filter_enabled is not None:
        overrides["filter_enabled"] = filter_enabled
    if distill_enabled is not None:
        overrides["distill_enabled"] = distill_enabled
    return overrides


@main.command("run")
@click.argument("manifest", type=click.Path())
@_common_run_options
def cmd_run(manifest, config_path, profile, out_dir, seed, scope, mode, filter_enabled, distill_enabled):
    """Run the full pipeline and write metrics, scores and a checkpoint."""

    def body():
        overrides = _collect_overrides(seed, scope, mode, filter_enabled, distill_enabled)
        cohort, cfg, partition = _load_inputs(manifest, config_path, profile, overrides)
        report, model = run_pipeline(cohort, cfg, partition=partition)
        _write_reports(out_dir, report, model)
        acc_m, acc_s = report.acc
        click.echo(f"ACC {100 * acc_m:.2f} +/- {100 * acc_s:.2f}")

    _guarded(body)


def _parse_values(parameter, text):
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        values = [round(start + i * step, 10) for i in range(count)]
    else:
        values = [v.strip() for v in text.split(",") if v.strip()]
    out = []
    for v in values:
        if parameter in ("k", "communities"):
            out.append(int(v))
        elif parameter == "rho":
            out.append(float(v))
        else:  # layers_neurons entries look like "2x32"
            layers, neurons = str(v).lower().split("x")
            out.append((int(layers), int(neurons)))
    return out


@main.command("sweep")
@click.argument("manifest", type=click.Path())
@click.option("--param", "parameter", required=True)
@click.option("--values", "values_text", required=True)
@click.option("--jobs", type=int, default=1, envvar="PATHOGRAPH_JOBS")
@_common_run_options
def cmd_sweep(manifest, parameter, values_text, jobs, config_path, profile, out_dir, seed, scope, mode, filter_enabled, distill_enabled):
    """Sweep one hyperparameter and emit a plot-ready sweep.csv."""

    def body():
        if parameter not in SWEEP_PARAMETERS:
            _fail(2, f"unknown sweep parameter {parameter!r}")
        values = _parse_values(parameter, values_text)
        overrides = _collect_overrides(seed, scope, mode, filter_enabled, distill_enabled)
        cohort, cfg, partition = _load_inputs(manifest, config_path, profile, overrides)
        rows, _ = sweep(cohort, parameter, values, cfg, partition=partition, jobs=jobs)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        columns = [
            "parameter_value",
            "acc_mean",
            "acc_std",
            "auc_mean",
            "auc_std",
            "f1_mean",
            "f1_std",
            "params",
            "epoch_seconds",
            "peak_bytes",
        ]
        with open(out / "sweep.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns)
            writer.writeheader()
            writer.writerows(rows)
        (out / "sweep.json").write_text(json.dumps(rows, indent=2) + "\n")
        click.echo(f"wrote {len(rows)} sweep rows to {out / 'sweep.csv'}")

    _guarded(body)


@main.command("report")
@click.argument("metrics_path", type=click.Path())
def cmd_report(metrics_path):
    """Pretty-print a metrics.json file."""

    def body():
        try:
            payload = json.loads(Path(metrics_path).read_text())
        except FileNotFoundError as exc:
            raise errors.IoError(f"metrics file not found: {metrics_path}") from exc
        except json.JSONDecodeError as exc:
            raise errors.InvalidInput(f"metrics file does not parse: {exc}") from exc
        for metric in ("acc", "auc", "macro_f1"):
            entry = payload.get(metric, {})
            click.echo(
                f"{metric:>8}: {100 * entry.get('mean', 0):6.2f} "
                f"+/- {100 * entry.get('std', 0):.2f}"
            )
        eff = payload.get("efficiency", {})
        click.echo(
            f"  params: {eff.get('parameter_count', 0)}  "
            f"epoch: {eff.get('mean_epoch_seconds', 0):.4f}s  "
            f"peak: {eff.get('peak_bytes', 0)} bytes"
        )

    _guarded(body)


if __name__ == "__main__":
    main()
