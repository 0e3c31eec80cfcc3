"""CLI entry point for causal-flows."""

from __future__ import annotations

import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import click
import numpy as np

from src.benchmark.results import summarize, summarize_sweep
from src.benchmark.runner import run_benchmark
from src.benchmark.sweep import run_sweep
from src.config import RunConfig, resolve_run_config
from src.datagen.export import export_dataset
from src.datagen.generators import generate
from src.datasets import load_csv
from src.discovery.direction import group_direction, likelihood_ratio_bivariate
from src.discovery.ordering import ordering_search
from src.errors import ConfigurationError, FlowError
from src.flows.model import FlowModel
from src.flows.ordering import CausalOrdering
from src.flows.serialization import load_model, save_model
from src.models import (
    CounterfactualQuery,
    Family,
    InterventionQuery,
    NoiseKind,
    config_digest,
)
from src.queries.counterfactuals import counterfactual
from src.queries.interventions import intervene
from src.reporting.console import (
    console,
    export_csv,
    print_benchmark,
    print_counterfactual,
    print_direction,
    print_intervention,
    print_ordering,
    print_sweep,
)
from src.reporting.report import Report, write_report
from src.training.fit import fit_flow

logger = logging.getLogger(__name__)

PROG_NAME = "causal-flows"


# ---- shared plumbing ---------------------------------------------------------


def _set(target: dict, dotted: str, value: Any) -> None:
    if value is None or value == ():
        return
    *parents, leaf = dotted.split(".")
    for key in parents:
        target = target.setdefault(key, {})
    target[leaf] = value


def _resolve(params: dict[str, Any], mapping: dict[str, str]) -> RunConfig:
    """Merge flags into the config; ``mapping`` maps flag names to config keys."""
    overrides: dict[str, Any] = {}
    for flag, key in mapping.items():
        _set(overrides, key, params.get(flag))
    return resolve_run_config(params.get("config_path"), overrides)


_COMMON_OPTIONS = (
    click.option("--config", "-c", "config_path", default=None, help="YAML or JSON run config"),
    click.option("--seed", type=click.IntRange(min=0), default=None, help="Root seed (default: drawn and recorded)"),
    click.option("--out", "-o", default=None, help="Output path"),
    click.option("--workers", "-w", type=click.IntRange(min=1), default=None, help="Worker processes"),
)


def _apply(options, func):
    for option in reversed(options):
        func = option(func)
    return func


def _common_options(func):
    return _apply(_COMMON_OPTIONS, func)


_BASE_FLAGS = {"seed": "seed", "out": "out", "workers": "workers"}


def _emit(ctx: click.Context, command: str, run: RunConfig, digest: str | None, results: dict, started: float) -> None:
    report = Report(
        command=command,
        argv=list(ctx.obj.get("argv", [])),
        seed=run.seed,
        config=run.echo(),
        config_digest=digest,
        results=results,
        wall_clock=time.perf_counter() - started,
    )
    report_path = run.out if command not in ("simulate", "benchmark", "sweep") else None
    write_report(report, report_path, ctx.obj.get("stdout") or sys.stdout)


def _load_data(run: RunConfig) -> np.ndarray:
    if not run.data:
        raise ConfigurationError("no dataset given (use --data or 'data' in the config)")
    matrix, names = load_csv(run.data)
    logger.info("loaded %s: %d rows, columns %s", run.data, matrix.shape[0], names)
    return matrix


def _model_for_query(run: RunConfig) -> tuple[FlowModel, dict]:
    """Load ``--model`` or fit a flow on ``--data`` with ``--ordering``."""
    if run.model:
        model = load_model(run.model)
        return model, {"source": str(run.model), "ordering": model.ordering.labels()}
    matrix = _load_data(run)
    ordering = (
        CausalOrdering.parse(run.ordering)
        if run.ordering
        else CausalOrdering.identity(matrix.shape[1])
    )
    result = fit_flow(matrix, ordering, run.train)
    if run.save_model:
        save_model(result.model, run.save_model)
        console.print(f"[green]Model saved to {run.save_model}[/green]")
    meta = {
        "source": "fit",
        "ordering": ordering.labels(),
        "test_loglik": result.test_loglik,
        "n_train": result.n_train,
        "n_test": result.n_test,
    }
    return result.model, meta


def _target_index(run: RunConfig) -> tuple[int, float]:
    target, value = run.query["target"], run.query["value"]
    if target is None or value is None:
        raise ConfigurationError("--target and --value are required")
    return int(target) - 1, float(value)


# ---- commands ----------------------------------------------------------------


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging")
@click.pass_context
def cli(ctx: click.Context, verbose: bool) -> None:
    """causal-flows: causal discovery and inference with autoregressive flows."""
    level = logging.DEBUG if verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(name)s %(levelname)s: %(message)s")
    ctx.ensure_object(dict)


@cli.command()
@_common_options
@click.option("--data", "-d", default=None, help="CSV with two columns (or two blocks)")
@click.option("--split-at", type=click.IntRange(min=1), default=None, help="Test columns 1..K against the rest")
@click.option("--threshold", type=click.FloatRange(min=0), default=None, help="Dead band for the decision")
@click.option("--additive-only/--affine", default=None, help="Additive transformers only")
@click.pass_context
def discover(ctx: click.Context, **params) -> None:
    """Decide the causal direction between x1 and x2 by likelihood ratio."""
    started = time.perf_counter()
    run = _resolve(
        params,
        {
            **_BASE_FLAGS,
            "data": "data",
            "threshold": "train.decision_threshold",
            "additive_only": "train.additive_only",
        },
    )
    matrix = _load_data(run)
    split_at = params.get("split_at")
    if split_at is not None:
        if split_at >= matrix.shape[1]:
            raise ConfigurationError(f"--split-at {split_at} leaves no columns for the second block")
        report = group_direction(matrix[:, :split_at], matrix[:, split_at:], run.train)
    else:
        report = likelihood_ratio_bivariate(matrix, run.train)
    print_direction(report)
    _emit(ctx, "discover", run, run.train.digest(), report.to_dict(), started)


@cli.command()
@_common_options
@click.option("--data", "-d", default=None, help="CSV dataset")
@click.option("--max-d", type=click.IntRange(min=2), default=None, help="Largest d searched exhaustively")
@click.pass_context
def order(ctx: click.Context, **params) -> None:
    """Rank every causal ordering by held-out log-likelihood."""
    started = time.perf_counter()
    run = _resolve(params, {**_BASE_FLAGS, "data": "data", "max_d": "max_d"})
    report = ordering_search(_load_data(run), run.train, max_d=run.max_d)
    print_ordering(report)
    _emit(ctx, "order", run, run.train.digest(), report.to_dict(), started)


_QUERY_FLAGS = {
    **_BASE_FLAGS,
    "data": "data",
    "model": "model",
    "save_model": "save_model",
    "ordering": "ordering",
    "target": "query.target",
    "value": "query.value",
}


_QUERY_OPTIONS = (
    click.option("--data", "-d", default=None, help="CSV dataset to fit on"),
    click.option("--model", "-m", default=None, help="Saved model JSON (skips fitting)"),
    click.option("--save-model", default=None, help="Write the fitted model JSON here"),
    click.option("--ordering", default=None, help="Causal ordering as 1-based labels, cause first (e.g. 2,1,3)"),
    click.option("--target", type=click.IntRange(min=1), default=None, help="Variable to set (1-based)"),
    click.option("--value", type=float, default=None, help="Value in original data units"),
)


def _query_options(func):
    return _apply(_QUERY_OPTIONS, func)


@cli.command("intervene")
@_common_options
@_query_options
@click.option("--n-samples", type=click.IntRange(min=1), default=None, help="Monte Carlo samples")
@click.option("--mode", type=click.Choice(["sequential", "parallel"]), default=None)
@click.pass_context
def intervene_cmd(ctx: click.Context, **params) -> None:
    """Sample from do(x_target = value)."""
    started = time.perf_counter()
    run = _resolve(
        params, {**_QUERY_FLAGS, "n_samples": "query.n_samples", "mode": "query.mode"}
    )
    target, value = _target_index(run)
    model, meta = _model_for_query(run)
    result = intervene(
        model,
        InterventionQuery(target, value, run.query["n_samples"], run.mode, run.seed),
    )
    print_intervention(result)
    _emit(ctx, "intervene", run, run.train.digest(), {**result.to_dict(), "model": meta}, started)


def _parse_obs(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"cannot parse {text!r}", param_hint="--obs") from None


@cli.command("counterfactual")
@_common_options
@_query_options
@click.option("--obs", default=None, help="Observed vector, comma-separated, original units")
@click.pass_context
def counterfactual_cmd(ctx: click.Context, **params) -> None:
    """What x_obs would have been had x_target been value."""
    started = time.perf_counter()
    params["obs"] = _parse_obs(params.get("obs"))
    run = _resolve(params, {**_QUERY_FLAGS, "obs": "query.obs"})
    target, value = _target_index(run)
    if run.query["obs"] is None:
        raise ConfigurationError("--obs is required")
    model, meta = _model_for_query(run)
    x_obs = tuple(run.query["obs"])
    x_cf = counterfactual(model, CounterfactualQuery(x_obs, target, value))
    print_counterfactual(np.asarray(x_obs), x_cf, target, value)
    results = {
        "target": f"x{target + 1}",
        "value": value,
        "x_obs": list(x_obs),
        "x_counterfactual": x_cf.tolist(),
        "model": meta,
    }
    _emit(ctx, "counterfactual", run, run.train.digest(), results, started)


@cli.command()
@_common_options
@click.option("--family", type=click.Choice([f.value for f in Family]), default=None)
@click.option("--n", "n", type=click.IntRange(min=1), default=None, help="Number of samples")
@click.option("--coeff", type=float, default=None, help="Mechanism coefficient")
@click.option("--noise", type=click.Choice([k.value for k in NoiseKind]), default=None)
@click.option("--flip/--no-flip", default=None, help="Swap cause and effect columns")
@click.pass_context
def simulate(ctx: click.Context, **params) -> None:
    """Draw a synthetic dataset; writes the CSV and a ground-truth sidecar."""
    started = time.perf_counter()
    run = _resolve(
        params,
        {
            **_BASE_FLAGS,
            "family": "simulate.family",
            "n": "simulate.n",
            "coeff": "simulate.coeff",
            "noise": "simulate.noise_kind",
            "flip": "simulate.flip_direction",
        },
    )
    if not run.out:
        raise ConfigurationError("--out is required for simulate")
    spec = run.synthetic_spec()
    dataset = generate(spec)
    csv_path, sidecar = export_dataset(dataset, run.out)
    results = {
        "data": str(csv_path),
        "truth": str(sidecar),
        "n": int(dataset.data.shape[0]),
        "d": int(dataset.data.shape[1]),
        **dataset.truth_dict(),
    }
    _emit(ctx, "simulate", run, config_digest(spec.to_dict()), results, started)


@cli.command()
@_common_options
@click.option("--family", "families", multiple=True, type=click.Choice([f.value for f in Family]))
@click.option("--n", "sizes", multiple=True, type=click.IntRange(min=10), help="Sample size (repeatable)")
@click.option("--reps", type=click.IntRange(min=1), default=None, help="Repetitions per cell")
@click.option("--noise", type=click.Choice([k.value for k in NoiseKind]), default=None)
@click.option("--additive-only/--affine", default=None, help="Additive transformers only")
@click.option("--progress/--no-progress", default=True, help="Show a progress bar")
@click.pass_context
def benchmark(ctx: click.Context, **params) -> None:
    """Run synthetic direction-test grids; writes per-repetition CSVs."""
    started = time.perf_counter()
    params["families"] = list(params["families"]) or None
    params["sizes"] = list(params["sizes"]) or None
    run = _resolve(
        params,
        {
            **_BASE_FLAGS,
            "families": "benchmark.families",
            "sizes": "benchmark.sample_sizes",
            "reps": "benchmark.reps",
            "noise": "benchmark.noise_kind",
            "additive_only": "train.additive_only",
        },
    )
    grid = run.benchmark_grid()
    rows = run_benchmark(
        grid,
        run.train,
        base_seed=run.seed,
        workers=run.workers,
        show_progress=params["progress"],
    )
    summary = summarize(rows)
    print_benchmark(summary)

    outputs: dict[str, str | None] = {"rows": None, "accuracy_csv": None, "curves_csv": None}
    if run.out:
        out = Path(run.out)
        outputs["rows"] = str(export_csv(summary.rows, out))
        outputs["accuracy_csv"] = str(export_csv(summary.accuracy, out.with_suffix(".accuracy.csv")))
        outputs["curves_csv"] = str(export_csv(summary.curves, out.with_suffix(".curves.csv")))
    results = {
        **outputs,
        "n_rows": len(summary.rows),
        "overall_accuracy": summary.overall_accuracy,
        "accuracy": summary.accuracy.to_dict(orient="records"),
    }
    digest = config_digest({"train": run.train.to_dict() | {"n_jobs": 1}, "benchmark": grid.to_dict()})
    _emit(ctx, "benchmark", run, digest, results, started)


@cli.command()
@_common_options
@click.option("--n", "sizes", multiple=True, type=click.IntRange(min=10), help="Training sample size (repeatable)")
@click.option("--reps", type=click.IntRange(min=1), default=None, help="Repetitions per sample size")
@click.option("--value", "values", multiple=True, type=float, help="Intervention value alpha (repeatable)")
@click.option("--n-samples", type=click.IntRange(min=1), default=None, help="Monte Carlo samples per expectation")
@click.option("--mode", type=click.Choice(["sequential", "parallel"]), default=None)
@click.option("--progress/--no-progress", default=True, help="Show a progress bar")
@click.pass_context
def sweep(ctx: click.Context, **params) -> None:
    """Score interventions and counterfactuals on the 4-variable SEM over a value grid."""
    started = time.perf_counter()
    params["sizes"] = list(params["sizes"]) or None
    params["values"] = list(params["values"]) or None
    run = _resolve(
        params,
        {
            **_BASE_FLAGS,
            "sizes": "sweep.sample_sizes",
            "reps": "sweep.reps",
            "values": "sweep.values",
            "n_samples": "sweep.n_samples",
            "mode": "sweep.mode",
        },
    )
    grid = run.query_sweep()
    rows = run_sweep(
        grid,
        run.train,
        base_seed=run.seed,
        workers=run.workers,
        show_progress=params["progress"],
    )
    summary = summarize_sweep(rows)
    print_sweep(summary)

    outputs: dict[str, str | None] = {"rows": None, "mse_csv": None}
    if run.out:
        out = Path(run.out)
        outputs["rows"] = str(export_csv(summary.rows, out))
        outputs["mse_csv"] = str(export_csv(summary.mse, out.with_suffix(".mse.csv")))
    results = {
        **outputs,
        "n_rows": len(summary.rows),
        "worst_mse": summary.worst_mse,
        "mse": summary.mse.to_dict(orient="records"),
    }
    digest = config_digest({"train": run.train.to_dict() | {"n_jobs": 1}, "sweep": grid.to_dict()})
    _emit(ctx, "sweep", run, digest, results, started)


# ---- entry points ------------------------------------------------------------


def _one_line(text: str) -> str:
    return " ".join(str(text).split())


def run_cli(argv: Sequence[str] | None = None, *, stdout=None) -> int:
    """Run the CLI and return its exit code.

    0 on success, 1 on usage or configuration errors, 2 on data or numeric
    errors. Failures print one ``error:<kind>: <message>`` line on stderr.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        rc = cli.main(
            args=argv,
            prog_name=PROG_NAME,
            standalone_mode=False,
            obj={"argv": argv, "stdout": stdout},
        )
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        click.echo(f"error:usage: {_one_line(exc.format_message())}", err=True)
        return 1
    except click.ClickException as exc:
        click.echo(f"error:usage: {_one_line(exc.format_message())}", err=True)
        return 1
    except click.Abort:
        click.echo("error:usage: aborted", err=True)
        return 1
    except FlowError as exc:
        click.echo(f"error:{exc.kind}: {_one_line(exc)}", err=True)
        return exc.exit_code
    except OSError as exc:
        click.echo(f"error:io: {_one_line(exc)}", err=True)
        return 2
    return rc if isinstance(rc, int) else 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
