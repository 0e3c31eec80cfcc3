"""Rich console output. Everything goes to stderr; stdout carries the report JSON."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from src.benchmark.results import BenchmarkSummary, SweepSummary
from src.models import DirectionReport, InterventionResult, OrderingReport

console = Console(stderr=True)


def print_direction(report: DirectionReport) -> None:
    table = Table(title="Causal direction", show_header=True, header_style="bold green")
    table.add_column("Metric", style="dim")
    table.add_column("Value", justify="right")
    table.add_row("Test log-lik x1 -> x2", f"{report.loglik_forward:.4f}")
    table.add_row("Test log-lik x2 -> x1", f"{report.loglik_backward:.4f}")
    table.add_row("R", f"{report.ratio:+.4f}")
    table.add_row("Threshold", f"{report.threshold:g}")
    table.add_row("Decision", f"[bold]{report.decision.value}[/bold]")
    console.print(table)


def print_ordering(report: OrderingReport) -> None:
    table = Table(title="Orderings", show_header=True, header_style="bold magenta")
    table.add_column("#", justify="right")
    table.add_column("Ordering")
    table.add_column("Test log-lik", justify="right")
    for rank, (ordering, loglik) in enumerate(report.ranking, start=1):
        style = "bold" if rank == 1 else None
        table.add_row(str(rank), str(ordering), f"{loglik:.4f}", style=style)
    console.print(table)


def print_intervention(result: InterventionResult) -> None:
    table = Table(
        title=f"do(x{result.target + 1} = {result.value:g}), {result.mode.value}",
        show_header=True,
        header_style="bold cyan",
    )
    table.add_column("Variable")
    table.add_column("Mean", justify="right")
    table.add_column("Std. error", justify="right")
    for j, (mean, stderr) in enumerate(zip(result.mean, result.stderr)):
        table.add_row(f"x{j + 1}", f"{mean:.4f}", f"{stderr:.4f}")
    console.print(table)


def print_counterfactual(x_obs: np.ndarray, x_cf: np.ndarray, target: int, value: float) -> None:
    table = Table(
        title=f"Counterfactual x{target + 1} <- {value:g}",
        show_header=True,
        header_style="bold cyan",
    )
    table.add_column("Variable")
    table.add_column("Observed", justify="right")
    table.add_column("Counterfactual", justify="right")
    for j, (obs, cf) in enumerate(zip(x_obs, x_cf)):
        table.add_row(f"x{j + 1}", f"{obs:.4f}", f"{cf:.4f}")
    console.print(table)


def print_benchmark(summary: BenchmarkSummary) -> None:
    """Accuracy per family x N, one table per architecture."""
    console.print()
    console.rule(
        f"[bold]Benchmark: {len(summary.rows)} runs, "
        f"accuracy {summary.overall_accuracy:.1%}[/bold]",
        style="cyan",
    )
    acc = summary.accuracy
    for arch, block in acc.groupby("architecture", sort=False):
        sizes = sorted(block["N"].unique())
        table = Table(title=f"Accuracy ({arch})", show_header=True, header_style="bold green")
        table.add_column("Family")
        for n in sizes:
            table.add_column(f"N={n}", justify="right")
        for family, rows in block.groupby("family", sort=False):
            by_n = dict(zip(rows["N"], rows["accuracy"]))
            table.add_row(family, *(f"{by_n[n]:.0%}" if n in by_n else "-" for n in sizes))
        console.print(table)
    console.print()


def print_sweep(summary: SweepSummary) -> None:
    """MSE per query and response, one column per N."""
    console.print()
    console.rule(
        f"[bold]Query sweep: {len(summary.rows)} answers, worst MSE {summary.worst_mse:.4f}[/bold]",
        style="cyan",
    )
    mse = summary.mse
    sizes = sorted(mse["N"].unique())
    table = Table(title="Mean squared error", show_header=True, header_style="bold green")
    table.add_column("Query")
    table.add_column("Architecture")
    for n in sizes:
        table.add_column(f"N={n}", justify="right")
    for (query, target, response, arch), rows in mse.groupby(
        ["query", "target", "response", "architecture"], sort=False
    ):
        by_n = dict(zip(rows["N"], rows["mse"]))
        if query == "intervention":
            label = f"E[{response} | do({target})]"
        else:
            label = f"{response} had {target} changed"
        table.add_row(label, arch, *(f"{by_n[n]:.4f}" if n in by_n else "-" for n in sizes))
    console.print(table)
    console.print()


def export_csv(df: pd.DataFrame, path: str | Path) -> Path:
    """Export a DataFrame to CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False)
    console.print(f"[green]Exported {path}[/green]")
    return path
