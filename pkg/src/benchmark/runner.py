"""Benchmark runner: drives synthetic direction tests and scores the decisions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Any, Callable, Iterable

import numpy as np
from joblib import Parallel, delayed
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn

from src.datagen.generators import generate
from src.discovery.direction import group_direction, likelihood_ratio_bivariate
from src.errors import NumericError
from src.models import BenchmarkGrid, Decision, Family, SyntheticSpec, TrainConfig
from src.reporting.console import console

logger = logging.getLogger(__name__)

_FAMILY_CODES = {family: code for code, family in enumerate(Family)}


@dataclass(frozen=True)
class BenchmarkTask:
    family: Family
    n: int
    repetition: int
    architecture_index: int
    seed: int
    flip: bool


def task_seed(base_seed: int, family: Family, n: int, repetition: int) -> int:
    """Seed of one repetition; shared by every architecture of a sweep."""
    sequence = np.random.SeedSequence([base_seed, _FAMILY_CODES[family], n, repetition])
    return int(sequence.generate_state(1)[0])


def plan_tasks(grid: BenchmarkGrid, base_seed: int) -> list[BenchmarkTask]:
    """Every (family, N, repetition, architecture) cell in deterministic order."""
    tasks = []
    n_arch = max(1, len(grid.architectures))
    for family in grid.families:
        for n in grid.sample_sizes:
            for rep in range(grid.reps):
                seed = task_seed(base_seed, family, n, rep)
                flip = bool(
                    grid.random_flip
                    and np.random.default_rng([base_seed, _FAMILY_CODES[family], n, rep, 1]).integers(2)
                )
                for a in range(n_arch):
                    tasks.append(BenchmarkTask(family, n, rep, a, seed, flip))
    return tasks


def architecture_label(config: TrainConfig) -> str:
    arch = config.architecture
    hidden = "x".join(str(h) for h in arch.hidden_dims) or "0"
    return f"L{arch.n_layers_flow}-h{hidden}"


def task_config(task: BenchmarkTask, grid: BenchmarkGrid, config: TrainConfig) -> TrainConfig:
    config = replace(config, seed=task.seed, n_jobs=1)
    if grid.architectures:
        config = replace(
            config,
            architecture=grid.architectures[task.architecture_index],
            alternative_architectures=(),
        )
    return config


def run_task(task: BenchmarkTask, grid: BenchmarkGrid, config: TrainConfig) -> dict:
    """Generate one dataset, test its direction and score the decision."""
    config = task_config(task, grid, config)
    spec = SyntheticSpec(
        family=task.family,
        n=task.n,
        seed=task.seed,
        coeff=grid.coeff,
        noise_kind=grid.noise_kind,
        dof=grid.dof,
        flip_direction=task.flip,
    )
    dataset = generate(spec)
    row = {
        "family": task.family.value,
        "N": task.n,
        "repetition": task.repetition,
        "architecture": architecture_label(config),
        "additive_only": config.additive_only,
        "noise_kind": grid.noise_kind.value,
        "seed": task.seed,
        "flipped": task.flip,
        "true_decision": dataset.true_decision.value,
    }

    # ---- run the direction test -------------------------------------------
    try:
        if dataset.blocks is not None:
            half = dataset.data.shape[1] // 2
            report = group_direction(dataset.data[:, :half], dataset.data[:, half:], config)
        else:
            report = likelihood_ratio_bivariate(dataset.data, config)
    except NumericError as exc:
        logger.warning("%s N=%d rep %d: %s", task.family.value, task.n, task.repetition, exc)
        row.update(
            decision="error",
            R=math.nan,
            confidence=math.nan,
            loglik_forward=math.nan,
            loglik_backward=math.nan,
            correct=False,
            error=str(exc),
        )
        return row

    row.update(
        decision=report.decision.value,
        R=report.ratio,
        confidence=report.confidence,
        loglik_forward=report.loglik_forward,
        loglik_backward=report.loglik_backward,
        correct=report.decision is dataset.true_decision,
        error="",
    )
    return row


def _status_icon(row: dict) -> str:
    if row["error"]:
        return "[red]✗ ERROR[/red]"
    if row["decision"] == Decision.UNDECIDED.value:
        return "[yellow]? UNDECIDED[/yellow]"
    return "[green]✓[/green]" if row["correct"] else "[red]✗[/red]"


def run_benchmark(
    grid: BenchmarkGrid,
    config: TrainConfig,
    *,
    base_seed: int = 0,
    workers: int = 1,
    show_progress: bool = True,
) -> list[dict]:
    """Run every cell of ``grid`` and return one row per task.

    Args:
        grid: Families, sample sizes, repetitions and architectures.
        config: Training config shared by every fit; its seed is replaced
            per repetition.
        base_seed: Root of all per-repetition seeds.
        workers: Size of the joblib process pool.
        show_progress: Show a progress bar on stderr.

    Rows come back in task order regardless of completion order.
    """
    tasks = plan_tasks(grid, base_seed)
    jobs: Iterable[dict] = Parallel(n_jobs=workers, return_as="generator")(
        delayed(run_task)(task, grid, config) for task in tasks
    )
    if not show_progress:
        return list(jobs)
    return collect_with_progress(
        jobs,
        len(tasks),
        lambda row: (
            f"  {_status_icon(row)}  {row['family']} N={row['N']} "
            f"rep {row['repetition']} {row['architecture']}"
        ),
    )


def collect_with_progress(
    jobs: Iterable,
    total: int,
    describe: Callable[[Any], str],
    title: str = "Running benchmark",
) -> list:
    """Drain ``jobs`` under a progress bar, printing one line per result."""
    results = []
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        console=console,
        transient=False,
    ) as progress:
        bar = progress.add_task(title, total=total)
        for result in jobs:
            results.append(result)
            progress.advance(bar)
            progress.console.print(describe(result))
        progress.update(bar, description="Done")
    return results
