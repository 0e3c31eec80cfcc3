"""Query sweeps: interventional and counterfactual accuracy on the 4-variable SEM.

Each (N, repetition) cell draws a dataset, fits a flow in the true
ordering and answers every configured query at every sweep value. The
truth comes from the exact SEM: closed-form expectations for
interventions and the hand-set oracle flow for counterfactuals.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable

from joblib import Parallel, delayed

from src.benchmark.runner import architecture_label, collect_with_progress, task_seed
from src.datagen.generators import generate
from src.datagen.noise import noise_variance
from src.datagen.oracles import intervention_sem_expectation, intervention_sem_flow
from src.errors import NumericError
from src.flows.ordering import CausalOrdering
from src.models import CounterfactualQuery, Family, QuerySweep, SyntheticSpec, TrainConfig
from src.queries.counterfactuals import counterfactual
from src.queries.interventions import intervention_expectation
from src.training.fit import fit_flow

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepTask:
    n: int
    repetition: int
    seed: int


def plan_sweep(sweep: QuerySweep, base_seed: int) -> list[SweepTask]:
    return [
        SweepTask(n, rep, task_seed(base_seed, Family.INTERVENTION_SEM, n, rep))
        for n in sweep.sample_sizes
        for rep in range(sweep.reps)
    ]


def _row(task, config, c1, c2, query, target, response, value, predicted, truth, error=""):
    return {
        "query": query,
        "N": task.n,
        "repetition": task.repetition,
        "architecture": architecture_label(config),
        "target": f"x{target + 1}",
        "response": f"x{response + 1}",
        "value": value,
        "predicted": predicted,
        "truth": truth,
        "sq_error": (predicted - truth) ** 2,
        "c1": c1,
        "c2": c2,
        "seed": task.seed,
        "error": error,
    }


def run_sweep_task(task: SweepTask, sweep: QuerySweep, config: TrainConfig) -> list[dict]:
    """Fit one flow and score every (query, value) against the exact SEM."""
    config = replace(config, seed=task.seed, n_jobs=1)
    spec = SyntheticSpec(
        family=Family.INTERVENTION_SEM,
        n=task.n,
        seed=task.seed,
        noise_kind=sweep.noise_kind,
        dof=sweep.dof,
        c1=sweep.c1,
        c2=sweep.c2,
    )
    dataset = generate(spec)
    c1, c2 = dataset.generating_params["c1"], dataset.generating_params["c2"]

    try:
        return _score(task, sweep, config, dataset.data, c1, c2)
    except NumericError as exc:
        logger.warning("sweep N=%d rep %d: %s", task.n, task.repetition, exc)
        return [
            _row(task, config, c1, c2, query, t, r, v, math.nan, math.nan, str(exc))
            for query, pairs in (
                ("intervention", sweep.interventions),
                ("counterfactual", sweep.counterfactuals),
            )
            for t, r in pairs
            for v in sweep.values
        ]


def _score(task, sweep, config, data, c1, c2) -> list[dict]:
    model = fit_flow(data, CausalOrdering.identity(4), config).model
    oracle = intervention_sem_flow(c1, c2)
    variance = noise_variance(sweep.noise_kind, sweep.dof)
    rows = []
    for target, response in sweep.interventions:
        for value in sweep.values:
            predicted, _ = intervention_expectation(
                model,
                target,
                value,
                response,
                n=sweep.n_samples,
                seed=task.seed,
                mode=sweep.mode,
            )
            truth = intervention_sem_expectation(c1, c2, target, response, value, variance)
            rows.append(
                _row(task, config, c1, c2, "intervention", target, response, value, predicted, truth)
            )
    for target, response in sweep.counterfactuals:
        for value in sweep.values:
            q = CounterfactualQuery(sweep.x_obs, target, value)
            predicted = float(counterfactual(model, q)[response])
            truth = float(counterfactual(oracle, q)[response])
            rows.append(
                _row(
                    task, config, c1, c2, "counterfactual", target, response, value, predicted, truth
                )
            )
    return rows


def _describe(rows: list[dict]) -> str:
    head = f"N={rows[0]['N']} rep {rows[0]['repetition']}"
    if rows[0]["error"]:
        return f"  [red]✗ ERROR[/red]  {head}"
    worst = max(r["sq_error"] for r in rows)
    return f"  [green]✓[/green]  {head}  max sq. error {worst:.4f}"


def run_sweep(
    sweep: QuerySweep,
    config: TrainConfig,
    *,
    base_seed: int = 0,
    workers: int = 1,
    show_progress: bool = True,
) -> list[dict]:
    """Run every (N, repetition) cell; one row per query, pair and value, in task order."""
    tasks = plan_sweep(sweep, base_seed)
    jobs: Iterable[list[dict]] = Parallel(n_jobs=workers, return_as="generator")(
        delayed(run_sweep_task)(task, sweep, config) for task in tasks
    )
    if show_progress:
        batches = collect_with_progress(
            jobs,
            len(tasks),
            _describe,
            title="Running query sweep",
        )
    else:
        batches = list(jobs)
    return [row for batch in batches for row in batch]
