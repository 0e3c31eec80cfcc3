"""Tests for the benchmark planner, runner and summaries."""

import numpy as np
import pandas as pd
import pytest

from src.benchmark.results import (
    ROW_COLUMNS,
    SWEEP_COLUMNS,
    accuracy_table,
    decision_rate_curve,
    mse_table,
    results_to_dataframe,
    summarize,
    summarize_sweep,
    sweep_to_dataframe,
)
from src.benchmark.runner import architecture_label, plan_tasks, run_benchmark, run_task
from src.benchmark.sweep import plan_sweep, run_sweep
from src.errors import ConfigurationError
from src.models import (
    ArchitectureConfig,
    BenchmarkGrid,
    Family,
    InterventionMode,
    NoiseKind,
    QuerySweep,
    TrainConfig,
)


@pytest.fixture
def tiny_config():
    return TrainConfig(epochs=1, batch_size=16, architecture=ArchitectureConfig(1, (4,)))


def _row(family, n, rep, correct, confidence, decision="x1_causes_x2", architecture="L1-h4"):
    return {
        "family": family,
        "N": n,
        "repetition": rep,
        "architecture": architecture,
        "decision": decision,
        "R": confidence,
        "correct": correct,
        "confidence": confidence,
        "error": "",
    }


class TestGrid:
    def test_row_count(self):
        grid = BenchmarkGrid(sample_sizes=(25, 50), reps=3)
        assert grid.n_rows == 4 * 2 * 3
        assert len(plan_tasks(grid, base_seed=0)) == grid.n_rows

    def test_architectures_multiply_rows_and_share_seeds(self):
        grid = BenchmarkGrid(
            families=(Family.LINEAR,),
            sample_sizes=(30,),
            reps=2,
            architectures=(ArchitectureConfig(1, (4,)), ArchitectureConfig(2, (4,))),
        )
        tasks = plan_tasks(grid, base_seed=5)
        assert len(tasks) == grid.n_rows == 4
        assert tasks[0].seed == tasks[1].seed
        assert tasks[0].flip == tasks[1].flip
        assert tasks[0].seed != tasks[2].seed

    def test_plan_is_deterministic(self):
        grid = BenchmarkGrid(reps=4)
        assert plan_tasks(grid, 1) == plan_tasks(grid, 1)
        assert plan_tasks(grid, 1) != plan_tasks(grid, 2)

    def test_no_flip(self):
        grid = BenchmarkGrid(reps=5, random_flip=False)
        assert not any(task.flip for task in plan_tasks(grid, 0))

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"families": (Family.INTERVENTION_SEM,)},
            {"sample_sizes": (5,)},
            {"reps": 0},
            {"noise_kind": NoiseKind.STUDENT_T, "dof": 1.5},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            BenchmarkGrid(**kwargs)

    def test_dict_round_trip(self):
        grid = BenchmarkGrid(families=(Family.HIGHDIM_PAIR,), architectures=(ArchitectureConfig(3, (5, 5)),))
        assert BenchmarkGrid.from_dict(grid.to_dict()) == grid


class TestRunner:
    def test_run_task_row(self, tiny_config):
        grid = BenchmarkGrid(families=(Family.LINEAR,), sample_sizes=(30,), reps=1)
        [task] = plan_tasks(grid, base_seed=3)
        row = run_task(task, grid, tiny_config)
        assert set(ROW_COLUMNS) <= set(row)
        assert row["architecture"] == architecture_label(tiny_config) == "L1-h4"
        assert row["correct"] == (row["decision"] == row["true_decision"])
        assert row["confidence"] == pytest.approx(abs(row["R"]))
        assert row["error"] == ""

    def test_highdim_uses_blocks(self, tiny_config):
        grid = BenchmarkGrid(families=(Family.HIGHDIM_PAIR,), sample_sizes=(30,), reps=1)
        [task] = plan_tasks(grid, base_seed=0)
        row = run_task(task, grid, tiny_config)
        assert np.isfinite(row["R"])

    def test_run_benchmark(self, tiny_config):
        grid = BenchmarkGrid(
            families=(Family.LINEAR, Family.MODULATED_NOISE), sample_sizes=(20, 30), reps=2
        )
        rows = run_benchmark(grid, tiny_config, base_seed=0, show_progress=False)
        assert len(rows) == grid.n_rows
        assert [(r["family"], r["N"], r["repetition"]) for r in rows] == [
            (t.family.value, t.n, t.repetition) for t in plan_tasks(grid, 0)
        ]

    def test_progress_output_matches_plain_run(self, tiny_config):
        grid = BenchmarkGrid(families=(Family.LINEAR,), sample_sizes=(20,), reps=2)
        quiet = run_benchmark(grid, tiny_config, show_progress=False)
        shown = run_benchmark(grid, tiny_config, show_progress=True)
        assert [r["R"] for r in quiet] == [r["R"] for r in shown]


class TestSummaries:
    def test_dataframe_sorted_in_family_order(self):
        rows = [
            _row("sigmoid_nonlinear_noise", 50, 0, True, 1.0),
            _row("linear", 50, 1, True, 1.0),
            _row("linear", 25, 0, False, 1.0),
            _row("linear", 50, 0, True, 1.0),
        ]
        df = results_to_dataframe(rows)
        assert list(df.columns) == ROW_COLUMNS
        assert list(zip(df["family"], df["N"], df["repetition"])) == [
            ("linear", 25, 0),
            ("linear", 50, 0),
            ("linear", 50, 1),
            ("sigmoid_nonlinear_noise", 50, 0),
        ]

    def test_accuracy_table(self):
        rows = [
            _row("linear", 25, 0, True, 2.0),
            _row("linear", 25, 1, False, 0.0, decision="undecided"),
            _row("linear", 25, 2, False, float("nan"), decision="error"),
            _row("linear", 25, 3, True, 1.0),
        ]
        table = accuracy_table(results_to_dataframe(rows))
        [record] = table.to_dict(orient="records")
        assert record["accuracy"] == pytest.approx(0.5)
        assert record["n"] == 4
        assert record["undecided"] == 1
        assert record["errors"] == 1

    def test_decision_rate_curve(self):
        rows = [
            _row("linear", 25, 0, False, 0.5),
            _row("linear", 25, 1, True, 3.0),
            _row("linear", 25, 2, True, 2.0),
            _row("linear", 25, 3, False, 1.0),
        ]
        curve = decision_rate_curve(results_to_dataframe(rows), fractions=(0.25, 0.5, 0.75, 1.0))
        assert list(curve["n_decisions"]) == [1, 2, 3, 4]
        np.testing.assert_allclose(curve["accuracy"], [1.0, 1.0, 2 / 3, 0.5])

    def test_failed_runs_rank_last(self):
        rows = [
            _row("linear", 25, 0, False, float("nan"), decision="error"),
            _row("linear", 25, 1, True, 0.1),
        ]
        curve = decision_rate_curve(results_to_dataframe(rows), fractions=(0.5,))
        assert curve["accuracy"].iloc[0] == 1.0

    def test_summarize(self):
        rows = [_row("linear", 25, i, i % 2 == 0, float(i)) for i in range(4)]
        summary = summarize(rows)
        assert isinstance(summary.rows, pd.DataFrame)
        assert summary.overall_accuracy == pytest.approx(0.5)
        assert len(summary.accuracy) == 1
        assert set(summary.curves["fraction"]) == {round(f, 2) for f in np.linspace(0.1, 1.0, 10)}


class TestQuerySweep:
    def test_defaults(self):
        sweep = QuerySweep()
        assert sweep.values == (-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0)
        assert sweep.interventions == ((0, 2), (0, 3))
        assert sweep.counterfactuals == ((1, 2), (0, 3))
        assert QuerySweep.from_dict(sweep.to_dict()) == sweep
        assert sweep.to_dict()["interventions"] == [[1, 3], [1, 4]]

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"sample_sizes": (5,)},
            {"reps": 0},
            {"values": ()},
            {"values": (float("inf"),)},
            {"interventions": ((0, 0),)},
            {"counterfactuals": ((0, 4),)},
            {"interventions": (), "counterfactuals": ()},
            {"x_obs": (1.0, 2.0, 3.0)},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            QuerySweep(**kwargs)

    def test_pairs_must_have_two_labels(self):
        with pytest.raises(ConfigurationError, match="pairs"):
            QuerySweep.from_dict({"interventions": [[1, 2, 3]]})

    def test_plan(self):
        sweep = QuerySweep(sample_sizes=(100, 200), reps=3)
        tasks = plan_sweep(sweep, base_seed=0)
        assert [(t.n, t.repetition) for t in tasks] == [(n, r) for n in (100, 200) for r in range(3)]
        assert len({t.seed for t in tasks}) == 6
        assert plan_sweep(sweep, 0) == tasks

    def test_rows_score_against_the_exact_sem(self, tiny_config):
        c1, c2 = 0.8, 1.3
        sweep = QuerySweep(
            sample_sizes=(40,), reps=2, values=(-1.0, 0.5), n_samples=50, c1=c1, c2=c2
        )
        rows = run_sweep(sweep, tiny_config, base_seed=1, show_progress=False)
        assert len(rows) == 2 * 4 * 2
        df = sweep_to_dataframe(rows)
        assert list(df.columns) == SWEEP_COLUMNS
        assert (df["error"] == "").all()
        np.testing.assert_allclose(df["sq_error"], (df["predicted"] - df["truth"]) ** 2)

        def truths(query, target, response):
            block = df[
                (df["query"] == query) & (df["target"] == target) & (df["response"] == response)
            ]
            return block["value"].to_numpy(), block["truth"].to_numpy()

        alpha, truth = truths("intervention", "x1", "x3")
        np.testing.assert_allclose(truth, alpha)
        alpha, truth = truths("intervention", "x1", "x4")
        np.testing.assert_allclose(truth, c2 * alpha**2)
        alpha, truth = truths("counterfactual", "x2", "x3")
        np.testing.assert_allclose(truth, 0.81 + c1 * (alpha**3 - 1.5**3), atol=1e-9)
        alpha, truth = truths("counterfactual", "x1", "x4")
        np.testing.assert_allclose(truth, -0.28 + c2 * (alpha**2 - 4.0), atol=1e-9)

    def test_progress_output_matches_plain_run(self, tiny_config):
        sweep = QuerySweep(
            sample_sizes=(30,), values=(1.0,), n_samples=20, mode=InterventionMode.PARALLEL
        )
        quiet = run_sweep(sweep, tiny_config, show_progress=False)
        shown = run_sweep(sweep, tiny_config, show_progress=True)
        assert [r["predicted"] for r in quiet] == [r["predicted"] for r in shown]

    def test_mse_table(self):
        def row(query, value, predicted, truth, rep=0, error=""):
            return {
                "query": query,
                "N": 100,
                "repetition": rep,
                "architecture": "L1-h4",
                "target": "x1",
                "response": "x4",
                "value": value,
                "predicted": predicted,
                "truth": truth,
                "sq_error": (predicted - truth) ** 2,
                "error": error,
            }

        rows = [
            row("intervention", -1.0, 1.0, 0.0),
            row("intervention", 1.0, 2.0, 0.0),
            row("intervention", 1.0, float("nan"), float("nan"), rep=1, error="diverged"),
            row("counterfactual", 1.0, 0.5, 0.0),
        ]
        table = mse_table(sweep_to_dataframe(rows))
        by_query = table.set_index("query")
        assert by_query.loc["intervention", "mse"] == pytest.approx(2.5)
        assert by_query.loc["intervention", "max_abs_error"] == pytest.approx(2.0)
        assert by_query.loc["intervention", "n_values"] == 2
        assert by_query.loc["intervention", "errors"] == 1
        assert by_query.loc["counterfactual", "mse"] == pytest.approx(0.25)
        assert summarize_sweep(rows).worst_mse == pytest.approx(2.5)
