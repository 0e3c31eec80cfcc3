"""Tests for likelihood-ratio direction tests and ordering search."""

import numpy as np
import pytest

from src.benchmark.results import summarize
from src.benchmark.runner import run_benchmark
from src.datagen.generators import generate
from src.discovery.direction import (
    MIN_ROWS,
    Candidate,
    fit_candidates,
    group_direction,
    likelihood_ratio_bivariate,
)
from src.discovery.ordering import ordering_search
from src.errors import DataError, InfeasibleSearchError, ShapeError
from src.flows.ordering import CausalOrdering
from src.models import (
    ArchitectureConfig,
    BenchmarkGrid,
    Decision,
    DirectionReport,
    Family,
    NoiseKind,
    OrderingReport,
    SyntheticSpec,
    TrainConfig,
    decide,
)
from src.training.data import split_standardize


class TestDecide:
    def test_dead_band(self):
        assert decide(0.3, 0.1) is Decision.X1_CAUSES_X2
        assert decide(-0.3, 0.1) is Decision.X2_CAUSES_X1
        assert decide(0.1, 0.1) is Decision.UNDECIDED
        assert decide(0.0, 0.0) is Decision.UNDECIDED

    def test_report_fields(self):
        report = DirectionReport(-1.0, -1.5, threshold=0.2)
        assert report.ratio == pytest.approx(0.5)
        assert report.confidence == pytest.approx(0.5)
        assert report.decision is Decision.X1_CAUSES_X2
        assert report.to_dict()["R"] == pytest.approx(0.5)

    def test_mirrored(self):
        assert Decision.X1_CAUSES_X2.mirrored() is Decision.X2_CAUSES_X1
        assert Decision.UNDECIDED.mirrored() is Decision.UNDECIDED


class TestBivariate:
    def test_report(self, linear_data, fast_config):
        report = likelihood_ratio_bivariate(linear_data, fast_config)
        assert report.ratio == pytest.approx(report.loglik_forward - report.loglik_backward)
        meta = report.fit_meta
        assert meta["seed"] == fast_config.seed
        assert meta["config_digest"] == fast_config.digest()
        assert meta["n_train"] + meta["n_test"] == linear_data.shape[0]

    def test_swapping_columns_mirrors_the_decision(self, additive_data, fast_config):
        forward = likelihood_ratio_bivariate(additive_data, fast_config)
        swapped = likelihood_ratio_bivariate(additive_data[:, ::-1], fast_config)
        assert swapped.ratio == pytest.approx(-forward.ratio, abs=1e-6)
        assert swapped.decision is forward.decision.mirrored()

    def test_deterministic(self, linear_data, fast_config):
        a = likelihood_ratio_bivariate(linear_data, fast_config)
        b = likelihood_ratio_bivariate(linear_data, fast_config)
        assert a.ratio == b.ratio

    def test_worker_pool_matches_serial(self, linear_data, fast_config):
        serial = likelihood_ratio_bivariate(linear_data, fast_config)
        pooled_config = TrainConfig.from_dict({**fast_config.to_dict(), "n_jobs": 2})
        pooled = likelihood_ratio_bivariate(linear_data, pooled_config)
        assert pooled.ratio == serial.ratio

    def test_too_few_rows(self, fast_config):
        with pytest.raises(DataError):
            likelihood_ratio_bivariate(np.zeros((MIN_ROWS - 1, 2)), fast_config)

    def test_wrong_width(self, fast_config):
        with pytest.raises(ShapeError):
            likelihood_ratio_bivariate(np.zeros((20, 3)), fast_config)

    def test_best_architecture_is_kept(self, linear_data, fast_config):
        config = TrainConfig.from_dict(
            {
                **fast_config.to_dict(),
                "alternative_architectures": [ArchitectureConfig(1, (4,)).to_dict()],
            }
        )
        split = split_standardize(linear_data, config.split_fraction, config.seed)
        candidates = [Candidate("x1->x2", CausalOrdering.identity(2))]
        [(best, index)] = fit_candidates(linear_data, candidates, config, split)
        single = []
        for arch in config.candidate_architectures:
            only = TrainConfig.from_dict(
                {**config.to_dict(), "architecture": arch.to_dict(), "alternative_architectures": []}
            )
            single.append(fit_candidates(linear_data, candidates, only, split)[0][0])
        assert best == max(single)
        assert index == int(np.argmax(single))


class TestGroup:
    def test_one_dimensional_blocks_reduce_to_bivariate(self, linear_data, fast_config):
        group = group_direction(linear_data[:, 0], linear_data[:, 1], fast_config)
        pair = likelihood_ratio_bivariate(linear_data, fast_config)
        assert group.loglik_forward == pair.loglik_forward
        assert group.loglik_backward == pair.loglik_backward

    def test_blocks(self, fast_config):
        data = generate(SyntheticSpec(Family.HIGHDIM_PAIR, n=60, seed=2)).data
        report = group_direction(data[:, :10], data[:, 10:], fast_config)
        assert np.isfinite(report.ratio)

    def test_mismatched_rows(self, fast_config):
        with pytest.raises(DataError):
            group_direction(np.zeros((20, 2)), np.zeros((19, 1)), fast_config)


class TestOrderingSearch:
    def test_two_variables_agree_with_bivariate_test(self, linear_data, fast_config):
        search = ordering_search(linear_data, fast_config)
        pair = likelihood_ratio_bivariate(linear_data, fast_config)
        scores = dict((tuple(o.labels()), ll) for o, ll in search.ranking)
        assert scores[("x1", "x2")] == pair.loglik_forward
        assert scores[("x2", "x1")] == pair.loglik_backward
        expected = ["x1", "x2"] if pair.ratio > 0 else ["x2", "x1"]
        assert search.best.labels() == expected

    def test_ranking_is_sorted_and_complete(self, sem4_data, fast_config):
        config = TrainConfig.from_dict({**fast_config.to_dict(), "epochs": 1})
        search = ordering_search(sem4_data[:, :3], config)
        scores = [ll for _, ll in search.ranking]
        assert len(scores) == 6
        assert scores == sorted(scores, reverse=True)
        assert len({o.ranks for o, _ in search.ranking}) == 6

    def test_exact_tie_is_flagged(self):
        forward, backward = CausalOrdering.from_order([0, 1]), CausalOrdering.from_order([1, 0])
        tie = OrderingReport(ranking=((forward, -1.5), (backward, -1.5)))
        assert tie.tied
        assert tie.best.labels() == ["x1", "x2"]
        assert tie.to_dict()["tied"] is True
        assert not OrderingReport(ranking=((forward, -1.0), (backward, -1.5))).tied
        assert decide(0.0, 0.0) is Decision.UNDECIDED

    def test_infeasible_width(self, fast_config):
        with pytest.raises(InfeasibleSearchError, match="720"):
            ordering_search(np.zeros((30, 6)), fast_config)

    def test_max_d_override(self, fast_config):
        with pytest.raises(InfeasibleSearchError):
            ordering_search(np.zeros((30, 3)), fast_config, max_d=2)

    def test_single_column(self, fast_config):
        with pytest.raises(DataError):
            ordering_search(np.zeros((30, 1)), fast_config)


@pytest.mark.slow
@pytest.mark.parametrize("family", [Family.NONLINEAR_ADDITIVE, Family.MODULATED_NOISE])
@pytest.mark.parametrize("flip", [False, True])
def test_identifies_direction(family, flip):
    dataset = generate(SyntheticSpec(family, n=500, seed=21, flip_direction=flip))
    report = likelihood_ratio_bivariate(dataset.data, TrainConfig(seed=0))
    assert report.decision is dataset.true_decision


def _accuracy(grid: BenchmarkGrid, config: TrainConfig = TrainConfig()) -> dict[str, float]:
    rows = run_benchmark(grid, config, base_seed=0, workers=-1, show_progress=False)
    accuracy = summarize(rows).accuracy
    return dict(zip(accuracy["family"], accuracy["accuracy"]))


@pytest.mark.slow
def test_bivariate_families_over_repetitions():
    accuracy = _accuracy(BenchmarkGrid(sample_sizes=(500,), reps=25))
    assert len(accuracy) == 4
    assert all(a >= 0.85 for a in accuracy.values()), accuracy


@pytest.mark.slow
def test_additive_only_over_repetitions():
    grid = BenchmarkGrid(
        families=(Family.LINEAR, Family.NONLINEAR_ADDITIVE), sample_sizes=(500,), reps=25
    )
    accuracy = _accuracy(grid, TrainConfig(additive_only=True))
    assert all(a >= 0.85 for a in accuracy.values()), accuracy


@pytest.mark.slow
@pytest.mark.parametrize("noise", [NoiseKind.GAUSSIAN, NoiseKind.STUDENT_T])
def test_noise_mismatch_costs_little_accuracy(noise):
    family = (Family.NONLINEAR_ADDITIVE,)
    matched = _accuracy(BenchmarkGrid(families=family, sample_sizes=(500,), reps=25))
    mismatched = _accuracy(
        BenchmarkGrid(families=family, sample_sizes=(500,), reps=25, noise_kind=noise, dof=3.0)
    )
    key = Family.NONLINEAR_ADDITIVE.value
    assert abs(matched[key] - mismatched[key]) <= 0.10


@pytest.mark.slow
def test_highdim_pair_over_repetitions():
    accuracy = _accuracy(BenchmarkGrid(families=(Family.HIGHDIM_PAIR,), sample_sizes=(500,), reps=10))
    assert accuracy[Family.HIGHDIM_PAIR.value] >= 0.8
