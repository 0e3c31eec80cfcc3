"""End-to-end tests of the command-line interface."""

import io
import json

import pandas as pd
import pytest
from click.testing import CliRunner

from src.cli import cli, run_cli
from src.reporting.report import REPORT_FORMAT

FAST = "seed: 0\ntrain:\n  epochs: 2\n  batch_size: 32\n  architecture:\n    n_layers_flow: 1\n    hidden_dims: [4]\n"


@pytest.fixture
def fast_yaml(tmp_path):
    path = tmp_path / "fast.yaml"
    path.write_text(FAST)
    return str(path)


def _run(argv):
    out = io.StringIO()
    code = run_cli(argv, stdout=out)
    return code, out.getvalue()


def _simulate(tmp_path, family, n, name):
    path = tmp_path / name
    code, text = _run(["simulate", "--family", family, "--n", str(n), "--seed", "1", "--out", str(path)])
    assert code == 0
    return str(path), json.loads(text)


class TestHelp:
    def test_group_help(self):
        result = CliRunner().invoke(cli, ["--help"])
        assert result.exit_code == 0
        for command in ("discover", "order", "intervene", "counterfactual", "simulate", "benchmark", "sweep"):
            assert command in result.output

    def test_run_cli_help_exits_zero(self, capsys):
        assert run_cli(["intervene", "--help"]) == 0
        assert "--target" in capsys.readouterr().out


class TestSimulate:
    def test_writes_csv_and_sidecar(self, tmp_path):
        path, report = _simulate(tmp_path, "linear", 40, "lin.csv")
        assert report["format"] == REPORT_FORMAT
        assert report["command"] == "simulate"
        assert report["seed"] == 1
        results = report["results"]
        assert (results["n"], results["d"]) == (40, 2)
        assert results["true_ordering"] == ["x1", "x2"]
        assert pd.read_csv(path).shape == (40, 2)
        assert json.loads(open(results["truth"]).read())["generating_params"]["family"] == "linear"

    def test_same_seed_same_report_results(self, tmp_path):
        _, first = _simulate(tmp_path, "modulated_noise", 30, "a.csv")
        _, second = _simulate(tmp_path, "modulated_noise", 30, "b.csv")
        assert first["config_digest"] == second["config_digest"]
        assert open(tmp_path / "a.csv").read() == open(tmp_path / "b.csv").read()

    def test_requires_out(self, capsys):
        assert run_cli(["simulate", "--family", "linear"]) == 1
        assert "error:config" in capsys.readouterr().err


class TestDiscover:
    def test_report(self, tmp_path, fast_yaml):
        data, _ = _simulate(tmp_path, "nonlinear_additive", 60, "pair.csv")
        report_path = tmp_path / "report.json"
        code, text = _run(["discover", "--data", data, "-c", fast_yaml, "-o", str(report_path)])
        assert code == 0
        report = json.loads(text)
        results = report["results"]
        assert results["decision"] in {"x1_causes_x2", "x2_causes_x1", "undecided"}
        assert results["R"] == pytest.approx(results["loglik_forward"] - results["loglik_backward"])
        assert json.loads(report_path.read_text()) == report
        assert report["config"]["train"]["epochs"] == 2

    def test_blocks(self, tmp_path, fast_yaml):
        data, _ = _simulate(tmp_path, "highdim_pair", 40, "blocks.csv")
        code, text = _run(["discover", "--data", data, "-c", fast_yaml, "--split-at", "10"])
        assert code == 0
        assert "R" in json.loads(text)["results"]

    def test_split_at_must_leave_a_block(self, tmp_path, fast_yaml, capsys):
        data, _ = _simulate(tmp_path, "linear", 20, "pair.csv")
        assert run_cli(["discover", "--data", data, "-c", fast_yaml, "--split-at", "2"]) == 1
        assert "--split-at" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert run_cli(["discover", "--data", str(tmp_path / "nope.csv"), "--seed", "0"]) == 2
        err = capsys.readouterr().err
        assert err.startswith("error:data:")
        assert len(err.strip().splitlines()) == 1

    def test_invalid_utf8(self, tmp_path, capsys):
        path = tmp_path / "binary.csv"
        path.write_bytes(b"0.5,1.0\n\xff\xfe,1\n0.1,0.2\n")
        assert run_cli(["discover", "--data", str(path), "--seed", "0"]) == 2
        assert capsys.readouterr().err.startswith("error:data:")

    def test_missing_data_flag(self, capsys):
        assert run_cli(["discover", "--seed", "0"]) == 1
        assert "error:config" in capsys.readouterr().err


class TestOrder:
    def test_ranking(self, tmp_path, fast_yaml):
        data, _ = _simulate(tmp_path, "linear", 40, "pair.csv")
        code, text = _run(["order", "--data", data, "-c", fast_yaml])
        assert code == 0
        ranking = json.loads(text)["results"]["ranking"]
        assert len(ranking) == 2

    def test_too_many_variables(self, tmp_path, capsys):
        path = tmp_path / "wide.csv"
        path.write_text("\n".join(",".join(str(i + j) for j in range(6)) for i in range(20)) + "\n")
        assert run_cli(["order", "--data", str(path), "--seed", "0"]) == 2
        assert "d!" in capsys.readouterr().err


class TestQueries:
    def test_fit_save_and_reuse(self, tmp_path, fast_yaml):
        data, _ = _simulate(tmp_path, "linear", 60, "pair.csv")
        model = tmp_path / "model.json"
        code, text = _run(
            [
                "intervene", "--data", data, "-c", fast_yaml, "--target", "1", "--value", "0.5",
                "--n-samples", "25", "--save-model", str(model),
            ]
        )
        assert code == 0
        results = json.loads(text)["results"]
        assert results["target"] == "x1"
        assert results["mean"][0] == 0.5
        assert model.exists()

        code, text = _run(
            [
                "counterfactual", "--model", str(model), "--target", "1", "--value", "0.5",
                "--obs", "0.2,1.0", "--seed", "0",
            ]
        )
        assert code == 0
        results = json.loads(text)["results"]
        assert results["x_counterfactual"][0] == 0.5
        assert results["model"]["source"] == str(model)

    def test_parallel_mode(self, tmp_path, fast_yaml):
        data, _ = _simulate(tmp_path, "linear", 40, "pair.csv")
        code, text = _run(
            [
                "intervene", "--data", data, "-c", fast_yaml, "--target", "2", "--value", "1",
                "--n-samples", "10", "--mode", "parallel", "--ordering", "2,1",
            ]
        )
        assert code == 0
        assert json.loads(text)["results"]["mode"] == "parallel"

    def test_target_out_of_range(self, tmp_path, fast_yaml, capsys):
        data, _ = _simulate(tmp_path, "linear", 40, "pair.csv")
        code = run_cli(["intervene", "--data", data, "-c", fast_yaml, "--target", "3", "--value", "1"])
        assert code == 1
        assert "x3" in capsys.readouterr().err

    def test_counterfactual_requires_obs(self, capsys):
        assert run_cli(["counterfactual", "--target", "1", "--value", "1", "--seed", "0"]) == 1
        assert "--obs" in capsys.readouterr().err

    def test_bad_obs(self, capsys):
        assert run_cli(["counterfactual", "--obs", "1,abc", "--target", "1", "--value", "1"]) == 1


class TestBenchmark:
    def test_writes_tables(self, tmp_path, fast_yaml):
        out = tmp_path / "bench.csv"
        code, text = _run(
            [
                "benchmark", "-c", fast_yaml, "--family", "linear", "--family", "modulated_noise",
                "--n", "20", "--reps", "2", "--no-progress", "-o", str(out),
            ]
        )
        assert code == 0
        results = json.loads(text)["results"]
        assert results["n_rows"] == 4
        assert len(pd.read_csv(out)) == 4
        assert len(pd.read_csv(tmp_path / "bench.accuracy.csv")) == 2
        assert (tmp_path / "bench.curves.csv").exists()


class TestSweep:
    def test_writes_tables(self, tmp_path, fast_yaml):
        out = tmp_path / "sweep.csv"
        code, text = _run(
            [
                "sweep", "-c", fast_yaml, "--n", "40", "--value=-1", "--value=1",
                "--n-samples", "20", "--no-progress", "-o", str(out),
            ]
        )
        assert code == 0
        report = json.loads(text)
        assert report["command"] == "sweep"
        results = report["results"]
        assert results["n_rows"] == 8
        assert len(pd.read_csv(out)) == 8
        mse = pd.read_csv(tmp_path / "sweep.mse.csv")
        assert set(mse["query"]) == {"intervention", "counterfactual"}
        assert len(results["mse"]) == 4


class TestUsageErrors:
    def test_unknown_command(self, capsys):
        assert run_cli(["nope"]) == 1
        err = capsys.readouterr().err
        assert "Usage:" in err
        assert "error:usage" in err

    def test_bad_option_value(self, capsys):
        assert run_cli(["simulate", "--n", "zero", "--out", "x.csv"]) == 1

    def test_unknown_config_key(self, tmp_path, capsys):
        path = tmp_path / "typo.yaml"
        path.write_text("trian:\n  epochs: 3\n")
        assert run_cli(["order", "-c", str(path), "--data", "x.csv"]) == 1
        assert "did you mean 'train'" in capsys.readouterr().err
