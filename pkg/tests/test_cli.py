"""End-to-end runs of the ``ipp`` command group on small problems."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from ipp.cli import main
from ipp.models.file_formats import load_csv, read_metadata, read_table


@pytest.fixture
def runner(monkeypatch):
    monkeypatch.delenv("IPP_SEED", raising=False)
    return CliRunner()


@pytest.fixture
def simulated(runner, tmp_path):
    out = tmp_path / "sim"
    result = runner.invoke(main, ["simulate", "--d", "2", "--n", "60", "--seed", "7", "--output-dir", str(out)])
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture
def fitted(runner, simulated):
    result = runner.invoke(
        main,
        [
            "fit", "--input", str(simulated / "train.csv"), "--lambda-grid", "0,5",
            "--starts", "2", "--threads", "1", "--output-dir", str(simulated),
        ],
    )
    assert result.exit_code == 0, result.output
    return simulated, result


class TestSimulate:
    def test_writes_dataset_and_model(self, simulated):
        data = load_csv(simulated / "train.csv")
        assert data.labels == ["env1", "env2", "env3"]
        assert data.d == 2
        assert set(data.sizes.tolist()) == {60}
        spec = json.loads((simulated / "spec.json").read_text())
        assert spec["metadata"]["seed"] == 7
        assert read_metadata(simulated / "train.csv")["tool"] == "ipp"

    def test_same_seed_same_bytes(self, runner, simulated):
        first = (simulated / "train.csv").read_bytes()
        result = runner.invoke(main, ["simulate", "--d", "2", "--n", "60", "--seed", "7", "--output-dir", str(simulated)])
        assert result.exit_code == 0
        assert (simulated / "train.csv").read_bytes() == first

    def test_thread_count_does_not_change_the_bytes(self, runner, tmp_path):
        outputs = []
        for threads in ("1", "3"):
            out = tmp_path / threads
            result = runner.invoke(
                main,
                ["simulate", "--d", "1", "--n", "20", "--seed", "2", "--threads", threads, "--output-dir", str(out)],
            )
            assert result.exit_code == 0, result.output
            outputs.append(((out / "train.csv").read_bytes(), (out / "spec.json").read_bytes()))
        assert outputs[0] == outputs[1]
        assert "threads" not in read_metadata(tmp_path / "1" / "train.csv")["config"]

    def test_seed_from_the_environment(self, runner, tmp_path):
        result = runner.invoke(
            main, ["simulate", "--d", "1", "--n", "5", "--output-dir", str(tmp_path)], env={"IPP_SEED": "11"}
        )
        assert result.exit_code == 0
        assert read_metadata(tmp_path / "train.csv")["seed"] == 11

    def test_invalid_dimension_is_a_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["simulate", "--d", "0", "--output-dir", str(tmp_path)])
        assert result.exit_code == 2
        assert "d must be at least 1" in result.output

    def test_several_sample_sizes_rejected(self, runner, tmp_path):
        result = runner.invoke(main, ["simulate", "--n", "10,20", "--output-dir", str(tmp_path)])
        assert result.exit_code == 2


class TestFit:
    def test_outputs(self, fitted):
        out, result = fitted
        assert "lambda_hat" in result.output
        for name in ("fitpath.json", "fitpath.csv", "lambda_choice.json", "pvalues.csv"):
            assert (out / name).is_file()
        pvalues = read_table(out / "pvalues.csv")
        assert pvalues["lambda"].tolist() == [0.0, 5.0]
        assert pvalues["selected"].sum() == 1
        choice = json.loads((out / "lambda_choice.json").read_text())
        assert choice["lambda_hat"] in (0.0, 5.0)

    def test_missing_input_is_a_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["fit", "--input", str(tmp_path / "nope.csv")])
        assert result.exit_code == 2

    def test_malformed_csv_is_a_runtime_error(self, runner, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("env,y,x1\na,1.0,2.0\na,NA,1.0\n", encoding="utf-8")
        result = runner.invoke(main, ["fit", "--input", str(bad), "--output-dir", str(tmp_path)])
        assert result.exit_code == 1
        assert "line 3" in result.output

    def test_unknown_score(self, runner, simulated):
        result = runner.invoke(main, ["fit", "--input", str(simulated / "train.csv"), "--score", "brier"])
        assert result.exit_code == 2


class TestReplicate:
    def test_summary_rows(self, runner, tmp_path):
        result = runner.invoke(
            main,
            [
                "replicate", "--d", "1", "--n", "100", "--replications", "2", "--lambda-grid", "0,3",
                "--starts", "2", "--threads", "1", "--seed", "3", "--output-dir", str(tmp_path),
            ],
        )
        assert result.exit_code == 0, result.output
        summary = read_table(tmp_path / "replication_summary.csv")
        assert len(summary) == 4
        assert set(summary["block"]) == {"beta", "gamma"}
        selections = read_table(tmp_path / "lambda_selection.csv")
        assert selections["replication"].tolist() == [0, 1]
        assert selections["lambda_hat"].isin([0.0, 3.0]).all()

    @pytest.mark.slow
    def test_stricter_level_selects_smaller_penalties(self, runner, tmp_path):
        chosen = {}
        for alpha in ("0.01", "0.1"):
            out = tmp_path / alpha
            result = runner.invoke(
                main,
                [
                    "replicate", "--d", "2", "--n", "250", "--replications", "6", "--alpha", alpha,
                    "--lambda-grid", "0:15:2.5", "--starts", "4", "--seed", "5", "--output-dir", str(out),
                ],
            )
            assert result.exit_code == 0, result.output
            chosen[alpha] = read_table(out / "lambda_selection.csv")["lambda_hat"].to_numpy()
        assert (chosen["0.01"] <= chosen["0.1"]).all()
        assert chosen["0.01"].mean() <= chosen["0.1"].mean()


class TestEvaluate:
    def test_risk_table(self, runner, fitted):
        out, _ = fitted
        result = runner.invoke(
            main,
            [
                "evaluate", "--input", str(out), "--n-test", "200",
                "--interventions", "pooled,low-variance", "--output-dir", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        table = read_table(out / "intervention_risks.csv")
        assert set(table["intervention"]) == {"pooled", "low-variance"}
        assert set(table["lambda"]) == {0.0, 5.0}

    def test_unknown_intervention(self, runner, fitted):
        out, _ = fitted
        result = runner.invoke(main, ["evaluate", "--input", str(out), "--interventions", "sideways"])
        assert result.exit_code == 2
        assert "Unknown intervention" in result.output

    def test_needs_the_model(self, runner, fitted, tmp_path):
        out, _ = fitted
        lonely = tmp_path / "lonely"
        lonely.mkdir()
        (lonely / "fitpath.json").write_bytes((out / "fitpath.json").read_bytes())
        result = runner.invoke(main, ["evaluate", "--input", str(lonely), "--output-dir", str(lonely)])
        assert result.exit_code == 1
        assert "spec.json" in result.output


def test_illustrate(runner, tmp_path):
    result = runner.invoke(main, ["illustrate", "--n", "50", "--output-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    table = read_table(tmp_path / "illustrative_scores.csv")
    assert set(table["prediction"]) >= {"observational"}
    assert table["t"].min() == 0.0
    assert table["t"].max() == pytest.approx(1.0)


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "ipp" in result.output
