"""MCP tools, called directly with FastMCP mocked out."""

from __future__ import annotations

import json
import math

import pytest

from ipp.scoring import LOG_2PI


@pytest.fixture(scope="module")
def workspace(server, tmp_path_factory):
    """A simulated dataset and a two-lambda fit path on it."""
    root = tmp_path_factory.mktemp("mcp")
    sim = server.simulate_dataset(str(root), d=2, n=80, seed=4)
    assert "error" not in sim
    fitted = server.fit_path(sim["train_csv"], str(root / "fitpath.json"), lambda_grid=[0.0, 4.0], starts=2, seed=4)
    assert "error" not in fitted
    return root, sim, fitted


class TestScorePrediction:
    def test_log_score_at_the_mean(self, server):
        result = server.score_prediction("logs", mean=0.0, sd=1.0, y=0.0)
        assert result["score"] == "logs"
        assert result["value"] == pytest.approx(0.5 * LOG_2PI)
        assert result["lower_is_better"] is True

    def test_hyvarinen(self, server):
        assert server.score_prediction("HyvS", 1.0, 2.0, 1.0)["value"] == pytest.approx(-0.5)

    def test_pseudospherical_label(self, server):
        assert server.score_prediction("pseudos", 0.0, 1.0, 0.5, alpha=3.0)["score"] == "pseudos(alpha=3)"

    def test_unknown_score(self, server):
        assert "Unknown score" in server.score_prediction("brier", 0.0, 1.0, 0.0)["error"]

    def test_non_positive_sd(self, server):
        assert "error" in server.score_prediction("crps", 0.0, 0.0, 0.0)


class TestPipeline:
    def test_simulation_summary(self, workspace):
        _, sim, _ = workspace
        assert sim["environments"] == {"env1": 80, "env2": 80, "env3": 80}
        assert len(sim["beta"]) == 2 and len(sim["gamma"]) == 2

    def test_fit_path(self, workspace):
        root, _, fitted = workspace
        assert fitted["lambdas"] == [0.0, 4.0]
        assert all(math.isfinite(v) for v in fitted["objectives"])
        assert (root / "fitpath.json").is_file()

    def test_select_penalty(self, server, workspace):
        root, sim, _ = workspace
        choice = server.select_penalty(str(root / "fitpath.json"), sim["train_csv"])
        assert choice["lambda_hat"] in (0.0, 4.0)
        assert len(choice["p_values"]) == 2

    def test_evaluate_interventions(self, server, workspace):
        root, sim, _ = workspace
        result = server.evaluate_interventions(
            str(root / "fitpath.json"), sim["spec_json"], interventions=["pooled", "correlation"], n_test=300
        )
        assert "error" not in result
        assert set(result["worst_case"]) == {"0.0", "4.0"}

    def test_unknown_intervention(self, server, workspace):
        root, sim, _ = workspace
        result = server.evaluate_interventions(str(root / "fitpath.json"), sim["spec_json"], interventions=["sideways"])
        assert "Unknown intervention" in result["error"]

    def test_energy_ranking(self, server, workspace):
        _, sim, _ = workspace
        result = server.energy_ranking(sim["train_csv"], sim["train_csv"], top=2)
        ranking = result["ranking"]
        assert len(ranking) == 2
        assert ranking[0]["energy_distance"] >= ranking[1]["energy_distance"]


class TestToolErrors:
    def test_simulate_bad_dimension(self, server, tmp_path):
        assert "error" in server.simulate_dataset(str(tmp_path), d=0)

    def test_fit_missing_file(self, server, tmp_path):
        result = server.fit_path(str(tmp_path / "none.csv"), str(tmp_path / "out.json"))
        assert "No such file" in result["error"]

    def test_select_bad_json(self, server, tmp_path):
        bad = tmp_path / "fitpath.json"
        bad.write_text("{", encoding="utf-8")
        assert "invalid JSON" in server.select_penalty(str(bad), str(tmp_path / "train.csv"))["error"]


class TestResources:
    def test_scores(self, server):
        scores = json.loads(server.resource_scores())["scores"]
        assert set(scores) == {"logs", "crps", "scrps", "qs", "pseudos", "hyvs"}

    def test_defaults(self, server):
        data = json.loads(server.resource_defaults())
        assert data["defaults"]["score"] == "logs"
        assert "orthogonal-shift" in data["interventions"]
