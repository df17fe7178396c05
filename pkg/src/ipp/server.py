"""MCP server entry point for invariant probabilistic prediction.

Exposes scoring, simulation, fitting, penalty selection and evaluation
as Model Context Protocol tools over stdio. Tools never raise: failures
come back as ``{"error": "<message>"}``.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from mcp.server.fastmcp import FastMCP

from . import __version__
from .config import RunConfig
from .envdata import make_default_spec, simulate_training
from .errors import IppError
from .estimator import fit
from .evaluate import rank_by_energy_distance
from .experiments import run_evaluation
from .lambda_select import select_lambda
from .models.file_formats import load_csv, metadata_block, read_json, save_csv, write_json
from .models.prediction import GaussianPrediction, ScoreKind, ScoreName
from .models.results import FitConfig, FitPath, OptimizerConfig
from .models.scm import INTERVENTION_NAMES, ScmSpec
from .scoring import score

logger = logging.getLogger(__name__)

mcp = FastMCP(
    "ipp",
    instructions=(
        "Fit heteroscedastic Gaussian predictions that keep their score "
        "stable across environments, and evaluate them under shifts."
    ),
)

#: One-line closed forms, keyed by CLI score name.
SCORE_FORMULAS = {
    ScoreName.LOGS: "log(sd) + z^2/2 + log(2 pi)/2",
    ScoreName.CRPS: "sd (z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi))",
    ScoreName.SCRPS: "E|Y - X| / E|X - X'| + log(E|X - X'|)/2",
    ScoreName.QS: "-2 phi(z)/sd + 1/(2 sd sqrt(pi))",
    ScoreName.PSEUDOS: "-f(y)^(alpha-1) / ||f||_alpha^(alpha-1)",
    ScoreName.HYVS: "(z^2 - 2)/sd^2",
}


def _error(exc: Exception) -> dict[str, str]:
    logger.info("Tool failed: %s", exc)
    return {"error": str(exc)}


# ─── SCORING ─────────────────────────────────────────────────────────

@mcp.tool()
def score_prediction(score_name: str, mean: float, sd: float, y: float, alpha: float = 2.0) -> dict[str, Any]:
    """Score a Gaussian prediction N(mean, sd^2) against an outcome.

    Args:
        score_name: One of logs, crps, scrps, qs, pseudos, hyvs.
        mean: Predictive mean.
        sd: Predictive standard deviation (> 0).
        y: Observed outcome.
        alpha: Exponent of the pseudospherical score (> 1).
    """
    try:
        kind = ScoreKind.parse(score_name, alpha)
        value = score(kind, GaussianPrediction(mean, sd), y)
    except IppError as exc:
        return _error(exc)
    return {"score": kind.label, "value": value, "lower_is_better": True}


# ─── DATA ────────────────────────────────────────────────────────────

@mcp.tool()
def simulate_dataset(
    output_dir: str, d: int = 5, n: int = 1000, seed: int = 0, confounded: bool = True
) -> dict[str, Any]:
    """Simulate the d + 1 training environments and write train.csv and spec.json.

    Args:
        output_dir: Directory for the two files (created if missing).
        d: Number of covariates.
        n: Observations per environment.
        seed: Root seed.
        confounded: Correlate the outcome noise with the covariate noise.
    """
    try:
        spec = make_default_spec(d, seed, confounded=confounded)
        data = simulate_training(spec, n)
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        meta = metadata_block(seed, {"d": d, "n": n, "confounded": confounded})
        save_csv(data, out / "train.csv", meta)
        write_json(out / "spec.json", spec.to_dict(), meta)
    except (IppError, OSError) as exc:
        return _error(exc)
    return {
        "train_csv": str(out / "train.csv"),
        "spec_json": str(out / "spec.json"),
        "environments": dict(zip(data.labels, data.sizes.tolist())),
        "beta": spec.beta.tolist(),
        "gamma": spec.gamma.tolist(),
    }


# ─── FITTING ─────────────────────────────────────────────────────────

@mcp.tool()
def fit_path(
    input_csv: str,
    output_json: str,
    score_name: str = "logs",
    lambda_grid: list[float] | None = None,
    starts: int = 5,
    seed: int = 0,
) -> dict[str, Any]:
    """Fit the penalized model over a lambda grid and save the path as JSON.

    Args:
        input_csv: Dataset with header env,y,x1..xd.
        output_json: Where to write the fit path.
        score_name: Scoring rule for the risks.
        lambda_grid: Penalties to fit, ascending (default 0, 0.5, ..., 15).
        starts: Optimizer starts per lambda.
        seed: Seed of the random starts.
    """
    try:
        data = load_csv(input_csv)
        defaults = FitConfig()
        cfg = FitConfig(
            kind=ScoreKind.parse(score_name),
            lambda_grid=tuple(lambda_grid) if lambda_grid else defaults.lambda_grid,
            optimizer=OptimizerConfig(n_starts=starts),
            seed=seed,
        )
        path = fit(data, cfg)
        write_json(output_json, path.to_dict(), metadata_block(seed, cfg.to_dict()))
    except (IppError, OSError) as exc:
        return _error(exc)
    return {
        "output_json": output_json,
        "lambdas": path.lambdas,
        "objectives": [r.objective for r in path.records],
        "penalties": [r.penalty for r in path.records],
    }


@mcp.tool()
def select_penalty(fitpath_json: str, input_csv: str, alpha: float = 0.05) -> dict[str, Any]:
    """Pick the smallest lambda whose environment risks pass the equal-risk test.

    Args:
        fitpath_json: Path written by fit_path.
        input_csv: The dataset the path was fitted on.
        alpha: Test level.
    """
    try:
        path = FitPath.from_dict(read_json(fitpath_json))
        data = load_csv(input_csv)
        choice = select_lambda(path, data, path.kind, alpha)
    except (IppError, OSError, KeyError) as exc:
        return _error(exc)
    return choice.to_dict()


# ─── EVALUATION ──────────────────────────────────────────────────────

@mcp.tool()
def evaluate_interventions(
    fitpath_json: str,
    spec_json: str,
    interventions: list[str] | None = None,
    n_test: int = 10_000,
    seed: int = 0,
) -> dict[str, Any]:
    """Mean test score of every fitted lambda under simulated interventions.

    Args:
        fitpath_json: Path written by fit_path.
        spec_json: Model written by simulate_dataset.
        interventions: Names from pooled, observational, low-variance,
            high-variance, correlation, orthogonal-shift.
        n_test: Test observations per intervention.
        seed: Seed of the test draws.
    """
    try:
        path = FitPath.from_dict(read_json(fitpath_json))
        spec = ScmSpec.from_dict(read_json(spec_json))
        flags: dict[str, Any] = {"n_test": n_test, "seed": seed, "threads": 1}
        if interventions:
            flags["interventions"] = interventions
        cfg = RunConfig.from_mapping(flags)
        table = run_evaluation(path, spec, cfg)
    except (IppError, OSError, KeyError) as exc:
        return _error(exc)
    result = table.to_dict()
    result["worst_case"] = {str(lam): table.worst_case(lam) for lam in table.lambdas}
    return result


@mcp.tool()
def energy_ranking(train_csv: str, candidates_csv: str, top: int = 10) -> dict[str, Any]:
    """Rank candidate environments by energy distance from the pooled training data.

    Args:
        train_csv: Training dataset.
        candidates_csv: Dataset whose environments are ranked.
        top: How many of the most shifted environments to return.
    """
    try:
        train = load_csv(train_csv)
        candidates = load_csv(candidates_csv)
        ranking = rank_by_energy_distance(train, candidates)
    except (IppError, OSError) as exc:
        return _error(exc)
    return {"ranking": [{"env": label, "energy_distance": value} for label, value in ranking[:top]]}


# ─── RESOURCES ───────────────────────────────────────────────────────

@mcp.resource("ipp://scores")
def resource_scores() -> str:
    """Supported scoring rules and their closed forms for N(mu, sd^2), z = (y - mu)/sd."""
    return json.dumps({"scores": {name.value: formula for name, formula in SCORE_FORMULAS.items()}})


@mcp.resource("ipp://defaults")
def resource_defaults() -> str:
    """Default run settings and the available test interventions."""
    defaults = RunConfig(threads=1).to_dict()
    return json.dumps({
        "version": __version__,
        "defaults": defaults,
        "interventions": list(INTERVENTION_NAMES),
    })


def main():
    """Run the MCP server with stdio transport."""
    logging.basicConfig(level=logging.INFO)
    mcp.run(transport="stdio")


if __name__ == "__main__":
    main()
