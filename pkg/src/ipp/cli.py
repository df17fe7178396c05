"""Command-line harness: ``ipp simulate | fit | replicate | evaluate | illustrate``.

Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage error.
"""

from __future__ import annotations

import functools
import logging
from pathlib import Path
from typing import Any, Callable

import click

from . import __version__
from .config import RunConfig
from .errors import InputError, IppError
from .evaluate import illustrative_scores
from .experiments import run_evaluation, run_fit, run_replications, run_simulation
from .models.dataset import EnvDataset
from .models.file_formats import (
    load_csv,
    metadata_block,
    read_json,
    save_csv,
    write_json,
    write_table,
)
from .models.prediction import ScoreName
from .models.results import FitPath
from .models.scm import INTERVENTION_NAMES, ScmSpec

logger = logging.getLogger(__name__)

SCORE_CHOICES = [s.value for s in ScoreName]


def _resolve(ctx: click.Context, flags: dict[str, Any]) -> RunConfig:
    """Build the run configuration; invalid settings are usage errors."""
    config_path = flags.pop("config", None)
    try:
        cfg = RunConfig.resolve(flags, config_path)
    except InputError as exc:
        raise click.UsageError(str(exc), ctx=ctx) from None
    logger.debug("Resolved configuration: %s", cfg.to_dict())
    return cfg


def _runtime_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Report package and file-system errors as exit status 1."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except (IppError, OSError) as exc:
            raise click.ClickException(str(exc)) from None

    return wrapper


def _output_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _metadata(cfg: RunConfig) -> dict[str, Any]:
    return metadata_block(cfg.seed, cfg.reproducibility_dict())


# ─── SHARED OPTIONS ───────────────────────────────────────────────────

def _common(func: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--seed", type=int, default=None, help="Root seed (falls back to $IPP_SEED, then 0)."),
        click.option("--output-dir", type=click.Path(file_okay=False), default=None, help="Directory for output files."),
        click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON file of settings; flags win."),
        click.option("--threads", type=int, default=None, help="Worker pool size (default: logical processors)."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _fitting(func: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--score", type=click.Choice(SCORE_CHOICES, case_sensitive=False), default=None, help="Scoring rule."),
        click.option("--alpha", type=float, default=None, help="Level of the equal-risk test (default 0.05)."),
        click.option("--lambda-grid", default=None, help="Penalties, 'a,b,c' or 'start:stop:step' (default 0:15:0.5)."),
        click.option("--box", default=None, help="Per-coordinate parameter bounds 'lo,hi' (default -5,5)."),
        click.option("--starts", type=int, default=None, help="Optimizer starts per lambda (default 20)."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


# ─── COMMANDS ─────────────────────────────────────────────────────────

@click.group()
@click.version_option(__version__, prog_name="ipp")
@click.option("-v", "--verbose", count=True, help="-v for progress, -vv for debug output.")
def main(verbose: int) -> None:
    """Invariant probabilistic prediction across environments."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_common
@click.option("--d", "d", type=int, default=None, help="Number of covariates (default 5).")
@click.option("--n", "n", default=None, help="Observations per environment (default 1000).")
@click.option("--confounding/--no-confounding", "confounded", default=None, help="Correlate eps_Y with eps_X (default on).")
@click.pass_context
@_runtime_errors
def simulate(ctx: click.Context, **flags: Any) -> None:
    """Simulate training environments; writes train.csv and spec.json."""
    cfg = _resolve(ctx, flags)
    if cfg.n is not None and len(cfg.n) != 1:
        raise click.UsageError("--n takes a single sample size here", ctx=ctx)
    spec, data = run_simulation(cfg)
    out = _output_dir(cfg)
    meta = _metadata(cfg)
    save_csv(data, out / "train.csv", meta)
    write_json(out / "spec.json", spec.to_dict(), meta)
    click.echo(f"Wrote {data.n_envs} environments x {cfg.n_per_env} rows to {out / 'train.csv'}")


@main.command()
@_common
@_fitting
@click.option("--input", "input", required=True, type=click.Path(exists=True, dir_okay=False), help="Dataset CSV (env,y,x1..xd).")
@click.pass_context
@_runtime_errors
def fit(ctx: click.Context, **flags: Any) -> None:
    """Fit the lambda path on a dataset and select the penalty."""
    cfg = _resolve(ctx, flags)
    data: EnvDataset = load_csv(cfg.input)
    path, choice = run_fit(data, cfg)

    out = _output_dir(cfg)
    meta = _metadata(cfg)
    write_json(out / "fitpath.json", path.to_dict(), meta)
    write_table(out / "fitpath.csv", ["lambda", "field", "value"], path.long_rows(), meta)
    write_json(out / "lambda_choice.json", choice.to_dict(), meta)
    write_table(
        out / "pvalues.csv",
        ["lambda", "p_value", "selected"],
        [(lam, p, lam == choice.lambda_hat) for lam, p in choice.p_values],
        meta,
    )

    click.echo(f"{'lambda':>8}  {'p-value':>10}")
    for lam, p in choice.p_values:
        marker = "  <- selected" if lam == choice.lambda_hat else ""
        click.echo(f"{lam:8g}  {p:10.4g}{marker}")
    suffix = " (fallback: no lambda reached the level)" if choice.fallback_used else ""
    click.echo(f"lambda_hat = {choice.lambda_hat:g}{suffix}")


@main.command()
@_common
@_fitting
@click.option("--d", "d", type=int, default=None, help="Number of covariates (default 5).")
@click.option("--n", "n", default=None, help="Sample sizes per environment, comma separated (default 100,...,1000).")
@click.option("--replications", type=int, default=None, help="Replications per sample size (default 50).")
@click.option("--confounding/--no-confounding", "confounded", default=None, help="Correlate eps_Y with eps_X (default on).")
@click.pass_context
@_runtime_errors
def replicate(ctx: click.Context, **flags: Any) -> None:
    """Repeat simulate, fit and select; summarize estimation error per lambda."""
    cfg = _resolve(ctx, flags)
    summary, runs = run_replications(cfg)

    out = _output_dir(cfg)
    meta = _metadata(cfg)
    columns = ["n", "lambda", "block", "mse", "sq_bias", "variance", "selected_count"]
    rows = summary.table_rows()
    write_table(out / "replication_summary.csv", columns, [[r[c] for c in columns] for r in rows], meta)
    selections = [r.selection_row() for r in runs]
    selection_columns = ["n", "replication", "seed", "lambda_hat", "fallback_used"]
    write_table(
        out / "lambda_selection.csv",
        selection_columns,
        [[s[c] for c in selection_columns] for s in selections],
        meta,
    )
    write_json(out / "replicate.json", {**summary.to_dict(), "selections": selections}, meta)
    click.echo(f"Wrote {len(rows)} summary rows for {len(runs)} replications to {out}")


def _load_fit_inputs(source: Path) -> tuple[FitPath, ScmSpec]:
    fitpath_file = source / "fitpath.json" if source.is_dir() else source
    spec_file = fitpath_file.parent / "spec.json"
    if not spec_file.is_file():
        raise InputError(f"No spec.json next to {fitpath_file}; evaluation needs the simulated model")
    path = FitPath.from_dict(read_json(fitpath_file))
    spec = ScmSpec.from_dict(read_json(spec_file))
    return path, spec


@main.command()
@_common
@click.option("--input", "input", required=True, type=click.Path(exists=True), help="fitpath.json, or the directory holding it and spec.json.")
@click.option("--n-test", type=int, default=None, help="Test observations per intervention (default 10000).")
@click.option(
    "--interventions",
    default=None,
    help=f"Comma-separated test interventions from {', '.join(INTERVENTION_NAMES)}.",
)
@click.pass_context
@_runtime_errors
def evaluate(ctx: click.Context, **flags: Any) -> None:
    """Mean test score of every fitted lambda under each intervention."""
    cfg = _resolve(ctx, flags)
    path, spec = _load_fit_inputs(Path(cfg.input))
    table = run_evaluation(path, spec, cfg)

    out = _output_dir(cfg)
    meta = _metadata(cfg)
    write_table(
        out / "intervention_risks.csv",
        ["lambda", "intervention", "metric", "value"],
        table.tidy_rows(),
        meta,
    )
    write_json(out / "intervention_risks.json", table.to_dict(), meta)
    click.echo(f"Wrote {len(table.cells)} risk cells to {out / 'intervention_risks.csv'}")


@main.command()
@_common
@click.option("--n", "n", default=None, help="Monte Carlo draws per intervention strength (default 10000).")
@click.pass_context
@_runtime_errors
def illustrate(ctx: click.Context, **flags: Any) -> None:
    """Scores of the interventional and observational predictions in the two-covariate example."""
    cfg = _resolve(ctx, flags)
    n = cfg.n[0] if cfg.n else 10_000
    rows = illustrative_scores(cfg.t_grid, n, cfg.seed)
    columns = ["intervention", "t", "prediction", "score", "mean", "std_error"]
    out = _output_dir(cfg)
    write_table(out / "illustrative_scores.csv", columns, [[r[c] for c in columns] for r in rows], _metadata(cfg))
    click.echo(f"Wrote {len(rows)} rows to {out / 'illustrative_scores.csv'}")


if __name__ == "__main__":
    main()
