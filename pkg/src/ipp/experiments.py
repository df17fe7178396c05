"""Experiment drivers shared by the CLI and the MCP server."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .config import RunConfig
from .envdata import make_default_spec, simulate_training
from .estimator import fit
from .evaluate import bias_variance, intervention_risk_table
from .lambda_select import select_lambda
from .models.dataset import EnvDataset
from .models.results import FitPath, LambdaChoice, ReplicationSummary, RiskTable
from .models.scm import ScmSpec, parse_intervention
from .utils.rng import derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Replication:
    """One simulate-fit-select run of the replication study."""

    n: int
    index: int
    seed: int
    path: FitPath
    choice: LambdaChoice

    def selection_row(self) -> dict[str, object]:
        return {
            "n": self.n,
            "replication": self.index,
            "seed": self.seed,
            "lambda_hat": self.choice.lambda_hat,
            "fallback_used": self.choice.fallback_used,
        }


def run_simulation(cfg: RunConfig) -> tuple[ScmSpec, EnvDataset]:
    spec = make_default_spec(cfg.d, cfg.seed, confounded=cfg.confounded)
    return spec, simulate_training(spec, cfg.n_per_env)


def run_fit(data: EnvDataset, cfg: RunConfig) -> tuple[FitPath, LambdaChoice]:
    """Fit the whole lambda grid, then pick the penalty."""
    fit_cfg = cfg.fit_config()
    logger.info(
        "Fitting %d lambdas with %s (%d environments, d=%d)",
        len(fit_cfg.lambda_grid), fit_cfg.kind.label, data.n_envs, data.d,
    )
    path = fit(data, fit_cfg)
    choice = select_lambda(path, data, fit_cfg.kind, cfg.alpha)
    logger.info("Selected lambda=%g (fallback=%s)", choice.lambda_hat, choice.fallback_used)
    return path, choice


def _replicate_once(spec: ScmSpec, cfg: RunConfig, n: int, index: int) -> Replication:
    seed = derive_seed(cfg.seed, "replication", n, index)
    data = simulate_training(replace(spec, seed=seed), n)
    fit_cfg = cfg.fit_config(threads=1)
    path = fit(data, fit_cfg)
    choice = select_lambda(path, data, fit_cfg.kind, cfg.alpha)
    logger.debug("n=%d replication %d: lambda_hat=%g", n, index, choice.lambda_hat)
    return Replication(n=n, index=index, seed=seed, path=path, choice=choice)


def run_replications(cfg: RunConfig) -> tuple[ReplicationSummary, list[Replication]]:
    """Repeat simulate, fit and select for every sample size.

    The model is fixed by ``cfg.seed``; each replication draws fresh data
    from its own derived seed. Replications run in a pool of
    ``cfg.threads`` workers and are collected in replication order.
    """
    spec = make_default_spec(cfg.d, cfg.seed, confounded=cfg.confounded)
    truth = spec.truth()
    jobs = [(n, r) for n in cfg.sample_sizes for r in range(cfg.replications)]
    logger.info("Running %d replications over sample sizes %s", len(jobs), list(cfg.sample_sizes))

    def run(job: tuple[int, int]) -> Replication:
        return _replicate_once(spec, cfg, *job)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            runs = list(pool.map(run, jobs))
    else:
        runs = [run(job) for job in jobs]

    grid = tuple(cfg.lambda_grid)
    rows = {}
    counts = {}
    selected = {}
    for n in cfg.sample_sizes:
        group = [r for r in runs if r.n == n]
        for lam in grid:
            rows[(n, lam)] = bias_variance([r.path.at(lam).theta_hat for r in group], truth)
        counts[n] = tuple(sum(r.choice.lambda_hat == lam for r in group) for lam in grid)
        selected[n] = bias_variance([r.path.at(r.choice.lambda_hat).theta_hat for r in group], truth)
    summary = ReplicationSummary(lambda_grid=grid, rows=rows, selection_counts=counts, selected=selected)
    return summary, runs


def run_evaluation(path: FitPath, spec: ScmSpec, cfg: RunConfig) -> RiskTable:
    """Score every fitted lambda under the configured test interventions."""
    interventions = [parse_intervention(name, spec, seed=cfg.seed) for name in cfg.interventions]
    return intervention_risk_table(
        path,
        spec,
        interventions,
        cfg.n_test,
        path.kind,
        seed=cfg.seed,
        names=list(cfg.interventions),
    )
