"""The penalized multi-environment objective and its minimization over a lambda grid.

For weights ``w`` and per-environment risks ``R^e(theta)``::

    objective(theta) = sum_e w_e R^e(theta) + lambda * D(R(theta))
    D(v)             = (1/E^2) sum_{i<j} (v_i - v_j)^2

``D`` equals the population variance of ``v``.
"""

from __future__ import annotations

import logging

import numpy as np
from numpy.typing import ArrayLike

from .errors import InputError, OptimizationError
from .model import logs_gradient_terms, predict_arrays
from .models.dataset import EnvDataset
from .models.params import ModelParams
from .models.prediction import ScoreKind, ScoreName
from .models.results import FitConfig, FitPath, FitRecord, MonotonicityReport
from .optimizer import multistart_minimize
from .scoring import score_log_sd
from .utils.rng import stream

logger = logging.getLogger(__name__)

#: Allowed optimizer noise in the monotonicity checks.
MONOTONICITY_SLACK = 1e-6


def variance_penalty(v: ArrayLike) -> float:
    """``(1/E^2) sum_{i<j} (v_i - v_j)^2``; zero iff all entries are equal."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size < 2:
        raise InputError(f"The variance penalty needs at least 2 risks, got {v.size}")
    return float(np.mean((v - v.mean()) ** 2))


class _Objective:
    """The penalized risk over stacked data, vectorised across environments."""

    def __init__(self, data: EnvDataset, kind: ScoreKind, weights: np.ndarray, lambda_: float) -> None:
        self.X, self.y, self.index = data.stacked()
        self.sizes = data.sizes.astype(float)
        self.n_envs = data.n_envs
        self.d = data.d
        self.kind = kind
        self.weights = weights
        self.lambda_ = lambda_

    def risks(self, params: ModelParams) -> np.ndarray:
        mean, log_sd = predict_arrays(params, self.X)
        scores = score_log_sd(self.kind, mean, log_sd, self.y)
        return np.bincount(self.index, weights=scores, minlength=self.n_envs) / self.sizes

    def value_at(self, params: ModelParams) -> float:
        risks = self.risks(params)
        return float(self.weights @ risks + self.lambda_ * variance_penalty(risks))

    def __call__(self, vector: np.ndarray) -> float:
        return self.value_at(ModelParams.from_vector(vector, self.d))

    def gradient(self, vector: np.ndarray) -> np.ndarray:
        """Analytic LogS gradient, chained through the penalty."""
        params = ModelParams.from_vector(vector, self.d)
        terms = logs_gradient_terms(params, self.X, self.y)
        per_env = np.zeros((self.n_envs, terms.shape[1]))
        np.add.at(per_env, self.index, terms)
        per_env /= self.sizes[:, None]
        risks = self.risks(params)
        coefficients = self.weights + self.lambda_ * (2.0 / self.n_envs) * (risks - risks.mean())
        return coefficients @ per_env


def env_risks(params: ModelParams, data: EnvDataset, kind: ScoreKind) -> np.ndarray:
    """Mean score of the model in every environment, in dataset order."""
    uniform = np.full(data.n_envs, 1.0 / data.n_envs)
    return _Objective(data, kind, uniform, 0.0).risks(params)


def objective(params: ModelParams, data: EnvDataset, cfg: FitConfig, lambda_: float) -> float:
    """Weighted pooled risk plus ``lambda_`` times the variance penalty."""
    if lambda_ < 0:
        raise InputError(f"lambda must be non-negative, got {lambda_}")
    weights = cfg.resolved_weights(data.n_envs)
    return _Objective(data, cfg.kind, weights, lambda_).value_at(params)


def _least_squares_start(data: EnvDataset) -> np.ndarray:
    """Pooled OLS location with a constant scale matched to the residuals."""
    X, y, _ = data.stacked()
    design = np.column_stack([np.ones(len(y)), X])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    residual_sd = float(np.std(y - design @ coef))
    gamma0 = np.log(residual_sd) if residual_sd > 0 else 0.0
    return ModelParams(coef[0], coef[1:], gamma0, np.zeros(data.d)).to_vector()


def _starts(
    cfg: FitConfig,
    k: int,
    ols: np.ndarray,
    previous: np.ndarray | None,
    first: np.ndarray | None,
    size: int,
) -> list[np.ndarray]:
    starts: list[np.ndarray] = []
    if cfg.warm_start:
        for candidate in (previous, first):
            if candidate is not None and not any(np.array_equal(candidate, s) for s in starts):
                starts.append(candidate)
    starts.append(ols)
    lo, hi = cfg.box
    draws = stream(cfg.seed, "starts", k)
    while len(starts) < cfg.optimizer.n_starts:
        starts.append(draws.uniform(lo, hi, size=size))
    return starts[: max(cfg.optimizer.n_starts, 1)]


def fit(data: EnvDataset, cfg: FitConfig) -> FitPath:
    """Minimize the objective at every lambda of ``cfg.lambda_grid``, in ascending order.

    Raises:
        OptimizationError: If no restart reaches a finite objective at
            some lambda.
    """
    weights = cfg.resolved_weights(data.n_envs)
    size = 2 * data.d + 2
    ols = _least_squares_start(data)
    previous: np.ndarray | None = None
    first: np.ndarray | None = None
    records: list[FitRecord] = []

    for k, lambda_ in enumerate(cfg.lambda_grid):
        problem = _Objective(data, cfg.kind, weights, lambda_)
        jac = problem.gradient if cfg.kind.name is ScoreName.LOGS else None
        starts = _starts(cfg, k, ols, previous, first, size)
        try:
            best, restarts = multistart_minimize(problem, starts, cfg.box, cfg.optimizer, jac=jac)
        except OptimizationError as exc:
            exc.diagnostics["lambda"] = lambda_
            raise

        theta = ModelParams.from_vector(best.x, data.d)
        risks = problem.risks(theta)
        penalty = variance_penalty(risks)
        pooled = float(weights @ risks)
        records.append(
            FitRecord(
                lambda_=lambda_,
                theta_hat=theta,
                env_risks=risks,
                penalty=penalty,
                objective=pooled + lambda_ * penalty,
                pooled_risk=pooled,
                restart_objectives=tuple(r.fun for r in restarts),
            )
        )
        failed = sum(not r.finite for r in restarts)
        if failed:
            logger.info("lambda=%g: %d of %d restarts failed", lambda_, failed, len(restarts))
        logger.debug("lambda=%g: objective %.10g, penalty %.3g", lambda_, records[-1].objective, penalty)

        previous = best.x
        if first is None:
            first = best.x

    return FitPath(records=tuple(records), labels=tuple(data.labels), kind=cfg.kind, weights=weights)


def penalty_monotonicity_report(path: FitPath, slack: float = MONOTONICITY_SLACK) -> MonotonicityReport:
    """Check that the penalty falls and the pooled risk rises along the grid.

    Exact minimizers satisfy both; a violation beyond ``slack`` points at
    an optimizer that did not converge.
    """
    penalties = np.array([r.penalty for r in path.records])
    pooled = np.array([r.pooled_risk for r in path.records])
    return MonotonicityReport(
        d_nonincreasing=bool(np.all(np.diff(penalties) <= slack)),
        pooled_nondecreasing=bool(np.all(np.diff(pooled) >= -slack)),
    )
