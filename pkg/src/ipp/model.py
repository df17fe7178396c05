"""The heteroscedastic Gaussian linear model: prediction, per-observation score, LogS gradient."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InputError, ScaleOverflowError
from .models.dataset import EnvSlice
from .models.params import ModelParams
from .models.prediction import GaussianPrediction, ScoreKind
from .scoring import score, score_log_sd

#: Largest allowed ``|gamma0 + gamma @ x|``.
MAX_LOG_SD = 700.0


def _check_log_sd(log_sd: NDArray[np.float64] | float) -> None:
    worst = float(np.max(np.abs(log_sd)))
    if not worst <= MAX_LOG_SD:
        raise ScaleOverflowError(
            f"Log standard deviation {worst:.6g} exceeds the limit of {MAX_LOG_SD}"
        )


def predict_arrays(params: ModelParams, X: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Means and log standard deviations for every row of ``X``.

    Raises:
        InputError: If ``X`` does not have ``params.d`` columns.
        ScaleOverflowError: If any ``|log sd|`` exceeds ``MAX_LOG_SD``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.d:
        raise InputError(f"Covariates must have {params.d} columns, got shape {X.shape}")
    mean = params.beta0 + X @ params.beta
    log_sd = params.gamma0 + X @ params.gamma
    _check_log_sd(log_sd)
    return mean, log_sd


def predict(params: ModelParams, x: ArrayLike) -> GaussianPrediction:
    """Predictive distribution ``N(beta0 + beta @ x, exp(gamma0 + gamma @ x)^2)``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != params.d:
        raise InputError(f"Covariate vector must have {params.d} entries, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InputError("Covariates must be finite")
    log_sd = params.gamma0 + float(x @ params.gamma)
    _check_log_sd(log_sd)
    return GaussianPrediction(params.beta0 + float(x @ params.beta), math.exp(log_sd))


def obs_score(kind: ScoreKind, params: ModelParams, x: ArrayLike, y: float) -> float:
    """Score of the model's prediction at ``x`` for the outcome ``y``."""
    return score(kind, predict(params, x), y)


def obs_scores(kind: ScoreKind, params: ModelParams, X: ArrayLike, y: ArrayLike) -> NDArray[np.float64]:
    """Per-observation scores for a batch of covariate rows."""
    mean, log_sd = predict_arrays(params, X)
    return score_log_sd(kind, mean, log_sd, y)


def logs_gradient_terms(
    params: ModelParams, X: NDArray[np.float64], y: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Per-observation gradient of LogS, shape ``(n, 2d + 2)``.

    With ``r = y - mu`` and ``s = sd``::

        d/d beta0  = -r / s^2          d/d beta  = -r x / s^2
        d/d gamma0 = 1 - r^2 / s^2     d/d gamma = (1 - r^2 / s^2) x
    """
    mean, log_sd = predict_arrays(params, X)
    precision = np.exp(-2.0 * log_sd)
    r = y - mean
    location = -r * precision
    scale = 1.0 - r * r * precision
    return np.hstack([location[:, None], location[:, None] * X, scale[:, None], scale[:, None] * X])


def logs_risk_gradient(params: ModelParams, data: EnvSlice) -> NDArray[np.float64]:
    """Gradient of the mean LogS over ``data`` with respect to ``(beta0, beta, gamma0, gamma)``."""
    if data.n < 1:
        raise InputError("Gradient needs at least one observation")
    return logs_gradient_terms(params, data.X, data.y).mean(axis=0)
