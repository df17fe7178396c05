"""Strictly proper scoring rules for Gaussian predictive distributions.

All scores are negatively oriented: smaller is better. With
``z = (y - mu) / sigma`` and ``phi``/``Phi`` the standard normal density
and distribution function:

========  =====================================================================
LogS      ``log(2 pi)/2 + log(sigma) + z^2/2``
CRPS      ``sigma * (z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi))``
SCRPS     ``E|Y - eta| / E|eta - eta'| + log(E|eta - eta'|)/2`` with
          ``E|Y - eta| = sigma (z (2 Phi(z) - 1) + 2 phi(z))`` and
          ``E|eta - eta'| = 2 sigma / sqrt(pi)``
QS        ``-2 g(y) + int g^2 = (-2 phi(z) + 1/(2 sqrt(pi))) / sigma``
PseudoS   ``-g(y)^(alpha-1) * (int g^alpha)^(1/alpha - 1)`` with
          ``int g^alpha = (2 pi sigma^2)^((1-alpha)/2) / sqrt(alpha)``
HyvS      ``2 g''(y)/g(y) - (g'(y)/g(y))^2 = (z^2 - 2) / sigma^2``
========  =====================================================================

PseudoS keeps the sign of its usual tabulation, so it is negative and
approaches zero as the prediction worsens.

Under ``y = mu + sigma * eps`` every score splits into a standard-normal
part and a scale part: LogS and SCRPS shift by ``log(sigma)`` and
``log(sigma)/2``; CRPS, QS, PseudoS and HyvS scale by ``sigma``,
``1/sigma``, ``sigma^(1/alpha - 1)`` and ``sigma^-2``.
"""

from __future__ import annotations

import logging
import math
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

from .errors import DomainError, InputError
from .models.prediction import SAMPLE_SCORES, GaussianPrediction, ScoreKind, ScoreName
from .utils.rng import stream

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
SQRT_PI = math.sqrt(math.pi)

#: Smallest Monte Carlo sample accepted by ``propriety_check``.
MIN_PROPRIETY_SAMPLES = 10_000


def _std_normal_pdf(z: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _abs_dev(z: NDArray[np.float64]) -> NDArray[np.float64]:
    """``E|z - eta|`` for ``eta ~ N(0, 1)``."""
    return z * (2.0 * special.ndtr(z) - 1.0) + 2.0 * _std_normal_pdf(z)


def _score_log_sd(
    kind: ScoreKind, z: NDArray[np.float64], log_sd: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Scores in terms of the standardized residual and log standard deviation."""
    name = kind.name
    if name is ScoreName.LOGS:
        return 0.5 * LOG_2PI + log_sd + 0.5 * z * z
    sd = np.exp(log_sd)
    if name is ScoreName.CRPS:
        return sd * (_abs_dev(z) - 1.0 / SQRT_PI)
    if name is ScoreName.SCRPS:
        # E|eta - eta'| = 2 sd / sqrt(pi)
        return 0.5 * SQRT_PI * _abs_dev(z) + 0.5 * (math.log(2.0 / SQRT_PI) + log_sd)
    if name is ScoreName.QS:
        return (-2.0 * _std_normal_pdf(z) + 0.5 / SQRT_PI) / sd
    if name is ScoreName.PSEUDOS:
        alpha = kind.alpha
        log_density = -0.5 * LOG_2PI - log_sd - 0.5 * z * z
        log_norm = (1.0 - alpha) * (0.5 * LOG_2PI + log_sd) - 0.5 * math.log(alpha)
        return -np.exp((alpha - 1.0) * log_density + (1.0 / alpha - 1.0) * log_norm)
    if name is ScoreName.HYVS:
        return (z * z - 2.0) * np.exp(-2.0 * log_sd)
    raise InputError(f"Unsupported score {kind!r}")


def score_array(
    kind: ScoreKind, mean: ArrayLike, sd: ArrayLike, y: ArrayLike
) -> NDArray[np.float64]:
    """Vectorised ``score`` over broadcastable arrays of means, sds and outcomes."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(sd <= 0):
        raise DomainError("Standard deviations must be positive")
    return _score_log_sd(kind, (y - mean) / sd, np.log(sd))


def score_log_sd(
    kind: ScoreKind, mean: ArrayLike, log_sd: ArrayLike, y: ArrayLike
) -> NDArray[np.float64]:
    """Like ``score_array`` but parametrized by ``log(sd)``.

    The model works with ``log_sd = gamma0 + gamma @ x`` directly, which
    keeps LogS exact when ``sd`` itself would under- or overflow.
    """
    mean = np.asarray(mean, dtype=float)
    log_sd = np.asarray(log_sd, dtype=float)
    y = np.asarray(y, dtype=float)
    z = (y - mean) * np.exp(-log_sd)
    return _score_log_sd(kind, z, log_sd)


def score(kind: ScoreKind, pred: GaussianPrediction, y: float) -> float:
    """Score the prediction ``pred`` for the observed outcome ``y``.

    Raises:
        InputError: If ``y`` is not finite.
    """
    if not math.isfinite(y):
        raise InputError(f"Outcome must be finite, got {y}")
    return float(score_array(kind, pred.mean, pred.sd, y))


def _mean_abs_pair_difference(sorted_samples: NDArray[np.float64]) -> float:
    """Mean of ``|eta_i - eta_j|`` over all distinct unordered pairs.

    For sorted samples ``x_(1) <= ... <= x_(n)`` the pair sum is
    ``sum_i (2i - n - 1) x_(i)``.
    """
    n = sorted_samples.size
    coefficients = 2.0 * np.arange(1, n + 1) - n - 1.0
    pair_sum = float(coefficients @ sorted_samples)
    return pair_sum / (n * (n - 1) / 2.0)


def score_samples(kind: ScoreKind, samples: ArrayLike, y: float) -> float:
    """CRPS or SCRPS of the empirical distribution of ``samples``.

    Expectations are replaced by sample averages; the ``E|eta - eta'|``
    term averages over all distinct unordered pairs.

    Raises:
        InputError: If fewer than two samples are given, the kind has no
            sample estimator, or SCRPS meets a zero pair spread.
    """
    if kind.name not in SAMPLE_SCORES:
        raise InputError(f"No sample-based estimator for {kind.label}; use crps or scrps")
    values = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    if values.size < 2:
        raise InputError(f"At least 2 samples are required, got {values.size}")
    if not (np.all(np.isfinite(values)) and math.isfinite(y)):
        raise InputError("Samples and outcome must be finite")

    abs_dev = float(np.mean(np.abs(y - values)))
    spread = _mean_abs_pair_difference(values)
    if kind.name is ScoreName.CRPS:
        return abs_dev - 0.5 * spread
    if spread <= 0:
        raise InputError("SCRPS is undefined for samples with zero spread")
    return abs_dev / spread + 0.5 * math.log(spread)


def _propriety_draws(
    kind: ScoreKind, f: GaussianPrediction, g: GaussianPrediction, n_mc: int, seed: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    if n_mc < MIN_PROPRIETY_SAMPLES:
        raise InputError(f"n_mc must be at least {MIN_PROPRIETY_SAMPLES}, got {n_mc}")
    y = f.mean + f.sd * stream(seed, "propriety").standard_normal(n_mc)
    return score_array(kind, f.mean, f.sd, y), score_array(kind, g.mean, g.sd, y)


def propriety_check(
    kind: ScoreKind, f: GaussianPrediction, g: GaussianPrediction, n_mc: int, seed: int
) -> tuple[float, float]:
    """Monte Carlo estimates of ``E_f S(f, Y)`` and ``E_f S(g, Y)``."""
    score_f, score_g = _propriety_draws(kind, f, g, n_mc, seed)
    return float(score_f.mean()), float(score_g.mean())


class ProprietyMargin(NamedTuple):
    gap: float
    stderr: float


def propriety_margin(
    kind: ScoreKind, f: GaussianPrediction, g: GaussianPrediction, n_mc: int, seed: int
) -> ProprietyMargin:
    """Mean and standard error of the paired difference ``S(g, Y) - S(f, Y)``, ``Y ~ f``."""
    score_f, score_g = _propriety_draws(kind, f, g, n_mc, seed)
    diff = score_g - score_f
    return ProprietyMargin(float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(diff.size)))
