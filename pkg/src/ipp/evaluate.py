"""Experiment metrics.

* Gaussian exponential moments, and the expected LogS of the
  heteroscedastic model in a training environment built from them.
* Bias/variance decomposition of replicated estimates.
* Mean test scores of a fit path under interventions.
* Energy distance between samples, and rankings of test environments by it.
* Scores of two fixed predictions in the two-covariate example.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial.distance import cdist

from .envdata import simulate_test
from .errors import InputError
from .model import obs_scores
from .models.dataset import EnvDataset, EnvSlice
from .models.params import ModelParams
from .models.prediction import ALL_SCORES, ScoreKind
from .models.results import BiasVariance, FitPath, RiskCell, RiskTable
from .models.scm import Intervention, ScmSpec
from .scoring import LOG_2PI, score_log_sd
from .utils.linalg import check_finite, cholesky
from .utils.rng import stream

logger = logging.getLogger(__name__)


# ─── GAUSSIAN MOMENTS ─────────────────────────────────────────────────

class MomentForm:
    """A function ``h`` whose mean under ``N(mean, cov)`` has a closed form."""

    def expectation(self, mean: np.ndarray, cov: np.ndarray) -> float:
        raise NotImplementedError

    def __call__(self, z: ArrayLike) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(MomentForm):
    """``h(z) = 1``."""

    def expectation(self, mean: np.ndarray, cov: np.ndarray) -> float:
        return 1.0

    def __call__(self, z: ArrayLike) -> np.ndarray:
        return np.ones(np.asarray(z, dtype=float).shape[0])


@dataclass(frozen=True, eq=False)
class Bilinear(MomentForm):
    """``h(z) = (a @ z) * (b @ z)``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if a.size != b.size:
            raise InputError(f"Bilinear form vectors differ in length: {a.size} vs {b.size}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def expectation(self, mean: np.ndarray, cov: np.ndarray) -> float:
        return float(self.a @ cov @ self.b + (self.a @ mean) * (self.b @ mean))

    def __call__(self, z: ArrayLike) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return (z @ self.a) * (z @ self.b)


class SquaredLinear(Bilinear):
    """``h(z) = (a @ z)^2``."""

    def __init__(self, a: ArrayLike) -> None:
        super().__init__(a, a)


def cross_with(index: int, a: ArrayLike) -> Bilinear:
    """``h(z) = z[index] * (a @ z)``, e.g. ``eps_Y`` times a linear form in ``X``."""
    a = np.asarray(a, dtype=float).reshape(-1)
    if not 0 <= index < a.size:
        raise InputError(f"index {index} is out of range for a vector of length {a.size}")
    unit = np.zeros(a.size)
    unit[index] = 1.0
    return Bilinear(unit, a)


def gaussian_exp_moment(h: MomentForm, sigma: ArrayLike, theta: ArrayLike) -> float:
    """``E[h(Z) exp(theta @ Z)]`` for ``Z ~ N(0, sigma)``.

    Uses ``E[h(Z) exp(theta @ Z)] = E[h(W)] exp(theta @ sigma @ theta / 2)``
    with ``W ~ N(sigma @ theta, sigma)``.

    Raises:
        DecompositionError: If ``sigma`` is not positive definite.
        InputError: On a dimension mismatch.
    """
    sigma = np.asarray(sigma, dtype=float)
    cholesky(sigma)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != sigma.shape[0]:
        raise InputError(f"theta has {theta.size} entries, sigma is {sigma.shape[0]}x{sigma.shape[0]}")
    if isinstance(h, Bilinear) and h.a.size != theta.size:
        raise InputError(f"Form has dimension {h.a.size}, expected {theta.size}")
    shifted = sigma @ theta
    return h.expectation(shifted, sigma) * math.exp(0.5 * float(theta @ shifted))


# ─── EXPECTED LOGS ────────────────────────────────────────────────────

def _check_candidate(spec: ScmSpec, env: int, b: ArrayLike, g: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    if not 0 <= env < spec.n_envs:
        raise InputError(f"env must index one of the {spec.n_envs} training environments, got {env}")
    b = np.asarray(b, dtype=float).reshape(-1)
    g = np.asarray(g, dtype=float).reshape(-1)
    if b.size != spec.d or g.size != spec.d:
        raise InputError(f"b and g must have {spec.d} entries, got {b.size} and {g.size}")
    check_finite("b", b)
    check_finite("g", g)
    return b, g


def expected_logs_closed_form(spec: ScmSpec, env: int, b: ArrayLike, g: ArrayLike) -> float:
    """Twice the expected LogS of ``N(b @ x, exp(2 g @ x))``, up to an additive constant.

    The three-term expression as it is usually stated::

        (D M D + 4 (D M g)^2) exp(2 g M g)
          + exp(2 (gamma - g) M (gamma - g))
          + 2 D Gamma s_yx exp((gamma - 2g) M (gamma - 2g) / 2)

    with ``D = beta - b`` and ``M = Gamma sigma_x Gamma^T``. Without
    confounding it differs from ``expected_logs_full`` by exactly
    ``log(2 pi)``; with confounding the last two terms drop mean-shift
    factors, so use ``expected_logs_full`` for absolute values.
    """
    b, g = _check_candidate(spec, env, b, g)
    gamma_matrix = spec.train_gammas[env]
    M = gamma_matrix @ spec.sigma_x @ gamma_matrix.T
    delta = spec.beta - b
    scale_gap = spec.gamma - g
    cross = spec.gamma - 2.0 * g
    first = (delta @ M @ delta + 4.0 * (delta @ M @ g) ** 2) * math.exp(2.0 * g @ M @ g)
    second = math.exp(2.0 * scale_gap @ M @ scale_gap)
    third = 2.0 * (delta @ gamma_matrix @ spec.sigma_yx) * math.exp(cross @ M @ cross / 2.0)
    return float(first + second + third)


def expected_logs_full(spec: ScmSpec, env: int, b: ArrayLike, g: ArrayLike) -> float:
    """Exact ``2 E[LogS]`` of ``N(b @ x, exp(2 g @ x))`` in training environment ``env``.

    Expanding ``2 LogS = log(2 pi) + 2 g @ X + (Y - b @ X)^2 exp(-2 g @ X)``
    with ``Y - b @ X = D @ X + exp(gamma @ X) eps_Y`` gives three
    exponential moments of the joint Gaussian ``(eps_Y, X)``, each from
    ``gaussian_exp_moment``.
    """
    b, g = _check_candidate(spec, env, b, g)
    d = spec.d
    gamma_matrix = spec.train_gammas[env]
    lift = np.zeros((d + 1, d + 1))
    lift[0, 0] = 1.0
    lift[1:, 1:] = gamma_matrix
    joint = lift @ spec.sigma @ lift.T

    def embed(v: np.ndarray) -> np.ndarray:
        return np.concatenate([[0.0], v])

    delta = spec.beta - b
    location = gaussian_exp_moment(SquaredLinear(embed(delta)), joint, embed(-2.0 * g))
    mixed = 2.0 * gaussian_exp_moment(cross_with(0, embed(delta)), joint, embed(spec.gamma - 2.0 * g))
    noise = gaussian_exp_moment(
        SquaredLinear(np.eye(d + 1)[0]), joint, embed(2.0 * (spec.gamma - g))
    )
    return float(LOG_2PI + location + mixed + noise)


# ─── REPLICATIONS ─────────────────────────────────────────────────────

def _decompose(estimates: np.ndarray, truth: np.ndarray) -> tuple[float, float, float]:
    center = estimates.mean(axis=0)
    mse = float(np.mean(np.sum((estimates - truth) ** 2, axis=1)))
    sq_bias = float(np.sum((center - truth) ** 2))
    variance = float(np.mean(np.sum((estimates - center) ** 2, axis=1)))
    return mse, sq_bias, variance


def bias_variance(replications: Sequence[ModelParams], truth: ModelParams) -> BiasVariance:
    """Mean squared error of the slope vectors, split into squared bias and variance.

    Variance averages over the replications (no Bessel correction), so
    ``mse == sq_bias + variance`` holds exactly up to rounding.
    """
    if len(replications) < 2:
        raise InputError(f"At least 2 replications are needed, got {len(replications)}")
    if any(r.d != truth.d for r in replications):
        raise InputError("Replications and truth differ in dimension")
    betas = np.array([r.beta for r in replications])
    gammas = np.array([r.gamma for r in replications])
    mse_b, bias_b, var_b = _decompose(betas, truth.beta)
    mse_g, bias_g, var_g = _decompose(gammas, truth.gamma)
    return BiasVariance(
        mean_sq_error_beta=mse_b,
        sq_bias_beta=bias_b,
        variance_beta=var_b,
        mean_sq_error_gamma=mse_g,
        sq_bias_gamma=bias_g,
        variance_gamma=var_g,
    )


# ─── INTERVENTION RISKS ───────────────────────────────────────────────

def intervention_risk_table(
    path: FitPath,
    spec: ScmSpec,
    interventions: Sequence[Intervention],
    n_test: int,
    kind: ScoreKind,
    seed: int | None = None,
    names: Sequence[str] | None = None,
) -> RiskTable:
    """Mean score and its standard error for every lambda under every intervention.

    One test slice is drawn per intervention and shared by all lambdas,
    so differences between lambdas are paired.

    Args:
        names: Column labels; defaults to each intervention's ``label``.
    """
    if names is None:
        names = [i.label for i in interventions]
    if len(names) != len(interventions):
        raise InputError(f"{len(names)} names given for {len(interventions)} interventions")
    if n_test < 2:
        raise InputError(f"n_test must be at least 2, got {n_test}")

    slices = [simulate_test(spec, intervention, n_test, seed=seed) for intervention in interventions]
    cells = []
    for record in path.records:
        for name, test in zip(names, slices):
            scores = obs_scores(kind, record.theta_hat, test.X, test.y)
            cells.append(
                RiskCell(
                    lambda_=record.lambda_,
                    intervention=name,
                    mean_score=float(scores.mean()),
                    std_error=float(scores.std(ddof=1) / math.sqrt(scores.size)),
                )
            )
    logger.debug("Risk table: %d lambdas x %d interventions", len(path), len(slices))
    return RiskTable(kind=kind, n_test=n_test, cells=tuple(cells))


# ─── ENERGY DISTANCE ──────────────────────────────────────────────────

def _as_sample(name: str, values: ArrayLike) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if values.ndim != 2 or values.shape[0] < 1:
        raise InputError(f"{name} must be a non-empty n x k matrix, got shape {values.shape}")
    check_finite(name, values)
    return values


def energy_distance(a: ArrayLike, b: ArrayLike) -> float:
    """``2 E|A - B| - E|A - A'| - E|B - B'|`` over all pairs, Euclidean norm.

    Every mean runs over all ordered pairs, the zero diagonal included,
    which keeps the statistic non-negative.
    """
    a = _as_sample("a", a)
    b = _as_sample("b", b)
    if a.shape[1] != b.shape[1]:
        raise InputError(f"Samples differ in dimension: {a.shape[1]} vs {b.shape[1]}")
    between = cdist(a, b).mean()
    within_a = cdist(a, a).mean()
    within_b = cdist(b, b).mean()
    return max(float(2.0 * between - within_a - within_b), 0.0)


def _joint(env: EnvSlice) -> np.ndarray:
    return np.column_stack([env.X, env.y])


def rank_by_energy_distance(
    train: EnvDataset,
    candidates: Iterable[EnvSlice],
    max_points: int | None = 2000,
    seed: int = 0,
) -> list[tuple[str, float]]:
    """Order candidate environments by energy distance from the pooled training data.

    Distances use the joint ``(x, y)`` rows. Samples larger than
    ``max_points`` are subsampled without replacement from a fixed stream.

    Returns:
        ``(label, distance)`` pairs, largest distance first.
    """

    def thin(values: np.ndarray, key: str) -> np.ndarray:
        if max_points is None or values.shape[0] <= max_points:
            return values
        keep = stream(seed, "energy", key).choice(values.shape[0], size=max_points, replace=False)
        return values[np.sort(keep)]

    pooled = thin(_joint(train.pooled()), "pooled")
    ranked = [
        (env.label, energy_distance(pooled, thin(_joint(env), env.label)))
        for env in candidates
    ]
    return sorted(ranked, key=lambda item: (-item[1], item[0]))


# ─── TWO-COVARIATE EXAMPLE ────────────────────────────────────────────

#: Joint covariance of ``(eps_Y, eps_X1, eps_X2)``.
ILLUSTRATIVE_SIGMA = np.array([[3.0, 1.0, 1.0], [1.0, 1.0, 0.0], [1.0, 0.0, 1.0]])

ILLUSTRATIVE_CLASSES = ("do", "covariance")
ILLUSTRATIVE_PREDICTIONS = ("interventional", "observational")


def _illustrative_covariates(cls: str, t: float, eps_x: np.ndarray) -> np.ndarray:
    if cls == "do":
        return np.tile([t, -1.5 + t * t], (eps_x.shape[0], 1))
    return eps_x @ np.array([[1.0, t], [t, 1.0]]).T


def _illustrative_prediction(prediction: str, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x1, x2 = X[:, 0], X[:, 1]
    if prediction == "interventional":
        return x1, 0.5 * math.log(3.0) + x2
    return x1 + np.exp(x2) * (x1 + x2), x2


def illustrative_scores(
    t_grid: Sequence[float],
    n: int,
    seed: int,
    kinds: Sequence[ScoreKind] = ALL_SCORES,
) -> list[dict[str, float | str]]:
    """Monte Carlo mean scores in the two-covariate confounded example.

    ``Y = X1 + exp(X2) eps_Y`` with ``(eps_Y, eps_X)`` drawn from
    ``ILLUSTRATIVE_SIGMA``. Two predictions are scored:

    * ``interventional``: ``N(x1, 3 exp(2 x2))``, the law of ``Y`` under
      ``do(X = x)``.
    * ``observational``: ``N(x1 + exp(x2)(x1 + x2), exp(2 x2))``, the
      conditional law when ``X = eps_X``.

    They are scored under ``do(X1 = t, X2 = -1.5 + t^2)`` and under
    ``X = [[1, t], [t, 1]] eps_X``. A do-intervention cuts the
    dependence between ``eps_Y`` and ``X``.

    Returns:
        One row per ``(class, t, prediction, score)`` with the mean score
        and its standard error.
    """
    if n < 2:
        raise InputError(f"n must be at least 2, got {n}")
    factor = cholesky(ILLUSTRATIVE_SIGMA)
    rows: list[dict[str, float | str]] = []
    for cls in ILLUSTRATIVE_CLASSES:
        for k, t in enumerate(t_grid):
            t = float(t)
            noise = stream(seed, "illustrative", cls, k).standard_normal((n, 3)) @ factor.T
            eps_y, eps_x = noise[:, 0], noise[:, 1:]
            X = _illustrative_covariates(cls, t, eps_x)
            y = X[:, 0] + np.exp(X[:, 1]) * eps_y
            for prediction in ILLUSTRATIVE_PREDICTIONS:
                mean, log_sd = _illustrative_prediction(prediction, X)
                for kind in kinds:
                    scores = score_log_sd(kind, mean, log_sd, y)
                    rows.append({
                        "intervention": cls,
                        "t": t,
                        "prediction": prediction,
                        "score": kind.label,
                        "mean": float(scores.mean()),
                        "std_error": float(scores.std(ddof=1) / math.sqrt(n)),
                    })
    return rows
