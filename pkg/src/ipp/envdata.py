"""Simulation of multi-environment data from the structural causal model.

Training environments ``e = 1..d`` use ``Gamma^e = I + Unif(-0.1, 0.1)``;
environment ``d + 1`` mixes them with non-positive weights summing to -1,
which pushes its covariates to the opposite side of the others.
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import DecompositionError, InputError
from .models.dataset import EnvDataset, EnvSlice
from .models.file_formats import load_csv, save_csv
from .models.scm import Intervention, Pooled, ScmSpec
from .utils.linalg import cholesky
from .utils.rng import stream

logger = logging.getLogger(__name__)

#: Confounding between ``eps_Y`` and ``eps_X`` used for ``d = 5``.
DEFAULT_CONFOUNDING = (0.8, -0.4, 0.3, -0.2, 0.1)
CONFOUNDING_RANGE = 0.5
MAX_SPEC_ATTEMPTS = 100
BETA_RANGE = (0.0, 3.0)
GAMMA_RANGE = (0.0, 0.5)
TRAIN_PERTURBATION = 0.1

__all__ = [
    "make_default_spec",
    "simulate_training",
    "simulate_test",
    "load_csv",
    "save_csv",
]


def _sigma_from_row(row: np.ndarray) -> np.ndarray:
    d = row.size
    sigma = np.eye(d + 1)
    sigma[0, 1:] = row
    sigma[1:, 0] = row
    return sigma


def _confounded_sigma(d: int, seed: int) -> np.ndarray:
    if d == len(DEFAULT_CONFOUNDING):
        return _sigma_from_row(np.array(DEFAULT_CONFOUNDING))
    for attempt in range(MAX_SPEC_ATTEMPTS):
        row = stream(seed, "confounding", attempt).uniform(-CONFOUNDING_RANGE, CONFOUNDING_RANGE, size=d)
        sigma = _sigma_from_row(row)
        try:
            cholesky(sigma)
        except DecompositionError:
            logger.debug("Confounding draw %d is not positive definite, retrying", attempt)
            continue
        return sigma
    raise DecompositionError(
        f"No positive definite covariance found for d={d} after {MAX_SPEC_ATTEMPTS} attempts"
    )


def make_default_spec(d: int, seed: int, confounded: bool = True) -> ScmSpec:
    """The simulation-study model in dimension ``d``.

    Args:
        d: Number of covariates; ``d + 1`` training environments are built.
        seed: Root seed for every random component of the spec.
        confounded: If false, ``eps_Y`` is independent of ``eps_X``.

    Raises:
        InputError: If ``d < 1``.
        DecompositionError: If no positive definite covariance is found.
    """
    if d < 1:
        raise InputError(f"d must be at least 1, got {d}")
    if seed < 0:
        raise InputError(f"seed must be non-negative, got {seed}")
    sigma = _confounded_sigma(d, seed) if confounded else np.eye(d + 1)

    rng = stream(seed, "coefficients")
    beta = rng.uniform(*BETA_RANGE, size=d)
    gamma = rng.uniform(*GAMMA_RANGE, size=d)

    rng = stream(seed, "environments")
    gammas = [np.eye(d) + rng.uniform(-TRAIN_PERTURBATION, TRAIN_PERTURBATION, size=(d, d)) for _ in range(d)]
    if d == 1:
        # A single base environment; give the mixture a second one to mix.
        gammas.append(np.eye(1) + rng.uniform(-TRAIN_PERTURBATION, TRAIN_PERTURBATION, size=(1, 1)))
    w = rng.uniform(0.0, 1.0, size=len(gammas))
    alphas = -w / w.sum()
    gammas.append(np.tensordot(alphas, np.stack(gammas), axes=1))

    return ScmSpec(
        d=d,
        sigma=sigma,
        beta=beta,
        gamma=gamma,
        train_gammas=tuple(gammas),
        seed=seed,
        alphas=alphas,
    )


def _draw_noise(spec: ScmSpec, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(eps_Y, eps_X)`` rows drawn from ``N(0, sigma)``."""
    factor = cholesky(spec.sigma)
    joint = rng.standard_normal((n, spec.d + 1)) @ factor.T
    return joint[:, 0], joint[:, 1:]


def _outcome(spec: ScmSpec, X: np.ndarray, eps_y: np.ndarray) -> np.ndarray:
    return X @ spec.beta + np.exp(X @ spec.gamma) * eps_y


def simulate_training(spec: ScmSpec, n_per_env: int) -> EnvDataset:
    """Draw ``n_per_env`` observations from every training environment.

    Environment ``k`` uses its own stream, so its draws do not depend on
    how much data the other environments get.
    """
    if n_per_env < 2:
        raise InputError(f"n_per_env must be at least 2, got {n_per_env}")
    environments = []
    for k, gamma_matrix in enumerate(spec.train_gammas):
        eps_y, eps_x = _draw_noise(spec, stream(spec.seed, "train", k), n_per_env)
        X = eps_x @ gamma_matrix.T
        environments.append(EnvSlice(f"env{k + 1}", X, _outcome(spec, X, eps_y)))
    logger.debug("Simulated %d environments x %d rows (d=%d)", spec.n_envs, n_per_env, spec.d)
    return EnvDataset(tuple(environments))


def simulate_test(
    spec: ScmSpec, intervention: Intervention, n: int, seed: int | None = None
) -> EnvSlice:
    """Draw a test slice under ``intervention``; ``Y`` keeps its structural equation.

    ``Pooled`` splits ``n`` as evenly as possible over the training
    environments, earlier environments taking the remainder.
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    intervention.validate(spec.d)
    root = spec.seed if seed is None else seed
    eps_y, eps_x = _draw_noise(spec, stream(root, "test", intervention.label), n)

    if isinstance(intervention, Pooled):
        shares = np.full(spec.n_envs, n // spec.n_envs)
        shares[: n % spec.n_envs] += 1
        owner = np.repeat(np.arange(spec.n_envs), shares)
        stacked = np.stack(spec.train_gammas)[owner]
        X = np.einsum("nij,nj->ni", stacked, eps_x)
    else:
        X = eps_x @ intervention.gamma_matrix(spec.d).T + intervention.shift(spec.d)
    return EnvSlice(intervention.label, X, _outcome(spec, X, eps_y))
