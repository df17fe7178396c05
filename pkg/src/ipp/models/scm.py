"""Structural causal model specification and test interventions.

The simulated model, for environments ``e = 1..E``::

    (eps_Y, eps_X) ~ N(0, sigma)            sigma[0, 0] == 1
    X^e = Gamma^e eps_X
    Y^e = beta @ X^e + exp(gamma @ X^e) * eps_Y

The first row/column of ``sigma`` belongs to ``eps_Y``; its off-diagonal
entries are the confounding between covariates and noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np

from ..errors import DecompositionError, InputError
from ..utils.linalg import check_finite, cholesky
from ..utils.rng import stream
from .params import ModelParams

#: Intervention matrices closer to singular than this are rejected.
MIN_ABS_DETERMINANT = 1e-12


def _frozen_matrix(name: str, values: Any) -> np.ndarray:
    matrix = np.array(values, dtype=float)
    check_finite(name, matrix)
    matrix.setflags(write=False)
    return matrix


def _check_invertible(name: str, matrix: np.ndarray, d: int) -> None:
    if matrix.shape != (d, d):
        raise InputError(f"{name} must be {d}x{d}, got shape {matrix.shape}")
    if abs(np.linalg.det(matrix)) <= MIN_ABS_DETERMINANT:
        raise DecompositionError(f"{name} is singular (|det| <= {MIN_ABS_DETERMINANT})")


@dataclass(frozen=True, eq=False)
class ScmSpec:
    """The data-generating model: noise covariance, coefficients and per-environment Gammas."""

    d: int
    sigma: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    train_gammas: tuple[np.ndarray, ...]
    seed: int
    #: Mixing weights of the last environment, when it was generated as a
    #: combination of the others.
    alphas: np.ndarray | None = None

    def __post_init__(self) -> None:
        d = int(self.d)
        if d < 1:
            raise InputError(f"d must be at least 1, got {d}")
        sigma = _frozen_matrix("sigma", self.sigma)
        if sigma.shape != (d + 1, d + 1):
            raise InputError(f"sigma must be {d + 1}x{d + 1}, got shape {sigma.shape}")
        if sigma[0, 0] != 1.0:
            raise InputError(f"sigma[0, 0] (variance of eps_Y) must be 1, got {sigma[0, 0]}")
        cholesky(sigma, "sigma")
        beta = _frozen_matrix("beta", self.beta).reshape(-1)
        gamma = _frozen_matrix("gamma", self.gamma).reshape(-1)
        if beta.size != d or gamma.size != d:
            raise InputError(f"beta and gamma must have {d} entries")
        gammas = tuple(_frozen_matrix(f"train_gammas[{k}]", g) for k, g in enumerate(self.train_gammas))
        if len(gammas) < 2:
            raise InputError(f"At least 2 training environments are required, got {len(gammas)}")
        for k, matrix in enumerate(gammas):
            _check_invertible(f"train_gammas[{k}]", matrix, d)
        if int(self.seed) < 0:
            raise InputError(f"seed must be non-negative, got {self.seed}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "train_gammas", gammas)
        object.__setattr__(self, "seed", int(self.seed))
        if self.alphas is not None:
            object.__setattr__(self, "alphas", _frozen_matrix("alphas", self.alphas).reshape(-1))

    @property
    def n_envs(self) -> int:
        return len(self.train_gammas)

    @property
    def sigma_x(self) -> np.ndarray:
        """Covariance of ``eps_X``."""
        return self.sigma[1:, 1:]

    @property
    def sigma_yx(self) -> np.ndarray:
        """Covariance between ``eps_X`` and ``eps_Y``."""
        return self.sigma[1:, 0]

    def env_covariance(self, env: int) -> np.ndarray:
        """Population covariance of ``X^e``, ``Gamma^e Sigma_X (Gamma^e)^T``."""
        g = self.train_gammas[env]
        return g @ self.sigma_x @ g.T

    def truth(self) -> ModelParams:
        """The true location/scale coefficients, with zero intercepts."""
        return ModelParams(0.0, self.beta, 0.0, self.gamma)

    def to_dict(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "sigma": self.sigma.tolist(),
            "beta": self.beta.tolist(),
            "gamma": self.gamma.tolist(),
            "train_gammas": [g.tolist() for g in self.train_gammas],
            "seed": self.seed,
            "alphas": None if self.alphas is None else self.alphas.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScmSpec:
        try:
            return cls(
                d=int(data["d"]),
                sigma=data["sigma"],
                beta=data["beta"],
                gamma=data["gamma"],
                train_gammas=tuple(data["train_gammas"]),
                seed=int(data["seed"]),
                alphas=data.get("alphas"),
            )
        except KeyError as exc:
            raise InputError(f"Spec is missing field {exc.args[0]!r}") from None


# ─── INTERVENTIONS ────────────────────────────────────────────────────

@dataclass(frozen=True)
class Intervention:
    """Base class for test-time interventions on ``eps_X``.

    An intervention maps noise to covariates as
    ``X = eps_X @ gamma_matrix(d).T + shift(d)``; the structural equation
    for ``Y`` is never touched.
    """

    name: ClassVar[str] = ""

    def validate(self, d: int) -> None:
        """Raise InputError if the intervention cannot act in dimension ``d``."""

    def gamma_matrix(self, d: int) -> np.ndarray:
        return np.eye(d)

    def shift(self, d: int) -> np.ndarray:
        return np.zeros(d)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.name}

    @property
    def label(self) -> str:
        return self.name


@dataclass(frozen=True)
class Observational(Intervention):
    """``X = eps_X``."""

    name: ClassVar[str] = "observational"


@dataclass(frozen=True)
class Pooled(Intervention):
    """Draws from the training mixture, an equal share per training environment."""

    name: ClassVar[str] = "pooled"


@dataclass(frozen=True)
class VarianceScale(Intervention):
    """``X = c * eps_X``."""

    name: ClassVar[str] = "variance"
    c: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.c) and self.c > 0):
            raise InputError(f"Variance scale c must be positive, got {self.c}")

    def gamma_matrix(self, d: int) -> np.ndarray:
        return self.c * np.eye(d)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.name, "c": self.c}

    @property
    def label(self) -> str:
        return f"variance(c={self.c:g})"


@dataclass(frozen=True)
class CorrelationPerturb(Intervention):
    """``X = Gamma eps_X`` with ``Gamma_ij = 1{i=j} + Unif(-width, width)``."""

    name: ClassVar[str] = "correlation"
    width: float = 0.75
    seed: int = 0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.width) and self.width >= 0):
            raise InputError(f"Correlation width must be non-negative, got {self.width}")

    def gamma_matrix(self, d: int) -> np.ndarray:
        rng = stream(self.seed, "correlation", d)
        return np.eye(d) + rng.uniform(-self.width, self.width, size=(d, d))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.name, "width": self.width, "seed": self.seed}

    @property
    def label(self) -> str:
        return f"correlation(width={self.width:g})"


@dataclass(frozen=True, eq=False)
class MeanShiftOrthogonal(Intervention):
    """``X = eps_X + delta - gamma_ref (delta @ gamma_ref) / |gamma_ref|^2``.

    ``delta_j ~ Unif(-range, range)``; the shift has zero inner product
    with ``gamma_ref``.
    """

    name: ClassVar[str] = "orthogonal-shift"
    range: float = 5.0
    gamma_ref: np.ndarray = field(default_factory=lambda: np.ones(1))
    seed: int = 0

    def __post_init__(self) -> None:
        ref = _frozen_matrix("gamma_ref", self.gamma_ref).reshape(-1)
        if not np.linalg.norm(ref) > 0:
            raise InputError("Mean shift needs a non-zero reference direction gamma_ref")
        if not (np.isfinite(self.range) and self.range >= 0):
            raise InputError(f"Shift range must be non-negative, got {self.range}")
        object.__setattr__(self, "gamma_ref", ref)

    def validate(self, d: int) -> None:
        if self.gamma_ref.size != d:
            raise InputError(f"gamma_ref has {self.gamma_ref.size} entries, expected {d}")

    def shift(self, d: int) -> np.ndarray:
        self.validate(d)
        delta = stream(self.seed, "mean-shift", d).uniform(-self.range, self.range, size=d)
        ref = self.gamma_ref
        return delta - ref * (delta @ ref) / (ref @ ref)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.name,
            "range": self.range,
            "gamma_ref": self.gamma_ref.tolist(),
            "seed": self.seed,
        }

    @property
    def label(self) -> str:
        return f"orthogonal-shift(range={self.range:g},seed={self.seed})"


@dataclass(frozen=True, eq=False)
class CustomGamma(Intervention):
    """``X = matrix @ eps_X`` for a user-supplied invertible matrix."""

    name: ClassVar[str] = "custom"
    matrix: np.ndarray = field(default_factory=lambda: np.eye(1))

    def __post_init__(self) -> None:
        object.__setattr__(self, "matrix", _frozen_matrix("matrix", self.matrix))

    def validate(self, d: int) -> None:
        _check_invertible("custom Gamma", self.matrix, d)

    def gamma_matrix(self, d: int) -> np.ndarray:
        self.validate(d)
        return np.array(self.matrix)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.name, "matrix": self.matrix.tolist()}


_INTERVENTION_TYPES: dict[str, type[Intervention]] = {
    cls.name: cls
    for cls in (Observational, Pooled, VarianceScale, CorrelationPerturb, MeanShiftOrthogonal, CustomGamma)
}

#: CLI names of the test interventions used in the simulation study.
INTERVENTION_NAMES = (
    "pooled",
    "observational",
    "low-variance",
    "high-variance",
    "correlation",
    "orthogonal-shift",
)

DEFAULT_INTERVENTIONS = ("pooled", "low-variance", "high-variance", "correlation", "orthogonal-shift")


def intervention_from_dict(data: dict[str, Any]) -> Intervention:
    kind = data.get("kind")
    if kind not in _INTERVENTION_TYPES:
        raise InputError(f"Unknown intervention kind {kind!r}. Valid: {sorted(_INTERVENTION_TYPES)}")
    fields_ = {k: v for k, v in data.items() if k != "kind"}
    return _INTERVENTION_TYPES[kind](**fields_)


def parse_intervention(name: str, spec: ScmSpec, seed: int = 0) -> Intervention:
    """Build one of the named simulation-study interventions.

    Args:
        name: One of ``INTERVENTION_NAMES``.
        spec: Supplies ``gamma`` for the orthogonal mean shift.
        seed: Seed for interventions that draw random structure.
    """
    key = name.strip().lower()
    if key == "pooled":
        return Pooled()
    if key == "observational":
        return Observational()
    if key == "low-variance":
        return VarianceScale(c=1 / 3)
    if key == "high-variance":
        return VarianceScale(c=3 / 2)
    if key == "correlation":
        return CorrelationPerturb(width=0.75, seed=seed)
    if key == "orthogonal-shift":
        return MeanShiftOrthogonal(range=5.0, gamma_ref=spec.gamma, seed=seed)
    raise InputError(f"Unknown intervention '{name}'. Valid: {list(INTERVENTION_NAMES)}")
