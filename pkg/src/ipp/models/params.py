"""Parameters of the heteroscedastic Gaussian linear model.

The predictive distribution for covariates ``x`` is::

    N(beta0 + beta @ x, exp(2 * (gamma0 + gamma @ x)))

Flat vector layout, used by the optimizer and gradients::

    +-------+-----------+--------+------------+
    | beta0 | beta (d)  | gamma0 | gamma (d)  |
    +-------+-----------+--------+------------+
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import InputError
from ..utils.linalg import check_finite


def _frozen_vector(name: str, values: Any) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(-1)
    check_finite(name, array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Location/scale coefficients ``(beta0, beta, gamma0, gamma)``."""

    beta0: float
    beta: np.ndarray
    gamma0: float
    gamma: np.ndarray

    def __post_init__(self) -> None:
        beta = _frozen_vector("beta", self.beta)
        gamma = _frozen_vector("gamma", self.gamma)
        if beta.size < 1:
            raise InputError("beta must have at least one entry")
        if beta.size != gamma.size:
            raise InputError(
                f"beta and gamma must have equal dimension, got {beta.size} and {gamma.size}"
            )
        check_finite("beta0", self.beta0)
        check_finite("gamma0", self.gamma0)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "beta0", float(self.beta0))
        object.__setattr__(self, "gamma0", float(self.gamma0))

    @property
    def d(self) -> int:
        return int(self.beta.size)

    @property
    def size(self) -> int:
        """Length of the flat parameter vector, ``2d + 2``."""
        return 2 * self.d + 2

    @classmethod
    def zeros(cls, d: int) -> ModelParams:
        return cls(0.0, np.zeros(d), 0.0, np.zeros(d))

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.beta0], self.beta, [self.gamma0], self.gamma))

    @classmethod
    def from_vector(cls, vector: Any, d: int) -> ModelParams:
        vector = np.asarray(vector, dtype=float).reshape(-1)
        if vector.size != 2 * d + 2:
            raise InputError(
                f"Parameter vector for d={d} must have {2 * d + 2} entries, got {vector.size}"
            )
        return cls(
            beta0=vector[0],
            beta=vector[1 : d + 1],
            gamma0=vector[d + 1],
            gamma=vector[d + 2 :],
        )

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_vector()))

    def allclose(self, other: ModelParams, atol: float = 1e-12, rtol: float = 0.0) -> bool:
        return self.d == other.d and bool(
            np.allclose(self.to_vector(), other.to_vector(), atol=atol, rtol=rtol)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ModelParams):
            return NotImplemented
        return self.d == other.d and bool(np.array_equal(self.to_vector(), other.to_vector()))

    __hash__ = None  # type: ignore[assignment]

    def to_dict(self) -> dict[str, Any]:
        return {
            "beta0": self.beta0,
            "beta": self.beta.tolist(),
            "gamma0": self.gamma0,
            "gamma": self.gamma.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ModelParams:
        unknown = set(data) - {"beta0", "beta", "gamma0", "gamma"}
        if unknown:
            raise InputError(f"Unknown parameter fields {sorted(unknown)}")
        try:
            return cls(
                beta0=float(data.get("beta0", 0.0)),
                beta=data["beta"],
                gamma0=float(data.get("gamma0", 0.0)),
                gamma=data["gamma"],
            )
        except KeyError as exc:
            raise InputError(f"Parameter object is missing {exc.args[0]!r}") from None

    def __repr__(self) -> str:
        return (
            f"ModelParams(beta0={self.beta0:.6g}, beta={np.round(self.beta, 6).tolist()}, "
            f"gamma0={self.gamma0:.6g}, gamma={np.round(self.gamma, 6).tolist()})"
        )
