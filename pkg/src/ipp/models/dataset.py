"""Multi-environment datasets ``{(x_i^e, y_i^e)}``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InputError
from ..utils.linalg import check_finite


@dataclass(frozen=True, eq=False)
class EnvSlice:
    """Observations from one environment: ``X`` is ``n x d``, ``y`` has length ``n``."""

    label: str
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise InputError(f"Environment '{self.label}': X must be 2-D, got {X.ndim}-D")
        if X.shape[0] != y.size:
            raise InputError(
                f"Environment '{self.label}': X has {X.shape[0]} rows but y has {y.size}"
            )
        if y.size < 1:
            raise InputError(f"Environment '{self.label}' has no observations")
        if X.shape[1] < 1:
            raise InputError(f"Environment '{self.label}' has no covariates")
        check_finite(f"X of environment '{self.label}'", X)
        check_finite(f"y of environment '{self.label}'", y)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "label", str(self.label))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def d(self) -> int:
        return int(self.X.shape[1])


@dataclass(frozen=True, eq=False)
class EnvDataset:
    """Two or more environments over the same ``d`` covariates."""

    environments: tuple[EnvSlice, ...]

    def __post_init__(self) -> None:
        envs = tuple(self.environments)
        if len(envs) < 2:
            raise InputError(f"A dataset needs at least 2 environments, got {len(envs)}")
        dims = {env.d for env in envs}
        if len(dims) != 1:
            raise InputError(f"Environments disagree on the covariate dimension: {sorted(dims)}")
        labels = [env.label for env in envs]
        if len(set(labels)) != len(labels):
            duplicates = sorted({label for label in labels if labels.count(label) > 1})
            raise InputError(f"Environment labels must be unique; repeated: {duplicates}")
        object.__setattr__(self, "environments", envs)

    @property
    def d(self) -> int:
        return self.environments[0].d

    @property
    def n_envs(self) -> int:
        return len(self.environments)

    @property
    def labels(self) -> list[str]:
        return [env.label for env in self.environments]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([env.n for env in self.environments], dtype=int)

    @property
    def n_total(self) -> int:
        return int(self.sizes.sum())

    def __iter__(self):
        return iter(self.environments)

    def __len__(self) -> int:
        return len(self.environments)

    def __getitem__(self, key: int | str) -> EnvSlice:
        if isinstance(key, str):
            for env in self.environments:
                if env.label == key:
                    return env
            raise KeyError(key)
        return self.environments[key]

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All observations as ``(X, y, env_index)`` in environment order."""
        X = np.vstack([env.X for env in self.environments])
        y = np.concatenate([env.y for env in self.environments])
        index = np.repeat(np.arange(self.n_envs), self.sizes)
        return X, y, index

    def pooled(self) -> EnvSlice:
        X, y, _ = self.stacked()
        return EnvSlice("pooled", X, y)

    def subset(self, labels: Sequence[str]) -> EnvDataset:
        return EnvDataset(tuple(self[label] for label in labels))

    def permuted(self, order: Sequence[int]) -> EnvDataset:
        if sorted(order) != list(range(self.n_envs)):
            raise InputError(f"{list(order)} is not a permutation of the environments")
        return EnvDataset(tuple(self.environments[i] for i in order))

    def __repr__(self) -> str:
        return f"EnvDataset(d={self.d}, environments={dict(zip(self.labels, self.sizes.tolist()))})"
