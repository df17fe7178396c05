"""Fitting configuration and the result records produced by the pipeline."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, NamedTuple

import numpy as np

from ..errors import InputError
from .params import ModelParams
from .prediction import LOGS, ScoreKind

#: ``{0, 0.5, 1, ..., 15}``.
DEFAULT_LAMBDA_GRID: tuple[float, ...] = tuple(0.5 * k for k in range(31))
DEFAULT_BOX: tuple[float, float] = (-5.0, 5.0)
DEFAULT_ALPHA = 0.05

#: Allowed deviation of convex weights from summing to one.
WEIGHT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    """Multi-start bounded Nelder-Mead with an optional L-BFGS-B polish."""

    n_starts: int = 20
    maxiter: int = 4000
    xatol: float = 1e-8
    fatol: float = 1e-10
    polish: bool = True
    threads: int = 1

    def __post_init__(self) -> None:
        if self.n_starts < 1:
            raise InputError(f"n_starts must be at least 1, got {self.n_starts}")
        if self.maxiter < 1:
            raise InputError(f"maxiter must be at least 1, got {self.maxiter}")
        if self.threads < 1:
            raise InputError(f"threads must be at least 1, got {self.threads}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class FitConfig:
    """Everything ``fit`` needs besides the data.

    ``weights=None`` means uniform weights ``1/E``, resolved against the
    dataset at fit time.
    """

    kind: ScoreKind = LOGS
    weights: tuple[float, ...] | None = None
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    box: tuple[float, float] = DEFAULT_BOX
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    warm_start: bool = True

    def __post_init__(self) -> None:
        grid = tuple(float(v) for v in self.lambda_grid)
        if not grid:
            raise InputError("lambda_grid must not be empty")
        if not np.all(np.isfinite(grid)):
            raise InputError("lambda_grid must be finite")
        if grid[0] < 0:
            raise InputError(f"lambda_grid must start at a value >= 0, got {grid[0]}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise InputError("lambda_grid must be strictly increasing")
        object.__setattr__(self, "lambda_grid", grid)

        lo, hi = (float(v) for v in self.box)
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise InputError(f"box must satisfy lo <= hi, got ({lo}, {hi})")
        object.__setattr__(self, "box", (lo, hi))

        if self.weights is not None:
            weights = tuple(float(w) for w in self.weights)
            _check_weights(weights)
            object.__setattr__(self, "weights", weights)

    def resolved_weights(self, n_envs: int) -> np.ndarray:
        if self.weights is None:
            return np.full(n_envs, 1.0 / n_envs)
        if len(self.weights) != n_envs:
            raise InputError(
                f"{len(self.weights)} weights given for {n_envs} environments"
            )
        return np.array(self.weights)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.to_dict(),
            "weights": None if self.weights is None else list(self.weights),
            "lambda_grid": list(self.lambda_grid),
            "box": list(self.box),
            "optimizer": self.optimizer.to_dict(),
            "seed": self.seed,
            "warm_start": self.warm_start,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FitConfig:
        return cls(
            kind=ScoreKind.from_dict(data["kind"]),
            weights=data.get("weights"),
            lambda_grid=tuple(data["lambda_grid"]),
            box=tuple(data["box"]),
            optimizer=OptimizerConfig(**data.get("optimizer", {})),
            seed=int(data.get("seed", 0)),
            warm_start=bool(data.get("warm_start", True)),
        )


def _check_weights(weights: tuple[float, ...]) -> None:
    if any(not np.isfinite(w) or w < 0 for w in weights):
        raise InputError(f"Weights must be finite and non-negative, got {list(weights)}")
    if abs(sum(weights) - 1.0) > WEIGHT_TOLERANCE:
        raise InputError(f"Weights must sum to 1, got {sum(weights)!r}")


@dataclass(frozen=True, eq=False)
class FitRecord:
    """The fit at one penalty value."""

    lambda_: float
    theta_hat: ModelParams
    env_risks: np.ndarray
    penalty: float
    objective: float
    pooled_risk: float
    #: Final objective of every restart, in start order.
    restart_objectives: tuple[float, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lambda_,
            "theta_hat": self.theta_hat.to_dict(),
            "env_risks": np.asarray(self.env_risks).tolist(),
            "penalty": self.penalty,
            "objective": self.objective,
            "pooled_risk": self.pooled_risk,
            "restart_objectives": [_json_float(v) for v in self.restart_objectives],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FitRecord:
        return cls(
            lambda_=float(data["lambda"]),
            theta_hat=ModelParams.from_dict(data["theta_hat"]),
            env_risks=np.array(data["env_risks"], dtype=float),
            penalty=float(data["penalty"]),
            objective=float(data["objective"]),
            pooled_risk=float(data["pooled_risk"]),
            restart_objectives=tuple(
                float("inf") if v is None else float(v)
                for v in data.get("restart_objectives", [])
            ),
        )


def _json_float(value: float) -> float | None:
    """JSON has no infinity; failed restarts serialize as null."""
    return float(value) if np.isfinite(value) else None


@dataclass(frozen=True, eq=False)
class FitPath:
    """Fits over the whole lambda grid, in ascending lambda order."""

    records: tuple[FitRecord, ...]
    labels: tuple[str, ...]
    kind: ScoreKind
    weights: np.ndarray

    def __post_init__(self) -> None:
        if not self.records:
            raise InputError("A fit path needs at least one record")
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    @property
    def lambdas(self) -> list[float]:
        return [r.lambda_ for r in self.records]

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def at(self, lambda_: float) -> FitRecord:
        for record in self.records:
            if np.isclose(record.lambda_, lambda_, rtol=0.0, atol=1e-12):
                return record
        raise KeyError(f"lambda={lambda_} is not on the fitted grid {self.lambdas}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.to_dict(),
            "labels": list(self.labels),
            "weights": self.weights.tolist(),
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> FitPath:
        return cls(
            records=tuple(FitRecord.from_dict(r) for r in data["records"]),
            labels=tuple(data["labels"]),
            kind=ScoreKind.from_dict(data["kind"]),
            weights=np.array(data["weights"], dtype=float),
        )

    def long_rows(self) -> list[tuple[float, str, float]]:
        """``(lambda, field, value)`` rows for a plot-ready long table."""
        rows: list[tuple[float, str, float]] = []
        for record in self.records:
            lam = record.lambda_
            rows.append((lam, "objective", record.objective))
            rows.append((lam, "penalty", record.penalty))
            rows.append((lam, "pooled_risk", record.pooled_risk))
            for label, risk in zip(self.labels, record.env_risks):
                rows.append((lam, f"risk[{label}]", float(risk)))
            theta = record.theta_hat
            rows.append((lam, "beta0", theta.beta0))
            rows.extend((lam, f"beta{j + 1}", float(v)) for j, v in enumerate(theta.beta))
            rows.append((lam, "gamma0", theta.gamma0))
            rows.extend((lam, f"gamma{j + 1}", float(v)) for j, v in enumerate(theta.gamma))
        return rows


class MonotonicityReport(NamedTuple):
    d_nonincreasing: bool
    pooled_nondecreasing: bool


@dataclass(frozen=True)
class WelchResult:
    """Welch's heteroscedastic one-way test of equal group means."""

    statistic: float
    df1: float
    df2: float
    p_value: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class LambdaChoice:
    """The selected penalty and the p-values that led to it."""

    lambda_hat: float
    p_values: tuple[tuple[float, float], ...]
    alpha: float
    fallback_used: bool

    def monotonicity_violations(self) -> list[float]:
        """Lambdas at which the p-value dropped below the previous one."""
        return [
            lam
            for (_, p_prev), (lam, p) in zip(self.p_values, self.p_values[1:])
            if p < p_prev
        ]

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda_hat": self.lambda_hat,
            "alpha": self.alpha,
            "fallback_used": self.fallback_used,
            "p_values": [{"lambda": lam, "p_value": p} for lam, p in self.p_values],
            "p_value_drops": self.monotonicity_violations(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> LambdaChoice:
        return cls(
            lambda_hat=float(data["lambda_hat"]),
            p_values=tuple((float(e["lambda"]), float(e["p_value"])) for e in data["p_values"]),
            alpha=float(data["alpha"]),
            fallback_used=bool(data["fallback_used"]),
        )


@dataclass(frozen=True)
class BiasVariance:
    """Error decomposition of replicated estimates for the beta and gamma blocks."""

    mean_sq_error_beta: float
    sq_bias_beta: float
    variance_beta: float
    mean_sq_error_gamma: float
    sq_bias_gamma: float
    variance_gamma: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class ReplicationSummary:
    """Per-(n, lambda) error decompositions plus how often each lambda was chosen."""

    lambda_grid: tuple[float, ...]
    #: ``rows[(n, lambda)]``.
    rows: dict[tuple[int, float], BiasVariance]
    #: ``selection_counts[n][k]`` counts choices of ``lambda_grid[k]``.
    selection_counts: dict[int, tuple[int, ...]]
    #: Error decomposition at the selected lambda, per n.
    selected: dict[int, BiasVariance] = field(default_factory=dict)

    def table_rows(self) -> list[dict[str, Any]]:
        """Two rows (beta and gamma blocks) per ``(n, lambda)``."""
        out: list[dict[str, Any]] = []
        for (n, lam), bv in sorted(self.rows.items()):
            count = self.selection_counts[n][self.lambda_grid.index(lam)]
            for block in ("beta", "gamma"):
                out.append({
                    "n": n,
                    "lambda": lam,
                    "block": block,
                    "mse": getattr(bv, f"mean_sq_error_{block}"),
                    "sq_bias": getattr(bv, f"sq_bias_{block}"),
                    "variance": getattr(bv, f"variance_{block}"),
                    "selected_count": count,
                })
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda_grid": list(self.lambda_grid),
            "rows": self.table_rows(),
            "selection_counts": {str(n): list(c) for n, c in sorted(self.selection_counts.items())},
            "selected": {str(n): bv.to_dict() for n, bv in sorted(self.selected.items())},
        }


@dataclass(frozen=True)
class RiskCell:
    lambda_: float
    intervention: str
    mean_score: float
    std_error: float


@dataclass(frozen=True)
class RiskTable:
    """Mean test scores of each fitted lambda under each intervention."""

    kind: ScoreKind
    n_test: int
    cells: tuple[RiskCell, ...]

    @property
    def interventions(self) -> list[str]:
        return list(dict.fromkeys(c.intervention for c in self.cells))

    @property
    def lambdas(self) -> list[float]:
        return list(dict.fromkeys(c.lambda_ for c in self.cells))

    def value(self, lambda_: float, intervention: str) -> RiskCell:
        for cell in self.cells:
            if cell.intervention == intervention and np.isclose(cell.lambda_, lambda_, rtol=0, atol=1e-12):
                return cell
        raise KeyError((lambda_, intervention))

    def worst_case(self, lambda_: float) -> float:
        """Largest mean score over the interventions at one lambda."""
        return max(c.mean_score for c in self.cells if np.isclose(c.lambda_, lambda_, rtol=0, atol=1e-12))

    def spread(self, lambda_: float) -> float:
        """Range of mean scores over the interventions at one lambda."""
        values = [c.mean_score for c in self.cells if np.isclose(c.lambda_, lambda_, rtol=0, atol=1e-12)]
        return max(values) - min(values)

    def tidy_rows(self) -> list[tuple[float, str, str, float]]:
        return [(c.lambda_, c.intervention, "mean_score", c.mean_score) for c in self.cells]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.to_dict(),
            "n_test": self.n_test,
            "cells": [
                {
                    "lambda": c.lambda_,
                    "intervention": c.intervention,
                    "mean_score": c.mean_score,
                    "std_error": c.std_error,
                }
                for c in self.cells
            ],
        }
