"""Gaussian predictive distributions and the scoring rules that judge them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from ..errors import DomainError, InputError


@dataclass(frozen=True)
class GaussianPrediction:
    """A univariate normal predictive distribution ``N(mean, sd**2)``."""

    mean: float
    sd: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mean) and math.isfinite(self.sd)):
            raise InputError(
                f"Prediction must be finite, got mean={self.mean}, sd={self.sd}"
            )
        if self.sd <= 0:
            raise DomainError(f"Standard deviation must be positive, got {self.sd}")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "sd", float(self.sd))

    @property
    def variance(self) -> float:
        return self.sd**2

    def to_dict(self) -> dict:
        return {"mean": self.mean, "sd": self.sd}


class ScoreName(str, Enum):
    """Identifiers of the supported scoring rules, as spelled on the CLI."""

    LOGS = "logs"
    CRPS = "crps"
    SCRPS = "scrps"
    QS = "qs"
    PSEUDOS = "pseudos"
    HYVS = "hyvs"


#: Pseudospherical exponent used unless one is given.
DEFAULT_PSEUDOS_ALPHA = 2.0

#: Rules with a sample-based estimator in ``score_samples``.
SAMPLE_SCORES = frozenset({ScoreName.CRPS, ScoreName.SCRPS})


@dataclass(frozen=True)
class ScoreKind:
    """A scoring rule, with the exponent for the pseudospherical score.

    ``alpha`` is carried for every rule so kinds compare and serialize
    uniformly; it only affects ``PSEUDOS``.
    """

    name: ScoreName
    alpha: float = DEFAULT_PSEUDOS_ALPHA

    def __post_init__(self) -> None:
        object.__setattr__(self, "name", ScoreName(self.name))
        if self.name is ScoreName.PSEUDOS and not self.alpha > 1:
            raise DomainError(
                f"Pseudospherical score requires alpha > 1, got {self.alpha}"
            )

    @classmethod
    def parse(cls, text: str, alpha: float = DEFAULT_PSEUDOS_ALPHA) -> ScoreKind:
        """Parse a CLI name such as ``"scrps"`` (case-insensitive)."""
        try:
            name = ScoreName(text.strip().lower())
        except ValueError:
            raise InputError(
                f"Unknown score '{text}'. Valid: {[s.value for s in ScoreName]}"
            ) from None
        return cls(name, alpha)

    @property
    def label(self) -> str:
        if self.name is ScoreName.PSEUDOS:
            return f"pseudos(alpha={self.alpha:g})"
        return self.name.value

    def to_dict(self) -> dict:
        return {"name": self.name.value, "alpha": self.alpha}

    @classmethod
    def from_dict(cls, data: dict) -> ScoreKind:
        return cls(ScoreName(data["name"]), float(data.get("alpha", DEFAULT_PSEUDOS_ALPHA)))


LOGS = ScoreKind(ScoreName.LOGS)
CRPS = ScoreKind(ScoreName.CRPS)
SCRPS = ScoreKind(ScoreName.SCRPS)
QS = ScoreKind(ScoreName.QS)
PSEUDOS = ScoreKind(ScoreName.PSEUDOS)
HYVS = ScoreKind(ScoreName.HYVS)

ALL_SCORES = (LOGS, CRPS, SCRPS, QS, PSEUDOS, HYVS)
