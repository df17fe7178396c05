"""Penalty selection with Welch's heteroscedastic one-way test.

A fit is accepted once the test no longer rejects equal risks across
environments: the chosen penalty is the smallest grid value whose
per-observation scores give ``p >= alpha``. If no grid value qualifies,
the largest one is returned and the choice is flagged as a fallback.

The test is run on the training data the path was fitted on.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from .errors import DegenerateInputError, InputError
from .model import obs_scores
from .models.dataset import EnvDataset
from .models.params import ModelParams
from .models.prediction import ScoreKind
from .models.results import DEFAULT_ALPHA, FitPath, LambdaChoice, WelchResult

logger = logging.getLogger(__name__)


def welch_oneway(groups: Sequence[ArrayLike]) -> WelchResult:
    """Welch's one-way ANOVA for equal means under unequal variances.

    With ``w_e = n_e / s_e^2`` and ``W = sum w_e``::

        A     = sum w_e (m_e - m)^2 / (E - 1),    m = sum w_e m_e / W
        L     = sum (1 - w_e / W)^2 / (n_e - 1)
        F     = A / (1 + 2 (E - 2) L / (E^2 - 1))
        df2   = (E^2 - 1) / (3 L)

    and ``p`` is the upper tail of ``F(E - 1, df2)``.

    Raises:
        InputError: Fewer than 2 groups, or a group with fewer than 2 values.
        DegenerateInputError: A group with zero sample variance.
    """
    arrays = [np.asarray(g, dtype=float).reshape(-1) for g in groups]
    k = len(arrays)
    if k < 2:
        raise InputError(f"Welch's test needs at least 2 groups, got {k}")
    for index, values in enumerate(arrays):
        if values.size < 2:
            raise InputError(f"Group {index} has {values.size} observation(s); at least 2 are needed")
        if not np.all(np.isfinite(values)):
            raise InputError(f"Group {index} contains non-finite values")

    n = np.array([a.size for a in arrays], dtype=float)
    means = np.array([a.mean() for a in arrays])
    variances = np.array([a.var(ddof=1) for a in arrays])
    if np.any(variances <= 0):
        index = int(np.flatnonzero(variances <= 0)[0])
        raise DegenerateInputError(f"Group {index} has zero variance")

    w = n / variances
    total = w.sum()
    grand = (w @ means) / total
    numerator = (w @ (means - grand) ** 2) / (k - 1)
    lam = np.sum((1.0 - w / total) ** 2 / (n - 1))
    denominator = 1.0 + 2.0 * (k - 2) * lam / (k * k - 1)
    statistic = float(numerator / denominator)
    df1 = float(k - 1)
    df2 = float((k * k - 1) / (3.0 * lam))
    p_value = float(special.fdtrc(df1, df2, statistic))
    return WelchResult(statistic=statistic, df1=df1, df2=df2, p_value=min(max(p_value, 0.0), 1.0))


def risk_equality_pvalue(params: ModelParams, data: EnvDataset, kind: ScoreKind) -> WelchResult:
    """Welch's test on per-observation scores grouped by environment."""
    groups = [obs_scores(kind, params, env.X, env.y) for env in data]
    return welch_oneway(groups)


def select_lambda(
    path: FitPath, data: EnvDataset, kind: ScoreKind, alpha: float = DEFAULT_ALPHA
) -> LambdaChoice:
    """Smallest lambda on ``path`` whose fit is not rejected at level ``alpha``."""
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")

    p_values: list[tuple[float, float]] = []
    chosen: float | None = None
    for record in path.records:
        p = risk_equality_pvalue(record.theta_hat, data, kind).p_value
        p_values.append((record.lambda_, p))
        if chosen is None and p >= alpha:
            chosen = record.lambda_

    fallback = chosen is None
    if fallback:
        chosen = path.records[-1].lambda_
        logger.warning(
            "No lambda on the grid reaches p >= %g; falling back to lambda=%g", alpha, chosen
        )
    choice = LambdaChoice(lambda_hat=chosen, p_values=tuple(p_values), alpha=alpha, fallback_used=fallback)
    drops = choice.monotonicity_violations()
    if drops:
        logger.warning("p-value decreases along the lambda grid at %s", drops)
    return choice
