"""Small linear-algebra helpers with the package's error types."""

from __future__ import annotations

import numpy as np

from ..errors import DecompositionError, InputError

#: Smallest acceptable Cholesky pivot.
PIVOT_TOLERANCE = 1e-10


def check_finite(name: str, value: np.ndarray | float) -> None:
    """Raise InputError if *value* holds a NaN or infinity."""
    if not np.all(np.isfinite(value)):
        raise InputError(f"{name} must be finite")


def cholesky(sigma: np.ndarray, name: str = "sigma") -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Raises:
        DecompositionError: If *sigma* is not symmetric, not positive
            definite, or has a pivot below ``PIVOT_TOLERANCE``.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {sigma.shape}")
    check_finite(name, sigma)
    if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-12):
        raise DecompositionError(f"{name} is not symmetric")
    try:
        factor = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"{name} is not positive definite") from exc
    pivots = np.diag(factor)
    if np.min(pivots) ** 2 < PIVOT_TOLERANCE:
        raise DecompositionError(
            f"{name} is numerically singular (smallest pivot {np.min(pivots):.3g})"
        )
    return factor
