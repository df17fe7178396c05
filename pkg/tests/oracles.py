"""Independent numeric references used by the test suite.

Nothing here imports the closed forms under test: expectations come from
adaptive quadrature, derivatives from central differences, and Monte
Carlo means from plain numpy draws.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import integrate, stats


def gaussian_expectation(func: Callable[[float], float], mean: float, sd: float) -> float:
    """``E[func(Y)]`` for ``Y ~ N(mean, sd^2)`` by adaptive quadrature on the real line."""
    density = stats.norm(mean, sd).pdf
    value, _ = integrate.quad(lambda y: func(y) * density(y), -np.inf, np.inf, limit=200)
    return value


def crps_integral(mean: float, sd: float, y: float) -> float:
    """``int (1{y <= z} - F(z))^2 dz`` split at the outcome."""
    cdf = stats.norm(mean, sd).cdf
    below, _ = integrate.quad(lambda z: cdf(z) ** 2, -np.inf, y)
    above, _ = integrate.quad(lambda z: (1.0 - cdf(z)) ** 2, y, np.inf)
    return below + above


def hyvarinen_by_differences(mean: float, sd: float, y: float, step: float = 1e-4) -> float:
    """``2 g''/g - (g'/g)^2`` with finite-difference derivatives of the density."""
    g = stats.norm(mean, sd).pdf
    g0 = g(y)
    first = (g(y + step) - g(y - step)) / (2 * step)
    second = (g(y + step) - 2 * g0 + g(y - step)) / step**2
    return 2 * second / g0 - (first / g0) ** 2


def central_gradient(func: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        grad[j] = (func(x + e) - func(x - e)) / (2 * step)
    return grad


def monte_carlo_mean(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    n: int,
    seed: int,
    chunk: int = 1_000_000,
) -> tuple[float, float]:
    """Mean and standard error of ``draw`` accumulated over chunks of at most ``chunk`` values."""
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    remaining = n
    while remaining > 0:
        size = min(chunk, remaining)
        values = np.asarray(draw(rng, size), dtype=float)
        total += float(values.sum())
        total_sq += float((values * values).sum())
        remaining -= size
    mean = total / n
    variance = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(variance / n)
