"""Multi-start bounded minimization.

Each start runs a bounded Nelder-Mead simplex search and is then
polished with L-BFGS-B inside the same box. Starts run in a thread pool;
the results are reduced in start order, so the winner does not depend
on scheduling.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .errors import IppError, OptimizationError
from .models.results import OptimizerConfig

logger = logging.getLogger(__name__)

#: Restarts whose objectives differ by less than this are treated as tied.
TIE_TOLERANCE = 1e-10
POLISH_FTOL = 1e-15
POLISH_GTOL = 1e-10

Objective = Callable[[np.ndarray], float]
Gradient = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Restart:
    """Outcome of one start."""

    index: int
    x: np.ndarray
    fun: float
    polished: bool
    message: str = ""

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.fun))


def _safe(fun: Objective) -> Objective:
    """Wrap an objective so numeric failures read as ``+inf``."""

    def wrapped(x: np.ndarray) -> float:
        try:
            value = float(fun(x))
        except (IppError, FloatingPointError, OverflowError):
            return np.inf
        return value if np.isfinite(value) else np.inf

    return wrapped


def _run_start(
    index: int,
    x0: np.ndarray,
    fun: Objective,
    jac: Gradient | None,
    bounds: list[tuple[float, float]],
    config: OptimizerConfig,
) -> Restart:
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    x0 = np.clip(x0, lo, hi)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        simplex = minimize(
            fun,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={
                "maxiter": config.maxiter,
                "maxfev": 2 * config.maxiter,
                "xatol": config.xatol,
                "fatol": config.fatol,
                "adaptive": True,
            },
        )
    best_x = np.clip(simplex.x, lo, hi)
    best_f = fun(best_x)
    polished = False
    message = str(simplex.message)

    if config.polish and np.isfinite(best_f):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                polish = minimize(
                    fun,
                    best_x,
                    jac=jac,
                    method="L-BFGS-B",
                    bounds=bounds,
                    options={"maxiter": config.maxiter, "ftol": POLISH_FTOL, "gtol": POLISH_GTOL},
                )
        except (ValueError, ArithmeticError) as exc:
            logger.debug("Polish of start %d failed: %s", index, exc)
        else:
            candidate = np.clip(polish.x, lo, hi)
            value = fun(candidate)
            if value <= best_f:
                best_x, best_f, polished = candidate, value, True

    return Restart(index=index, x=best_x, fun=float(best_f), polished=polished, message=message)


def select_best(restarts: list[Restart]) -> Restart:
    """Lowest objective; near-ties go to the smallest Euclidean norm, then the earliest start."""
    finite = [r for r in restarts if r.finite]
    if not finite:
        raise OptimizationError(
            "Every restart produced a non-finite objective",
            diagnostics={"restart_objectives": [r.fun for r in restarts]},
        )
    lowest = min(r.fun for r in finite)
    tied = [r for r in finite if r.fun - lowest <= TIE_TOLERANCE]
    return min(tied, key=lambda r: (float(np.linalg.norm(r.x)), r.index))


def multistart_minimize(
    fun: Objective,
    starts: list[np.ndarray],
    box: tuple[float, float],
    config: OptimizerConfig,
    jac: Gradient | None = None,
) -> tuple[Restart, list[Restart]]:
    """Minimize ``fun`` over ``[lo, hi]^p`` from every start.

    Args:
        fun: Objective; exceptions from this package count as ``+inf``.
        starts: Initial points, clipped into the box.
        box: Per-coordinate bounds ``(lo, hi)``.
        config: Iteration limits, tolerances and the pool size.
        jac: Analytic gradient for the polish step. Finite differences
            are used when omitted.

    Returns:
        The winning restart and all restarts in start order.

    Raises:
        OptimizationError: If no start reaches a finite objective. The
            diagnostics hold every restart objective.
    """
    if not starts:
        raise OptimizationError("No starting points were given")
    lo, hi = box
    p = int(np.asarray(starts[0]).size)
    bounds = [(lo, hi)] * p
    safe = _safe(fun)

    if lo == hi:
        point = np.full(p, lo)
        only = Restart(index=0, x=point, fun=safe(point), polished=False, message="degenerate box")
        return select_best([only]), [only]

    def run(item: tuple[int, np.ndarray]) -> Restart:
        index, x0 = item
        return _run_start(index, np.asarray(x0, dtype=float), safe, jac, bounds, config)

    items = list(enumerate(starts))
    if config.threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            restarts = list(pool.map(run, items))
    else:
        restarts = [run(item) for item in items]

    best = select_best(restarts)
    logger.debug(
        "Multistart: best start %d of %d, objective %.10g", best.index, len(restarts), best.fun
    )
    return best, restarts
