"""Utility functions."""

from .rng import stream
from .linalg import cholesky, check_finite
