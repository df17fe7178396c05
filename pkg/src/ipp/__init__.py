"""Invariant probabilistic prediction for heteroscedastic Gaussian models."""

__version__ = "0.1.0"
