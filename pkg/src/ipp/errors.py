"""Exception hierarchy shared by the library, CLI and MCP server."""

from __future__ import annotations

from typing import Any


class IppError(Exception):
    """Base class for every error raised deliberately by this package."""


class InputError(IppError, ValueError):
    """Malformed input: wrong shape, non-finite value, too few samples."""


class DomainError(InputError):
    """A value outside the mathematical domain, e.g. ``sd <= 0``."""


class DegenerateInputError(InputError):
    """Input that makes a statistic undefined, e.g. a zero-variance group."""


class ScaleOverflowError(IppError, ArithmeticError):
    """The log standard deviation left ``[-700, 700]``."""


class DecompositionError(IppError, ArithmeticError):
    """A covariance that is not positive definite, or a singular matrix."""


class OptimizationError(IppError, RuntimeError):
    """Every optimizer restart failed to reach a finite objective."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CsvFormatError(InputError):
    """A dataset file that does not parse; carries the offending location."""

    def __init__(
        self, message: str, line: int | None = None, column: str | None = None
    ) -> None:
        location = []
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column '{column}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(prefix + message)
        self.line = line
        self.column = column
