"""Exceptions raised by stable-hcm."""

from __future__ import annotations


class StableHcmError(Exception):
    """Base class for every error raised by the library."""


class DomainError(StableHcmError, ValueError):
    """Raised when an argument lies outside the mathematical domain."""


class ParameterError(StableHcmError, ValueError):
    """Raised when parameters are structurally invalid (counts, splits, stencils)."""


class ConvergenceError(StableHcmError):
    """Raised when a series does not converge within its term cap."""

    def __init__(self, message: str, last_term: float) -> None:
        """Keep the size of the last computed term for diagnostics."""
        super().__init__(f"{message} (last term {last_term:.3e})")
        self.last_term = last_term


class NumericalError(StableHcmError):
    """Raised when a quadrature fails or a value overflows."""

    def __init__(self, message: str, achieved: float | None = None) -> None:
        """Keep the achieved error estimate when there is one."""
        if achieved is not None:
            message = f"{message} (achieved {achieved:.3e})"
        super().__init__(message)
        self.achieved = achieved
