"""Helper functions shared by the numerical modules."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
from scipy import integrate as sp_integrate

from .const import QUAD_ACCEPT_REL, QUAD_EPSREL, QUAD_LIMIT
from .exceptions import DomainError, NumericalError

_LOGGER = logging.getLogger(__name__)


def integrate(
    func: Callable[[float], float],
    lower: float,
    upper: float,
    *,
    epsrel: float = QUAD_EPSREL,
    epsabs: float = 0.0,
    limit: int = QUAD_LIMIT,
    points: Sequence[float] | None = None,
    weight: str | None = None,
    wvar: Any = None,
    accept_rel: float = QUAD_ACCEPT_REL,
) -> tuple[float, float]:
    """
    Adaptive quadrature returning (value, error estimate).

    Wraps scipy.integrate.quad with full_output so that a non-zero `ier` is
    seen: the result is kept when the reported error stays below
    `accept_rel` × |value| (typically a round-off plateau), otherwise a
    NumericalError carrying the achieved estimate is raised.
    """
    kwargs: dict[str, Any] = {
        "epsrel": epsrel,
        "epsabs": epsabs,
        "limit": limit,
        "full_output": 1,
    }
    if points is not None:
        kwargs["points"] = list(points)
    if weight is not None:
        kwargs["weight"] = weight
        kwargs["wvar"] = wvar

    result = sp_integrate.quad(func, lower, upper, **kwargs)
    value, abserr = float(result[0]), float(result[1])

    if len(result) > 3:
        message = result[3]
        if abserr <= accept_rel * abs(value) + epsabs:
            _LOGGER.warning(
                "quad on [%s, %s] flagged '%s' but error %.3e is acceptable",
                lower,
                upper,
                message,
                abserr,
            )
        else:
            raise NumericalError(
                f"quadrature on [{lower}, {upper}] did not converge: {message}",
                achieved=abserr,
            )

    return value, abserr


def log_grid(lower: float, upper: float, per_decade: int) -> np.ndarray:
    """Return log-spaced nodes from lower to upper with `per_decade` nodes per decade."""
    if not 0 < lower < upper:
        raise DomainError(f"invalid grid range [{lower}, {upper}]")
    decades = np.log10(upper) - np.log10(lower)
    count = max(int(np.ceil(decades * per_decade)) + 1, 2)
    return np.geomspace(lower, upper, count)


def positive_array(x: Any, name: str = "x") -> np.ndarray:
    """Convert x to a float array and check that every entry is finite and > 0."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be finite and strictly positive, got {x!r}")
    return arr


def unwrap(arr: np.ndarray) -> Any:
    """Return a Python float for 0-d arrays, the array itself otherwise."""
    if arr.ndim == 0:
        return float(arr)
    return arr
