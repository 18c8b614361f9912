"""Real special functions: log-Gamma, digamma, trigamma and friends.

Thin validated layer over scipy.special. Every function accepts a scalar or a
numpy array and returns a float or an array of the same shape.
"""

from __future__ import annotations

from typing import Any

import numpy as np
from scipy import special

from .exceptions import DomainError
from .utils import positive_array, unwrap


# γ = −ψ(1)
EULER_GAMMA = float(np.euler_gamma)


def ln_gamma(x: Any) -> Any:
    """Return ln Γ(x) for x > 0."""
    return unwrap(special.gammaln(positive_array(x)))


def digamma(x: Any) -> Any:
    """Return ψ(x) for x > 0."""
    return unwrap(special.psi(positive_array(x)))


def trigamma(x: Any) -> Any:
    """Return ψ′(x) for x > 0."""
    return unwrap(special.polygamma(1, positive_array(x)))


def polygamma(n: int, x: Any) -> Any:
    """Return the n-th derivative of ψ at x > 0."""
    if n < 0:
        raise DomainError(f"polygamma order must be >= 0, got {n}")
    return unwrap(special.polygamma(n, positive_array(x)))


def log_gamma_ratio(a: Any, s: Any) -> Any:
    """
    Return ln Γ(a+s) − ln Γ(a).

    Valid whenever a > 0 and a + s > 0, so negative s is allowed down to −a
    (Mellin transforms of Gamma and Beta laws at negative order).
    """
    a_arr = positive_array(a, "a")
    s_arr = np.asarray(s, dtype=float)
    shifted = positive_array(a_arr + s_arr, "a + s")
    return unwrap(special.gammaln(shifted) - special.gammaln(a_arr))
