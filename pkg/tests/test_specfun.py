"""Tests pour les fonctions spéciales (ln Γ, ψ, ψ′)."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stable_hcm.exceptions import DomainError
from stable_hcm.specfun import (
    EULER_GAMMA,
    digamma,
    ln_gamma,
    log_gamma_ratio,
    polygamma,
    trigamma,
)

positive_x = st.floats(min_value=1e-2, max_value=1e3, allow_nan=False)


@pytest.mark.parametrize(
    ("func", "x", "expected", "rel"),
    [
        pytest.param(ln_gamma, 0.5, 0.5723649429247001, 1e-14, id="ln_gamma_half"),
        pytest.param(ln_gamma, 10.0, 12.801827480081469, 1e-14, id="ln_gamma_ten"),
        pytest.param(ln_gamma, 1.0, 0.0, 0.0, id="ln_gamma_one"),
        pytest.param(digamma, 1.0, -0.5772156649015329, 1e-14, id="digamma_one"),
        pytest.param(digamma, 0.5, -1.9635100260214235, 1e-14, id="digamma_half"),
        pytest.param(trigamma, 1.0, math.pi**2 / 6, 1e-14, id="trigamma_one"),
        pytest.param(trigamma, 0.5, math.pi**2 / 2, 1e-14, id="trigamma_half"),
    ],
)
def test_known_values(func, x: float, expected: float, rel: float) -> None:
    """Reference values of ln Γ, ψ and ψ′."""
    assert func(x) == pytest.approx(expected, rel=rel, abs=1e-15)


def test_euler_gamma_is_minus_digamma_one() -> None:
    """γ = −ψ(1)."""
    assert EULER_GAMMA == pytest.approx(-digamma(1.0), rel=1e-15)


@given(positive_x)
def test_ln_gamma_recurrence(x: float) -> None:
    """ln Γ(x+1) − ln Γ(x) = ln x."""
    assert ln_gamma(x + 1.0) - ln_gamma(x) == pytest.approx(math.log(x), abs=1e-11)


@given(positive_x)
def test_digamma_recurrence(x: float) -> None:
    """ψ(x+1) − ψ(x) = 1/x."""
    assert digamma(x + 1.0) - digamma(x) == pytest.approx(1.0 / x, rel=1e-11, abs=1e-13)


@given(positive_x)
def test_trigamma_recurrence(x: float) -> None:
    """ψ′(x) − ψ′(x+1) = 1/x²."""
    assert trigamma(x) - trigamma(x + 1.0) == pytest.approx(1.0 / x**2, rel=1e-10, abs=1e-14)


def test_monotonicity() -> None:
    """ψ increases and ψ′ decreases on (0, ∞)."""
    xs = np.geomspace(1e-3, 1e3, 500)
    assert np.all(np.diff(digamma(xs)) > 0)
    assert np.all(np.diff(trigamma(xs)) < 0)


def test_array_input_keeps_shape() -> None:
    """Arrays go through element-wise, scalars come back as floats."""
    xs = np.array([[0.5, 1.0], [2.0, 3.0]])
    assert ln_gamma(xs).shape == (2, 2)
    assert isinstance(digamma(2.0), float)


def test_polygamma_orders() -> None:
    """polygamma(0) is ψ and polygamma(1) is ψ′."""
    assert polygamma(0, 3.5) == pytest.approx(digamma(3.5), rel=1e-15)
    assert polygamma(1, 3.5) == pytest.approx(trigamma(3.5), rel=1e-15)
    assert polygamma(2, 1.0) == pytest.approx(-2.0 * 1.2020569031595942, rel=1e-13)


@pytest.mark.parametrize(
    ("a", "s", "expected"),
    [
        pytest.param(1.0, 1.0, 0.0, id="gamma2_over_gamma1"),
        pytest.param(1.0, 3.0, math.log(6.0), id="factorial"),
        pytest.param(2.0, -1.0, 0.0, id="negative_order"),
        pytest.param(0.5, 0.5, -0.5723649429247001, id="inverse_sqrt_pi"),
    ],
)
def test_log_gamma_ratio(a: float, s: float, expected: float) -> None:
    """ln Γ(a+s) − ln Γ(a), negative s allowed down to −a."""
    assert log_gamma_ratio(a, s) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize(
    "call",
    [
        pytest.param(lambda: ln_gamma(0.0), id="ln_gamma_zero"),
        pytest.param(lambda: digamma(-1.0), id="digamma_negative"),
        pytest.param(lambda: trigamma(math.nan), id="trigamma_nan"),
        pytest.param(lambda: ln_gamma(math.inf), id="ln_gamma_inf"),
        pytest.param(lambda: polygamma(-1, 1.0), id="polygamma_negative_order"),
        pytest.param(lambda: log_gamma_ratio(1.0, -1.0), id="ratio_at_pole"),
        pytest.param(lambda: digamma(np.array([1.0, 0.0])), id="array_with_zero"),
    ],
)
def test_domain_errors(call) -> None:
    """Arguments outside (0, ∞) are rejected, never returned as nan."""
    with pytest.raises(DomainError):
        call()
