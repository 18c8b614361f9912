"""Tests pour la loi stable positive : densité, Laplace, Mellin, tirages."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from stable_hcm.exceptions import ConvergenceError, DomainError, ParameterError
from stable_hcm.stable import (
    StableParams,
    conjectured_power_threshold,
    density_callable,
    density_half,
    density_integral,
    density_series,
    laplace_check,
    mellin_inverse_moment,
    mellin_quadrature,
    power_density,
    sample_oracle,
)

ALPHAS = [0.2, 0.3, 0.5, 0.7, 0.9]


@pytest.mark.parametrize(
    "alpha",
    [
        pytest.param(0.0, id="zero"),
        pytest.param(1.0, id="one"),
        pytest.param(-0.3, id="negative"),
        pytest.param(math.nan, id="nan"),
    ],
)
def test_params_reject_alpha_outside_unit_interval(alpha: float) -> None:
    """α must lie in the open interval (0, 1)."""
    with pytest.raises(DomainError):
        StableParams(alpha)


def test_density_half_reference_value() -> None:
    """f_{1/2}(1) = e^{−1/4} / (2√π)."""
    expected = math.exp(-0.25) / (2.0 * math.sqrt(math.pi))
    assert density_half(1.0) == pytest.approx(expected, rel=1e-14)
    assert density_half(1.0) == pytest.approx(0.2196956447, rel=1e-9)
    assert density_half(4.0) == pytest.approx(
        math.exp(-1.0 / 16.0) / (2.0 * math.sqrt(math.pi * 64.0)), rel=1e-14
    )


def test_density_half_is_a_probability_density() -> None:
    """The closed form integrates to 1 and vanishes at 0+."""
    head, _ = integrate.quad(density_half, 0.0, 1.0, epsabs=0, epsrel=1e-12)
    tail, _ = integrate.quad(density_half, 1.0, math.inf, epsabs=0, epsrel=1e-12)
    assert head + tail == pytest.approx(1.0, abs=1e-8)
    assert density_half(1e-3) < 1e-100


def test_series_matches_closed_form(half: StableParams) -> None:
    """The general evaluator agrees with f_{1/2} on [1e-2, 1e2]."""
    xs = np.geomspace(1e-2, 1e2, 200)
    got = np.array([density_series(half, x) for x in xs])
    want = np.array([density_half(x) for x in xs])
    np.testing.assert_allclose(got, want, rtol=1e-10)


@pytest.mark.parametrize(
    ("alpha", "x"),
    [
        pytest.param(0.3, 1.0, id="alpha_0.3_x_1"),
        pytest.param(0.7, 2.0, id="alpha_0.7_x_2"),
        pytest.param(0.9, 5.0, id="alpha_0.9_x_5"),
    ],
)
def test_series_matches_integral(alpha: float, x: float) -> None:
    """Series and angular integral give the same value where both apply."""
    p = StableParams(alpha)
    assert density_series(p, x) == pytest.approx(density_integral(p, x), rel=1e-8)


def test_series_without_fallback_refuses_small_x() -> None:
    """Near zero the series is hopeless; without fallback that is an error."""
    p = StableParams(0.3)
    with pytest.raises(ConvergenceError):
        density_series(p, 1e-3, fallback=False)
    assert density_series(p, 1e-3) >= 0.0


@pytest.mark.parametrize("x", [0.0, -1.0, math.inf, math.nan])
def test_density_domain(half: StableParams, x: float) -> None:
    """x must be finite and strictly positive."""
    with pytest.raises(DomainError):
        density_series(half, x)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 5.0])
def test_laplace_transform(alpha: float, lam: float) -> None:
    """∫ e^{−λx} f_α(x) dx = e^{−λ^α}."""
    quadrature, exact = laplace_check(StableParams(alpha), lam)
    assert quadrature == pytest.approx(exact, abs=1e-6)


@pytest.mark.parametrize(
    ("alpha", "s", "expected"),
    [
        pytest.param(0.5, 1.0, 2.0, id="half_s1"),
        pytest.param(0.5, 2.0, 12.0, id="half_s2"),
        pytest.param(0.25, 1.0, 24.0, id="quarter_s1"),
        pytest.param(0.7, 0.0, 1.0, id="s0"),
    ],
)
def test_mellin_inverse_moment(alpha: float, s: float, expected: float) -> None:
    """E[Z_α^{−s}] = Γ(1+s/α)/Γ(1+s)."""
    assert mellin_inverse_moment(StableParams(alpha), s) == pytest.approx(expected, rel=1e-12)


def test_mellin_inverse_moment_rejects_negative_order(half: StableParams) -> None:
    """Only s ≥ 0 is covered."""
    with pytest.raises(DomainError):
        mellin_inverse_moment(half, -0.5)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_mellin_quadrature(alpha: float, s: float) -> None:
    """∫ x^{−s} f_α(x) dx matches the closed form."""
    p = StableParams(alpha)
    assert mellin_quadrature(p, s) == pytest.approx(mellin_inverse_moment(p, s), rel=1e-6)


def test_sample_is_deterministic(half: StableParams) -> None:
    """Same seed, same draws; another seed, other draws."""
    first = sample_oracle(half, 1000, seed=7)
    np.testing.assert_array_equal(first, sample_oracle(half, 1000, seed=7))
    assert not np.array_equal(first, sample_oracle(half, 1000, seed=8))
    assert np.all(first > 0)


def test_sample_rejects_empty_request(half: StableParams) -> None:
    """At least one draw."""
    with pytest.raises(ParameterError):
        sample_oracle(half, 0, seed=1)


def test_sample_inverse_moment(half: StableParams) -> None:
    """E[Z_{1/2}^{−1}] = 2; Var[Z_{1/2}^{−1}] = Var[4Γ_{1/2}] = 8."""
    draws = sample_oracle(half, 100_000, seed=1)
    standard_error = math.sqrt(8.0 / draws.size)
    assert abs(np.mean(1.0 / draws) - 2.0) < 4.0 * standard_error


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_sample_moments(alpha: float) -> None:
    """Sample E[Z^{−1}] agrees with Γ(1+1/α) within four standard errors."""
    p = StableParams(alpha)
    draws = 1.0 / sample_oracle(p, 100_000, seed=3)
    mean = mellin_inverse_moment(p, 1.0)
    variance = mellin_inverse_moment(p, 2.0) - mean**2
    assert abs(np.mean(draws) - mean) < 4.0 * math.sqrt(variance / draws.size)


def test_sample_law_at_one_half(half: StableParams, rng: np.random.Generator) -> None:
    """Z_{1/2} has the law of 1/(4Γ_{1/2}) (two-sample KS)."""
    draws = sample_oracle(half, 100_000, seed=11)
    reference = 1.0 / (4.0 * rng.gamma(0.5, size=100_000))
    result = stats.ks_2samp(draws, reference)
    assert result.statistic < 0.00729


def test_power_density_at_minus_one(half: StableParams) -> None:
    """Z_{1/2}^{−1} = 4Γ_{1/2}: density y^{−1/2} e^{−y/4} / (2Γ(1/2))."""
    for y in (0.1, 1.0, 3.0, 10.0):
        expected = (y / 4.0) ** -0.5 * math.exp(-y / 4.0) / (4.0 * special.gamma(0.5))
        assert power_density(half, -1.0, y) == pytest.approx(expected, rel=1e-10)


def test_power_density_rejects_zero_power(half: StableParams) -> None:
    """q = 0 is not a change of variables."""
    with pytest.raises(DomainError):
        power_density(half, 0.0, 1.0)


def test_conjectured_power_threshold() -> None:
    """α/(1−α)."""
    assert conjectured_power_threshold(StableParams(0.3)) == pytest.approx(3.0 / 7.0)


def test_density_callable_variants(half: StableParams) -> None:
    """Closed form, series and power callables."""
    assert density_callable(half, closed_form=True) is density_half
    assert density_callable(half)(1.0) == pytest.approx(density_half(1.0), rel=1e-12)
    assert density_callable(half, power=-1.0)(1.0) == pytest.approx(
        power_density(half, -1.0, 1.0)
    )
    with pytest.raises(DomainError):
        density_callable(StableParams(0.3), closed_form=True)
    with pytest.raises(ParameterError):
        density_callable(half, closed_form=True, power=2.0)
