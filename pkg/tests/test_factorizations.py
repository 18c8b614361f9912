"""Tests pour les factorisations Beta-Gamma tronquées."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from stable_hcm.const import TARGET_GAMMA, TARGET_INVERSE_STABLE
from stable_hcm.exceptions import DomainError, NumericalError, ParameterError
from stable_hcm.factorizations import (
    BetaFactor,
    FactorizationPlan,
    GammaFactor,
    beta_tail_variance,
    lemma2_plan,
    lemma3_plan,
    malmsten_check,
    mellin_report,
    plan_from_json,
    plan_mellin,
    plan_to_dict,
    plan_to_json,
    power_plan,
    sample_plan,
    split_beta,
    tail_variance_terms,
    target_mellin,
    theorem_plan,
    truncation_tail_variance,
    variance_bound_integral,
    williams_constant_check,
    williams_plan,
)
from stable_hcm.stable import StableParams, mellin_inverse_moment

PROBES = [0.5, 1.0, 2.0]


def _relative_error(plan: FactorizationPlan, s: float, **kwargs) -> float:
    return abs(plan_mellin(plan, s, **kwargs) / target_mellin(plan, s) - 1.0)


def test_lemma2_first_factor_at_one_half(half: StableParams) -> None:
    """α = 1/2, N = 1: one factor 4·B_{1/2,1/2}."""
    plan = lemma2_plan(half, 1)
    (factor,) = plan.beta_factors
    assert (factor.a, factor.b) == pytest.approx((0.5, 0.5))
    assert math.exp(factor.log_scale) == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize(
    "plan",
    [
        pytest.param(lemma2_plan(StableParams(0.3), 10), id="lemma2"),
        pytest.param(lemma3_plan(0.5, 0.7, 10), id="lemma3"),
        pytest.param(power_plan(StableParams(0.6), 10), id="power"),
        pytest.param(williams_plan(4), id="williams"),
    ],
)
def test_mellin_at_zero_is_one(plan: FactorizationPlan) -> None:
    """E[X^0] = 1 for every plan."""
    assert plan_mellin(plan, 0.0) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("s", PROBES)
def test_lemma2_mellin_converges(alpha: float, s: float) -> None:
    """The truncated product tends to Γ(1+s/α)/Γ(1+s) as N grows."""
    p = StableParams(alpha)
    plans = [lemma2_plan(p, n) for n in (10, 100, 1000)]
    raw = [_relative_error(plan, s, compensate_tail=False) for plan in plans]
    compensated = [_relative_error(plan, s) for plan in plans]
    assert raw[0] > raw[1] > raw[2]
    assert compensated[0] > compensated[1] > compensated[2]
    assert compensated[2] < 1e-3
    assert plan_mellin(plans[2], s) == pytest.approx(mellin_inverse_moment(p, s), rel=1e-3)


def test_lemma2_two_hundred_terms(half: StableParams) -> None:
    """E[Z_{1/2}^{−1}] = 2 from 200 factors."""
    assert plan_mellin(lemma2_plan(half, 200), 1.0) == pytest.approx(2.0, abs=5e-3)


@pytest.mark.parametrize(
    ("a", "b", "s", "expected"),
    [
        pytest.param(1.0, 1.0, 1.0, 1.0, id="exponential_mean"),
        pytest.param(0.5, 0.5, 1.0, 0.5, id="half_mean"),
        pytest.param(2.0, 0.3, 2.0, 6.0, id="gamma2_second_moment"),
    ],
)
def test_lemma3_mellin(a: float, b: float, s: float, expected: float) -> None:
    """Γ_a rebuilt from Beta factors: E[Γ_a^s] = Γ(a+s)/Γ(a)."""
    plan = lemma3_plan(a, b, 1000)
    assert plan.target == TARGET_GAMMA
    assert plan_mellin(plan, s) == pytest.approx(expected, rel=1e-3)


@pytest.mark.parametrize(
    "plan",
    [
        pytest.param(lemma2_plan(StableParams(0.4), 50), id="lemma2"),
        pytest.param(lemma3_plan(0.3, 1.5, 50), id="lemma3"),
        pytest.param(theorem_plan(StableParams(0.3), 50), id="theorem"),
        pytest.param(power_plan(StableParams(0.7), 50), id="power"),
    ],
)
def test_beta_factors_are_mean_centred(plan: FactorizationPlan) -> None:
    """E[log(scale × B)] = 0 for every retained factor."""
    for factor in plan.beta_factors:
        assert factor.mean_log == pytest.approx(0.0, abs=1e-10)


def test_split_beta_example() -> None:
    """B_{0.7,0.9} = B_{0.7,0.4} × B_{1.1,0.5} in law."""
    factor = BetaFactor(0.7, 0.9)
    first, second = split_beta(factor, 0.4)
    assert (first.a, first.b, second.a, second.b) == pytest.approx((0.7, 0.4, 1.1, 0.5))
    for s in PROBES:
        assert first.log_mellin(s) + second.log_mellin(s) == pytest.approx(
            factor.log_mellin(s), abs=1e-12
        )


@settings(max_examples=100)
@given(
    a=st.floats(min_value=0.05, max_value=20.0),
    b=st.floats(min_value=0.05, max_value=5.0),
    fraction=st.floats(min_value=0.05, max_value=0.95),
    log_scale=st.floats(min_value=-3.0, max_value=3.0),
)
def test_split_beta_preserves_mellin(
    a: float, b: float, fraction: float, log_scale: float
) -> None:
    """The two pieces multiply back to the input, scale included."""
    factor = BetaFactor(a, b, log_scale)
    first, second = split_beta(factor, fraction * b)
    assert first.log_scale + second.log_scale == pytest.approx(log_scale, abs=1e-12)
    for s in (0.1, 0.5, 1.0, 2.0, 5.0):
        assert first.log_mellin(s) + second.log_mellin(s) == pytest.approx(
            factor.log_mellin(s), abs=1e-10
        )


@pytest.mark.parametrize("b_part", [0.0, 0.9, 1.2, math.nan])
def test_split_beta_rejects_bad_split(b_part: float) -> None:
    """b_part must lie strictly between 0 and b."""
    with pytest.raises(ParameterError):
        split_beta(BetaFactor(0.7, 0.9), b_part)


def test_theorem_plan_matches_lemma2() -> None:
    """Both decompositions of Z_{0.3}^{−1} agree with the target and each other."""
    p = StableParams(0.3)
    theorem = theorem_plan(p, 1000)
    lemma2 = lemma2_plan(p, 1000)
    assert len(theorem.gamma_factors) == 1
    assert theorem.gamma_factors[0].c == pytest.approx(0.3)
    for s in PROBES:
        assert _relative_error(theorem, s) < 1e-3
        assert plan_mellin(theorem, s) == pytest.approx(plan_mellin(lemma2, s), rel=2e-3)


@pytest.mark.parametrize("alpha", [0.5, 0.7])
def test_theorem_plan_needs_alpha_below_half(alpha: float) -> None:
    """1 − 2α must stay positive."""
    with pytest.raises(DomainError):
        theorem_plan(StableParams(alpha), 10)


@pytest.mark.parametrize("alpha", [0.3, 0.7])
@pytest.mark.parametrize("s", [1.0, 2.0])
def test_power_plan(alpha: float, s: float) -> None:
    """E[(Z_α^{−α})^s] = Γ(1+s)/Γ(1+αs)."""
    plan = power_plan(StableParams(alpha), 1000)
    expected = special.gamma(1.0 + s) / special.gamma(1.0 + alpha * s)
    assert plan_mellin(plan, s) == pytest.approx(expected, rel=1e-3)


def test_power_plan_at_one_half(half: StableParams) -> None:
    """Z_{1/2}^{−1/2} = 2√Γ_{1/2}, whose second moment is 2."""
    assert plan_mellin(power_plan(half, 1000), 2.0) == pytest.approx(2.0, abs=1e-3)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_williams_constant(n: int) -> None:
    """exp(−(n−1)γ − Σ ψ(k/n)) = n^n."""
    value, expected = williams_constant_check(n)
    assert value == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_williams_plan_is_exact(n: int) -> None:
    """No truncation: the plan Mellin is the closed form for every s."""
    plan = williams_plan(n)
    assert plan.truncation_N == 0
    for s in (0.25, 1.0, 3.0):
        assert plan_mellin(plan, s) == pytest.approx(target_mellin(plan, s), rel=1e-10)


def test_williams_rejects_small_n() -> None:
    """n ≥ 2."""
    with pytest.raises(ParameterError):
        williams_plan(1)
    with pytest.raises(ParameterError):
        williams_constant_check(1)


@pytest.mark.parametrize(
    ("a", "s"),
    [
        pytest.param(2.0, 3.0, id="a2_s3"),
        pytest.param(0.5, 0.5, id="a0.5_s0.5"),
        pytest.param(1.0, 1.0, id="a1_s1"),
    ],
)
def test_malmsten_examples(a: float, s: float) -> None:
    """Integral representation of ln Γ(a+s) − ln Γ(a)."""
    rhs, lhs = malmsten_check(a, s)
    assert rhs == pytest.approx(lhs, abs=1e-8)


def test_malmsten_known_value() -> None:
    """ln Γ(5)/Γ(2) = ln 24."""
    _, lhs = malmsten_check(2.0, 3.0)
    assert lhs == pytest.approx(math.log(24.0), rel=1e-14)


@settings(max_examples=25)
@given(
    a=st.floats(min_value=0.1, max_value=5.0),
    s=st.floats(min_value=0.1, max_value=5.0),
)
def test_malmsten_random(a: float, s: float) -> None:
    """The identity holds across (a, s) ∈ [0.1, 5]²."""
    rhs, lhs = malmsten_check(a, s)
    assert rhs == pytest.approx(lhs, abs=1e-8)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_tail_variance_bounded_and_decreasing(alpha: float) -> None:
    """V(N) decreases with N, stays under the integral bound and reaches it at N = 0."""
    p = StableParams(alpha)
    bound = variance_bound_integral(p)
    tails = [truncation_tail_variance(p, n) for n in (0, 1, 10, 100, 1000)]
    assert all(np.isfinite(tails))
    assert all(v <= bound * (1.0 + 1e-9) for v in tails)
    assert all(x > y for x, y in zip(tails, tails[1:], strict=False))
    assert tails[0] == pytest.approx(bound, rel=1e-8)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_tail_variance_terms_vanish(alpha: float) -> None:
    """ψ′(α+nα) − ψ′(1+nα) drops below 1e-8 by n = 10⁴/α."""
    terms = tail_variance_terms(StableParams(alpha), int(1e4 / alpha) + 1)
    assert np.all(terms > 0)
    assert terms[-1] < 1e-8


def test_tail_variance_matches_explicit_sum() -> None:
    """The Euler-Maclaurin remainder agrees with a long direct sum."""
    n = np.arange(100, 200_000, dtype=float)
    terms = special.polygamma(1, 0.3 + n * 0.3) - special.polygamma(1, 1.0 + n * 0.3)
    rest = special.psi(1.0 + 200_000 * 0.3) - special.psi(0.3 + 200_000 * 0.3)
    direct = float(np.sum(terms)) + rest / 0.3
    assert beta_tail_variance(0.3, 0.3, 0.7, 100) == pytest.approx(direct, rel=1e-6)


def test_sample_plan_is_deterministic(half: StableParams) -> None:
    """Same seed, same draws."""
    plan = lemma2_plan(half, 20)
    np.testing.assert_array_equal(sample_plan(plan, 500, 4), sample_plan(plan, 500, 4))


def test_sample_plan_law_at_one_half(half: StableParams, rng: np.random.Generator) -> None:
    """The bare 200-factor product looks like 4Γ_{1/2} (two-sample KS)."""
    draws = sample_plan(lemma2_plan(half, 200), 100_000, seed=11)
    reference = 4.0 * rng.gamma(0.5, size=100_000)
    assert stats.ks_2samp(draws, reference).statistic < 0.00729


def test_sample_plan_mean_matches_plan_mellin() -> None:
    """The sample mean estimates the raw truncated Mellin at s = 1."""
    plan = lemma3_plan(1.5, 0.5, 30)
    draws = sample_plan(plan, 100_000, seed=9)
    mean = plan_mellin(plan, 1.0, compensate_tail=False)
    variance = plan_mellin(plan, 2.0, compensate_tail=False) - mean**2
    assert abs(np.mean(draws) - mean) < 4.0 * math.sqrt(variance / draws.size)


def test_sample_plan_with_tail_term(half: StableParams) -> None:
    """The log-normal tail term only adds spread."""
    plan = lemma2_plan(half, 5)
    plain = np.log(sample_plan(plan, 50_000, seed=2))
    compensated = np.log(sample_plan(plan, 50_000, seed=2, compensate_tail=True))
    assert np.var(compensated) > np.var(plain)


@pytest.mark.parametrize(
    "build",
    [
        pytest.param(lambda: lemma2_plan(StableParams(0.5), 0), id="lemma2"),
        pytest.param(lambda: lemma3_plan(1.0, 1.0, 0), id="lemma3"),
        pytest.param(lambda: power_plan(StableParams(0.5), -1), id="power"),
    ],
)
def test_truncation_must_be_positive(build) -> None:
    """N = 0 is rejected."""
    with pytest.raises(ParameterError):
        build()


def test_plan_mellin_default_carries_tail_correction(half: StableParams) -> None:
    """Default = bare truncated product × exp(s² tail_log_variance / 2)."""
    plan = lemma2_plan(half, 50)
    assert plan.tail_log_variance > 0.0
    for s in (0.5, 1.0, 2.0):
        bare = plan_mellin(plan, s, compensate_tail=False)
        expected = bare * math.exp(0.5 * s * s * plan.tail_log_variance)
        assert plan_mellin(plan, s) == pytest.approx(expected, rel=1e-12)


def test_plan_mellin_rejects_negative_probe(half: StableParams) -> None:
    """Probes s ≥ 0 only."""
    with pytest.raises(DomainError):
        plan_mellin(lemma2_plan(half, 3), -1.0)


def test_plan_mellin_overflow_needs_log_space() -> None:
    """Large s overflows unless the log value is requested."""
    plan = lemma2_plan(StableParams(0.1), 10)
    with pytest.raises(NumericalError):
        plan_mellin(plan, 100.0)
    assert math.isfinite(plan_mellin(plan, 100.0, log_space=True))


def test_gamma_factor_only_plan() -> None:
    """A hand-built plan with a single Γ_{1/2} factor."""
    plan = FactorizationPlan(
        target=TARGET_GAMMA, global_log_scale=0.0, gamma_factors=(GammaFactor(0.5),), a=0.5
    )
    assert plan_mellin(plan, 1.0) == pytest.approx(0.5, rel=1e-14)


def test_mellin_report(half: StableParams) -> None:
    """Report fields and verdict."""
    report = mellin_report(lemma2_plan(half, 1000), PROBES)
    doc = report.to_dict()
    assert doc["target"] == TARGET_INVERSE_STABLE
    assert doc["N"] == 1000
    assert [probe["s"] for probe in doc["probes"]] == PROBES
    assert report.passed(1e-3)
    assert not mellin_report(lemma2_plan(half, 10), PROBES, compensate_tail=False).passed(
        1e-3
    )


def test_plan_document() -> None:
    """The JSON document lists N factors in plan order and reloads unchanged."""
    plan = theorem_plan(StableParams(0.25), 5)
    doc = json.loads(plan_to_json(plan))
    assert doc["N"] == 5
    assert [f["kind"] for f in doc["factors"]] == ["gamma"] + ["beta"] * 5
    assert plan_from_json(plan_to_json(plan)) == plan
    assert plan_to_dict(lemma3_plan(1.0, 2.0, 3))["a"] == 1.0


@pytest.mark.parametrize(
    "text",
    [
        pytest.param("not json", id="not_json"),
        pytest.param(
            '{"target": "nope", "N": 0, "global_log_scale": 0, "factors": []}',
            id="bad_target",
        ),
        pytest.param(
            '{"target": "gamma", "N": 2, "global_log_scale": 0,'
            ' "factors": [{"kind": "beta", "a": 1, "b": 1, "log_scale": 0}]}',
            id="wrong_count",
        ),
        pytest.param(
            '{"target": "gamma", "N": 1, "global_log_scale": 0,'
            ' "factors": [{"kind": "beta", "a": 1, "log_scale": 0}]}',
            id="missing_shape",
        ),
    ],
)
def test_plan_from_json_rejects_bad_documents(text: str) -> None:
    """Malformed documents raise ParameterError."""
    with pytest.raises(ParameterError):
        plan_from_json(text)
