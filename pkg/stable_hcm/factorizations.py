"""Truncated Beta/Gamma product factorizations and their Mellin transforms.

A plan is the finite product

    exp(global_log_scale) × ∏ exp(log_scale) Γ_c × ∏ exp(log_scale) B_{a,b}

of independent factors, ordered by ascending n. Every Beta factor is mean
centred (E[log(scale × B)] = 0), so the omitted factors contribute to log X
a centred term whose variance is `tail_log_variance`.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import voluptuous as vol
from scipy import special

from .const import (
    KIND_BETA,
    KIND_GAMMA,
    PLAN_TARGETS,
    TAIL_EXPLICIT_TERMS,
    TARGET_GAMMA,
    TARGET_INVERSE_STABLE,
    TARGET_POWER,
    TARGET_THEOREM,
    TARGET_WILLIAMS,
)
from .exceptions import DomainError, NumericalError, ParameterError
from .specfun import EULER_GAMMA, digamma, log_gamma_ratio, trigamma
from .stable import StableParams
from .utils import integrate

_LOGGER = logging.getLogger(__name__)

# ln(float max) : au-delà, exp() déborde.
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


def _check_shape(value: float, name: str) -> None:
    if not (math.isfinite(value) and value > 0.0):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")


def _check_terms(n_terms: int) -> None:
    if n_terms < 1:
        raise ParameterError(f"truncation N must be >= 1, got {n_terms}")


def _check_probe(s: float) -> None:
    if not (math.isfinite(s) and s >= 0.0):
        raise DomainError(f"Mellin probe s must be >= 0, got {s!r}")


@dataclass(frozen=True)
class BetaFactor:
    """One factor exp(log_scale) × B_{a,b}."""

    a: float
    b: float
    log_scale: float = 0.0

    def __post_init__(self) -> None:
        """Validate the shapes."""
        _check_shape(self.a, "a")
        _check_shape(self.b, "b")

    def log_mellin(self, s: float) -> float:
        """ln E[(exp(log_scale) B)^s] = ln Γ(a+s)Γ(a+b)/(Γ(a)Γ(a+b+s)) + s·log_scale."""
        return (
            log_gamma_ratio(self.a, s)
            - log_gamma_ratio(self.a + self.b, s)
            + s * self.log_scale
        )

    @property
    def mean_log(self) -> float:
        """E[log(exp(log_scale) B)], zero for a centred factor."""
        return self.log_scale + digamma(self.a) - digamma(self.a + self.b)

    @property
    def log_variance(self) -> float:
        """Var[log B] = ψ′(a) − ψ′(a+b)."""
        return trigamma(self.a) - trigamma(self.a + self.b)


@dataclass(frozen=True)
class GammaFactor:
    """One factor exp(log_scale) × Γ_c."""

    c: float
    log_scale: float = 0.0

    def __post_init__(self) -> None:
        """Validate the shape."""
        _check_shape(self.c, "c")

    def log_mellin(self, s: float) -> float:
        """ln E[(exp(log_scale) Γ_c)^s] = ln Γ(c+s)/Γ(c) + s·log_scale."""
        return log_gamma_ratio(self.c, s) + s * self.log_scale


@dataclass(frozen=True)
class FactorizationPlan:
    """Truncated distributional identity, immutable once built."""

    target: str
    global_log_scale: float
    gamma_factors: tuple[GammaFactor, ...] = ()
    beta_factors: tuple[BetaFactor, ...] = ()
    tail_log_variance: float = 0.0
    alpha: float | None = None
    a: float | None = None
    b: float | None = None
    n: int | None = None
    _beta_arrays: tuple[np.ndarray, np.ndarray, np.ndarray] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        """Check the target tag and cache the Beta shapes as arrays."""
        if self.target not in PLAN_TARGETS:
            raise ParameterError(f"unknown plan target {self.target!r}")
        if not (math.isfinite(self.tail_log_variance) and self.tail_log_variance >= 0):
            raise ParameterError(
                f"tail_log_variance must be >= 0, got {self.tail_log_variance!r}"
            )
        arrays = (
            np.array([f.a for f in self.beta_factors], dtype=float),
            np.array([f.b for f in self.beta_factors], dtype=float),
            np.array([f.log_scale for f in self.beta_factors], dtype=float),
        )
        object.__setattr__(self, "_beta_arrays", arrays)

    @property
    def truncation_N(self) -> int:
        """Number of Beta factors retained."""
        return len(self.beta_factors)


def _beta_factors(
    a: np.ndarray, b: np.ndarray | float, log_scale: np.ndarray
) -> tuple[BetaFactor, ...]:
    b_arr = np.broadcast_to(np.asarray(b, dtype=float), a.shape)
    return tuple(
        BetaFactor(float(ai), float(bi), float(li))
        for ai, bi, li in zip(a, b_arr, log_scale, strict=True)
    )


def beta_tail_variance(a0: float, step: float, b: float, start: int) -> float:
    """
    Return Σ_{n ≥ start} [ψ′(a0 + n·step) − ψ′(a0 + b + n·step)].

    This is the variance of log ∏_{n ≥ start} B_{a0+n·step, b}. The first
    TAIL_EXPLICIT_TERMS terms are summed directly, the rest by Euler-Maclaurin
    (integral + three correction terms) with g(x) = ψ′(a0+x·step) − ψ′(a0+b+x·step).
    """
    for value, name in ((a0, "a0"), (step, "step"), (b, "b")):
        _check_shape(value, name)
    if start < 0:
        raise ParameterError(f"start index must be >= 0, got {start}")

    n = np.arange(start, start + TAIL_EXPLICIT_TERMS, dtype=float)
    lower = a0 + n * step
    explicit = float(np.sum(special.polygamma(1, lower) - special.polygamma(1, lower + b)))

    m = start + TAIL_EXPLICIT_TERMS
    x, y = a0 + m * step, a0 + b + m * step
    integral = (special.psi(y) - special.psi(x)) / step
    g = special.polygamma(1, x) - special.polygamma(1, y)
    g1 = step * (special.polygamma(2, x) - special.polygamma(2, y))
    g3 = step**3 * (special.polygamma(4, x) - special.polygamma(4, y))
    remainder = float(integral + g / 2 - g1 / 12 + g3 / 720)

    _LOGGER.debug(
        "tail variance from %d: explicit %.6e, remainder %.6e", start, explicit, remainder
    )
    return explicit + remainder


def truncation_tail_variance(p: StableParams, n_terms: int) -> float:
    """Σ_{n ≥ N} (ψ′(α+nα) − ψ′(1+nα)): variance of the factors dropped by lemma2_plan."""
    alpha = p.alpha
    return beta_tail_variance(alpha, alpha, 1.0 - alpha, n_terms)


def tail_variance_terms(p: StableParams, count: int) -> np.ndarray:
    """Per-factor variances ψ′(α+nα) − ψ′(1+nα) for n = 0..count−1."""
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    alpha = p.alpha
    n = np.arange(count, dtype=float)
    return special.polygamma(1, alpha + n * alpha) - special.polygamma(1, 1.0 + n * alpha)


def variance_bound_integral(p: StableParams) -> float:
    """∫₀^∞ x e^{−αx}(1 − e^{−(1−α)x}) / ((1 − e^{−x})(1 − e^{−αx})) dx by quadrature."""
    alpha = p.alpha

    def integrand(x: float) -> float:
        if x == 0.0:
            return (1.0 - alpha) / alpha
        return (
            x
            * math.exp(-alpha * x)
            * -math.expm1(-(1.0 - alpha) * x)
            / (math.expm1(-x) * math.expm1(-alpha * x))
        )

    head, _ = integrate(integrand, 0.0, 1.0, epsrel=1e-12)
    tail, _ = integrate(integrand, 1.0, math.inf, epsrel=1e-12)
    return head + tail


def lemma2_plan(p: StableParams, n_terms: int) -> FactorizationPlan:
    """
    Z_α^{−1} ≅ e^{γ(1−1/α)} ∏_{n<N} e^{ψ(1+nα)−ψ(α+nα)} B_{α+nα, 1−α}.
    """
    _check_terms(n_terms)
    alpha = p.alpha
    n = np.arange(n_terms, dtype=float)
    a = alpha + n * alpha
    log_scale = special.psi(1.0 + n * alpha) - special.psi(a)
    return FactorizationPlan(
        target=TARGET_INVERSE_STABLE,
        global_log_scale=EULER_GAMMA * (1.0 - 1.0 / alpha),
        beta_factors=_beta_factors(a, 1.0 - alpha, log_scale),
        tail_log_variance=truncation_tail_variance(p, n_terms),
        alpha=alpha,
    )


def lemma3_plan(a: float, b: float, n_terms: int) -> FactorizationPlan:
    """Γ_a ≅ e^{ψ(a)} ∏_{n<N} e^{ψ(a+b+nb)−ψ(a+nb)} B_{a+nb, b}."""
    _check_shape(a, "a")
    _check_shape(b, "b")
    _check_terms(n_terms)
    n = np.arange(n_terms, dtype=float)
    shapes = a + n * b
    log_scale = special.psi(shapes + b) - special.psi(shapes)
    return FactorizationPlan(
        target=TARGET_GAMMA,
        global_log_scale=digamma(a),
        beta_factors=_beta_factors(shapes, b, log_scale),
        tail_log_variance=beta_tail_variance(a, b, b, n_terms),
        a=a,
        b=b,
    )


def split_beta(factor: BetaFactor, b_part: float) -> tuple[BetaFactor, BetaFactor]:
    """
    B_{a, b} ≅ B_{a, b_part} × B_{a+b_part, b−b_part}.

    The first piece gets the centring scale ψ(a+b_part) − ψ(a), the second
    the rest of the input scale, so the product of the two keeps the input
    scale and both pieces stay centred when the input is.
    """
    if not (math.isfinite(b_part) and 0.0 < b_part < factor.b):
        raise ParameterError(f"b_part must lie in (0, {factor.b}), got {b_part!r}")
    first_scale = digamma(factor.a + b_part) - digamma(factor.a)
    first = BetaFactor(factor.a, b_part, first_scale)
    second = BetaFactor(
        factor.a + b_part, factor.b - b_part, factor.log_scale - first_scale
    )
    return first, second


def theorem_plan(p: StableParams, n_terms: int) -> FactorizationPlan:
    """
    Z_α^{−1} ≅ e^{γ(1−1/α)−ψ(α)} Γ_α ∏_{n<N} e^{ψ(1+nα)−ψ(2α+nα)} B_{2α+nα, 1−2α}.

    Each lemma2_plan factor is split at b_part = α; the first pieces rebuild Γ_α
    exactly, so only the second pieces are truncated. Needs α < 1/2.
    """
    alpha = p.alpha
    if alpha >= 0.5:
        raise DomainError(
            f"decomposition needs alpha < 1/2, got {alpha}; use 4 Gamma_1/2 at 1/2"
        )
    base = lemma2_plan(p, n_terms)
    tails = tuple(split_beta(factor, alpha)[1] for factor in base.beta_factors)
    return FactorizationPlan(
        target=TARGET_THEOREM,
        global_log_scale=base.global_log_scale - digamma(alpha),
        gamma_factors=(GammaFactor(alpha),),
        beta_factors=tails,
        tail_log_variance=beta_tail_variance(2 * alpha, alpha, 1 - 2 * alpha, n_terms),
        alpha=alpha,
    )


def power_plan(p: StableParams, n_terms: int) -> FactorizationPlan:
    """
    Z_α^{−α} ≅ e^{γ(α−1)} ∏_{n<N} e^{ψ((n+1)/α)−ψ(1+n/α)} B_{1+n/α, 1/α−1}.

    The scale is oriented so that every factor is centred, as in the other plans.
    """
    _check_terms(n_terms)
    alpha = p.alpha
    n = np.arange(n_terms, dtype=float)
    a = 1.0 + n / alpha
    b = 1.0 / alpha - 1.0
    log_scale = special.psi((n + 1.0) / alpha) - special.psi(a)
    return FactorizationPlan(
        target=TARGET_POWER,
        global_log_scale=EULER_GAMMA * (alpha - 1.0),
        beta_factors=_beta_factors(a, b, log_scale),
        tail_log_variance=beta_tail_variance(1.0, 1.0 / alpha, b, n_terms),
        alpha=alpha,
    )


def williams_plan(n: int) -> FactorizationPlan:
    """Z_{1/n}^{−1} ≅ n^n × Γ_{1/n} × … × Γ_{(n−1)/n}, exact (no truncation)."""
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    return FactorizationPlan(
        target=TARGET_WILLIAMS,
        global_log_scale=n * math.log(n),
        gamma_factors=tuple(GammaFactor(k / n) for k in range(1, n)),
        alpha=1.0 / n,
        n=n,
    )


def plan_log_mellin(
    plan: FactorizationPlan, s: float, *, compensate_tail: bool = True
) -> float:
    """
    Return ln E[X^s] for the plan.

    With compensate_tail the omitted centred factors are accounted for to
    second order by adding s²·tail_log_variance/2.
    """
    _check_probe(s)
    total = s * plan.global_log_scale
    total += math.fsum(factor.log_mellin(s) for factor in plan.gamma_factors)
    a, b, log_scale = plan._beta_arrays
    if a.size:
        terms = (
            special.gammaln(a + s)
            - special.gammaln(a)
            - special.gammaln(a + b + s)
            + special.gammaln(a + b)
            + s * log_scale
        )
        total += math.fsum(terms.tolist())
    if compensate_tail:
        total += 0.5 * s * s * plan.tail_log_variance
    return total


def plan_mellin(
    plan: FactorizationPlan,
    s: float,
    *,
    log_space: bool = False,
    compensate_tail: bool = True,
) -> float:
    """
    E[X^s] for the plan, or its logarithm with log_space=True.

    By default the result carries the exp(s²·tail_log_variance/2) correction
    for the omitted factors; compensate_tail=False gives the bare truncated
    product.
    """
    log_value = plan_log_mellin(plan, s, compensate_tail=compensate_tail)
    if log_space:
        return log_value
    if log_value > _LOG_FLOAT_MAX:
        raise NumericalError(
            f"plan Mellin at s={s} overflows (log value {log_value:.6g}); use log_space"
        )
    return math.exp(log_value)


def sample_plan(
    plan: FactorizationPlan,
    n: int,
    seed: int,
    *,
    compensate_tail: bool = False,
) -> np.ndarray:
    """
    Draw n copies of the truncated product, deterministic given seed.

    Factors are drawn in plan order from one generator. With compensate_tail
    a N(0, tail_log_variance) term is added to log X, drawn last.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    log_x = np.full(n, plan.global_log_scale)
    for gamma in plan.gamma_factors:
        log_x += np.log(rng.gamma(gamma.c, size=n)) + gamma.log_scale
    for beta in plan.beta_factors:
        log_x += np.log(rng.beta(beta.a, beta.b, size=n)) + beta.log_scale
    if compensate_tail and plan.tail_log_variance > 0:
        log_x += rng.normal(0.0, math.sqrt(plan.tail_log_variance), size=n)
    return np.exp(log_x)


def williams_constant_check(n: int) -> tuple[float, float]:
    """Return (exp(−(n−1)γ − Σ_{k<n} ψ(k/n)), n^n); both agree for every n ≥ 2."""
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    psi_sum = math.fsum(digamma(k / n) for k in range(1, n))
    return math.exp(-(n - 1) * EULER_GAMMA - psi_sum), float(n**n)


def malmsten_check(a: float, s: float) -> tuple[float, float]:
    """
    Return (Malmsten right-hand side, ln Γ(a+s) − ln Γ(a)).

    Right-hand side: ψ(a)s + ∫₀^∞ (e^{−st} − 1 + st) e^{−at} / (t(1 − e^{−t})) dt,
    which is the integral over (−∞, 0) after t = −x.
    """
    _check_shape(a, "a")
    _check_shape(s, "s")

    def integrand(t: float) -> float:
        if t == 0.0:
            return 0.5 * s * s
        return (math.expm1(-s * t) + s * t) * math.exp(-a * t) / (-t * math.expm1(-t))

    head, _ = integrate(integrand, 0.0, 1.0, epsrel=1e-12)
    tail, _ = integrate(integrand, 1.0, math.inf, epsrel=1e-12)
    return digamma(a) * s + head + tail, log_gamma_ratio(a, s)


def target_log_mellin(plan: FactorizationPlan, s: float) -> float:
    """Closed-form ln E[X^s] of the law the plan approximates."""
    _check_probe(s)
    if plan.target in (TARGET_INVERSE_STABLE, TARGET_THEOREM, TARGET_WILLIAMS):
        alpha = _require(plan.alpha, "alpha")
        return log_gamma_ratio(1.0, s / alpha) - log_gamma_ratio(1.0, s)
    if plan.target == TARGET_GAMMA:
        return log_gamma_ratio(_require(plan.a, "a"), s)
    alpha = _require(plan.alpha, "alpha")
    return log_gamma_ratio(1.0, s) - log_gamma_ratio(1.0, alpha * s)


def target_mellin(plan: FactorizationPlan, s: float) -> float:
    """Closed-form E[X^s] of the law the plan approximates."""
    return math.exp(target_log_mellin(plan, s))


def _require(value: float | None, name: str) -> float:
    if value is None:
        raise ParameterError(f"plan has no {name} parameter")
    return value


@dataclass(frozen=True)
class MellinReport:
    """Plan against closed-form Mellin values at the probe points."""

    target: str
    truncation_N: int
    compensated: bool
    probes: tuple[float, ...]
    plan_values: tuple[float, ...]
    target_values: tuple[float, ...]

    @property
    def relative_errors(self) -> tuple[float, ...]:
        """|plan/target − 1| per probe."""
        return tuple(
            abs(got / want - 1.0)
            for got, want in zip(self.plan_values, self.target_values, strict=True)
        )

    @property
    def max_relative_error(self) -> float:
        return max(self.relative_errors, default=0.0)

    def passed(self, tolerance: float) -> bool:
        """True when every probe is within tolerance."""
        return self.max_relative_error < tolerance

    def to_dict(self) -> dict[str, Any]:
        return {
            "target": self.target,
            "N": self.truncation_N,
            "compensated": self.compensated,
            "probes": [
                {"s": s, "plan": got, "target": want, "relative_error": err}
                for s, got, want, err in zip(
                    self.probes,
                    self.plan_values,
                    self.target_values,
                    self.relative_errors,
                    strict=True,
                )
            ],
            "max_relative_error": self.max_relative_error,
        }


def mellin_report(
    plan: FactorizationPlan, probes: Sequence[float], *, compensate_tail: bool = True
) -> MellinReport:
    """Evaluate the plan and its target at every probe."""
    if not probes:
        raise ParameterError("at least one Mellin probe is required")
    probes = tuple(float(s) for s in probes)
    return MellinReport(
        target=plan.target,
        truncation_N=plan.truncation_N,
        compensated=compensate_tail,
        probes=probes,
        plan_values=tuple(
            plan_mellin(plan, s, compensate_tail=compensate_tail) for s in probes
        ),
        target_values=tuple(target_mellin(plan, s) for s in probes),
    )


_FACTOR_SCHEMA = vol.Any(
    vol.Schema(
        {
            vol.Required("kind"): KIND_BETA,
            vol.Required("a"): vol.Coerce(float),
            vol.Required("b"): vol.Coerce(float),
            vol.Required("log_scale"): vol.Coerce(float),
        }
    ),
    vol.Schema(
        {
            vol.Required("kind"): KIND_GAMMA,
            vol.Required("c"): vol.Coerce(float),
            vol.Required("log_scale"): vol.Coerce(float),
        }
    ),
)

PLAN_SCHEMA = vol.Schema(
    {
        vol.Required("target"): vol.In(sorted(PLAN_TARGETS)),
        vol.Optional("alpha"): vol.Coerce(float),
        vol.Optional("a"): vol.Coerce(float),
        vol.Optional("b"): vol.Coerce(float),
        vol.Optional("n"): vol.Coerce(int),
        vol.Required("N"): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Required("global_log_scale"): vol.Coerce(float),
        vol.Optional("tail_log_variance", default=0.0): vol.All(
            vol.Coerce(float), vol.Range(min=0.0)
        ),
        vol.Required("factors"): [_FACTOR_SCHEMA],
    }
)


def plan_to_dict(plan: FactorizationPlan) -> dict[str, Any]:
    """Plan document with the factor list in plan order (Gamma factors first)."""
    doc: dict[str, Any] = {"target": plan.target}
    if plan.target == TARGET_GAMMA:
        doc["a"] = plan.a
        doc["b"] = plan.b
    else:
        doc["alpha"] = plan.alpha
    if plan.n is not None:
        doc["n"] = plan.n
    doc["N"] = plan.truncation_N
    doc["global_log_scale"] = plan.global_log_scale
    doc["tail_log_variance"] = plan.tail_log_variance
    doc["factors"] = [
        {"kind": KIND_GAMMA, "c": f.c, "log_scale": f.log_scale}
        for f in plan.gamma_factors
    ] + [
        {"kind": KIND_BETA, "a": f.a, "b": f.b, "log_scale": f.log_scale}
        for f in plan.beta_factors
    ]
    return doc


def plan_to_json(plan: FactorizationPlan) -> str:
    return json.dumps(plan_to_dict(plan), indent=2)


def plan_from_json(text: str) -> FactorizationPlan:
    """Load and validate a plan document."""
    try:
        doc = PLAN_SCHEMA(json.loads(text))
    except (json.JSONDecodeError, vol.Invalid) as err:
        raise ParameterError(f"invalid plan document: {err}") from err

    gammas = tuple(
        GammaFactor(f["c"], f["log_scale"]) for f in doc["factors"] if f["kind"] == KIND_GAMMA
    )
    betas = tuple(
        BetaFactor(f["a"], f["b"], f["log_scale"])
        for f in doc["factors"]
        if f["kind"] == KIND_BETA
    )
    if len(betas) != doc["N"]:
        raise ParameterError(f"N={doc['N']} but the document lists {len(betas)} Beta factors")
    return FactorizationPlan(
        target=doc["target"],
        global_log_scale=doc["global_log_scale"],
        gamma_factors=gammas,
        beta_factors=betas,
        tail_log_variance=doc["tail_log_variance"],
        alpha=doc.get("alpha"),
        a=doc.get("a"),
        b=doc.get("b"),
        n=doc.get("n"),
    )
