"""Densities of finite products Γ_c × B_{a_1,b_1} × … × B_{a_n,b_n}.

With a Gamma factor and a single Beta factor the density is closed form:

    g(x) = Γ(a+b)/(Γ(a)Γ(c)) x^{c−1} e^{−x} U(b, 1+c−a, x)   (Tricomi's U).

Every further Beta factor B_{a,b} is multiplied in by the convolution

    g(x) = ∫₀¹ h(x/t) f_B(t) dt/t = ∫₀^∞ h(x e^τ) f_B(e^{−τ}) dτ,

where h is the density of the product without it. The log variable τ keeps
the quadrature accurate down to the smallest grid nodes, where h(x/t) changes
over many decades of t. Products of Betas alone are convolved on (0, 1).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np
from scipy import integrate as sp_integrate
from scipy import special, stats

from .const import GRID_NODES_PER_DECADE, GRID_QUANTILE, MAX_BETA_FACTORS
from .exceptions import DomainError, ParameterError
from .specfun import log_gamma_ratio
from .utils import integrate, log_grid, positive_array

_LOGGER = logging.getLogger(__name__)

INTERPOLATION_LOG_LOG = "log-log"

# Convolutions Beta × Beta imbriquées : 1e-13 est hors de portée.
_CONVOLUTION_EPSREL = 1e-10
# Plancher de 1 − x près de 1 (en dessous, x = 1 − t n'est plus représentable).
_MIN_UPPER_GAP = 1e-10
_ENDPOINT_NUDGE = 1e-9
# e^{−800} est sous le plus petit flottant : la densité avec facteur Gamma y est nulle.
_GAMMA_CUTOFF = 800.0
_MOMENT_ORDERS = range(1, 21)


@dataclass(frozen=True)
class ProductSpec:
    """Independent product Γ_c × B_{a_1,b_1} × … (Gamma factor optional)."""

    gamma_shape: float | None = None
    beta_factors: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        """Validate shapes and factor count."""
        object.__setattr__(
            self,
            "beta_factors",
            tuple((float(a), float(b)) for a, b in self.beta_factors),
        )
        if self.gamma_shape is None and not self.beta_factors:
            raise ParameterError("product needs at least one factor")
        if len(self.beta_factors) > MAX_BETA_FACTORS:
            raise ParameterError(
                f"at most {MAX_BETA_FACTORS} Beta factors, got {len(self.beta_factors)}"
            )
        shapes = [v for pair in self.beta_factors for v in pair]
        if self.gamma_shape is not None:
            shapes.append(self.gamma_shape)
        positive_array(shapes, "product shapes")

    @property
    def min_a(self) -> float:
        return min((a for a, _ in self.beta_factors), default=math.inf)

    @property
    def beta_total(self) -> float:
        """Σ b_i: the Beta product behaves like (1 − y)^{Σb − 1} near 1."""
        return math.fsum(b for _, b in self.beta_factors)

    @property
    def lower_exponent(self) -> float:
        """β with density ≈ x^{β−1} near zero."""
        c = self.gamma_shape if self.gamma_shape is not None else math.inf
        return min(c, self.min_a)

    @property
    def satisfies_lemma_condition(self) -> bool:
        """c defined and c < min a_i: the product density is then HCM."""
        return self.gamma_shape is not None and self.gamma_shape < self.min_a

    @property
    def satisfies_remark_condition(self) -> bool:
        """Γ_c × B_{a,b} with c ≤ a+b (sufficient for HCM, necessity open)."""
        if self.gamma_shape is None or len(self.beta_factors) != 1:
            return False
        a, b = self.beta_factors[0]
        return self.gamma_shape <= a + b


def product_log_mellin(spec: ProductSpec, s: float) -> float:
    """ln E[X^s], defined for s > −lower_exponent."""
    if not (math.isfinite(s) and s > -spec.lower_exponent):
        raise DomainError(f"Mellin order must exceed {-spec.lower_exponent}, got {s!r}")
    total = 0.0
    if spec.gamma_shape is not None:
        total += log_gamma_ratio(spec.gamma_shape, s)
    for a, b in spec.beta_factors:
        total += log_gamma_ratio(a, s) - log_gamma_ratio(a + b, s)
    return total


def product_mellin(spec: ProductSpec, s: float) -> float:
    """E[X^s] as the product of the factor Mellin transforms."""
    return math.exp(product_log_mellin(spec, s))


def _beta_logpdf(a: float, b: float, y: float) -> float:
    return (a - 1.0) * math.log(y) + (b - 1.0) * math.log1p(-y) - special.betaln(a, b)


def _beta_product_density(factors: Sequence[tuple[float, float]], y: float) -> float:
    """
    Density of ∏ B_{a_i,b_i} at y by f(y) = ∫_y^1 f_B(t) f_R(y/t) dt/t.

    The endpoint singularities (t − y)^{Σb_R − 1} and (1 − t)^{b − 1} go to
    the algebraic weight of quad.
    """
    if not 0.0 < y < 1.0:
        return 0.0
    (a, b), rest = factors[0], factors[1:]
    if not rest:
        return math.exp(_beta_logpdf(a, b, y))
    b_rest = math.fsum(bi for _, bi in rest)
    log_norm = special.betaln(a, b)

    def integrand(t: float) -> float:
        # quad évalue aussi t = y, où seule la limite de la partie régulière a un sens.
        t = max(t, y * (1.0 + _ENDPOINT_NUDGE))
        inner = _beta_product_density(rest, y / t)
        if inner <= 0.0:
            return 0.0
        return math.exp(
            (a - 2.0) * math.log(t)
            - log_norm
            + math.log(inner)
            - (b_rest - 1.0) * math.log(t - y)
        )

    value, _ = integrate(
        integrand,
        y,
        1.0,
        epsrel=_CONVOLUTION_EPSREL,
        weight="alg",
        wvar=(b_rest - 1.0, b - 1.0),
    )
    return value


def _convolve_last_beta(
    inner: Callable[[float], float], a: float, b: float, x: float
) -> float:
    """
    ∫₀^∞ h(x e^τ) f_B(e^{−τ}) dτ for B = B_{a,b} and h = `inner`.

    On [0, 1] the factor τ^{b−1} of f_B goes to the algebraic weight of quad;
    past −ln x the argument of h exceeds 1 and h turns from power law to
    exponential decay; that point splits the rest of the range.
    """
    tau_end = math.log(_GAMMA_CUTOFF / x)
    if tau_end <= 0.0:
        return 0.0
    log_norm = special.betaln(a, b)

    def regular(tau: float) -> float:
        value = inner(x * math.exp(tau))
        if value <= 0.0:
            return 0.0
        shape = 1.0 if tau == 0.0 else -math.expm1(-tau) / tau
        return value * math.exp((1.0 - a) * tau - log_norm) * shape ** (b - 1.0)

    def outer(tau: float) -> float:
        value = inner(x * math.exp(tau))
        if value <= 0.0:
            return 0.0
        gap = -math.expm1(-tau)
        return value * math.exp((1.0 - a) * tau - log_norm) * gap ** (b - 1.0)

    head_end = min(1.0, tau_end)
    total, _ = integrate(
        regular,
        0.0,
        head_end,
        epsrel=_CONVOLUTION_EPSREL,
        weight="alg",
        wvar=(b - 1.0, 0.0),
    )
    if head_end < tau_end:
        split = -math.log(x)
        points = [split] if head_end < split < tau_end else None
        rest, _ = integrate(
            outer, head_end, tau_end, epsrel=_CONVOLUTION_EPSREL, points=points
        )
        total += rest
    return total


class ProductDensity:
    """Pointwise density of a ProductSpec, usable as an HCM checker input."""

    def __init__(self, spec: ProductSpec) -> None:
        """Set up the closed form, or the density without the last Beta factor."""
        self.spec = spec
        self._inner: ProductDensity | None = None
        self._log_const = 0.0
        c = spec.gamma_shape
        if c is None or not spec.beta_factors:
            return
        if len(spec.beta_factors) == 1:
            a, b = spec.beta_factors[0]
            self._log_const = special.gammaln(a + b) - special.gammaln(a) - special.gammaln(c)
            return
        self._inner = ProductDensity(ProductSpec(c, spec.beta_factors[:-1]))
        _LOGGER.debug(
            "density of %s: last Beta %s convolved in log variable",
            spec,
            spec.beta_factors[-1],
        )

    def _value(self, x: float) -> float:
        """Density at a scalar x > 0 for a spec with a Gamma factor and Beta factors."""
        if self._inner is not None:
            a, b = self.spec.beta_factors[-1]
            return _convolve_last_beta(self._inner._value, a, b, x)
        c = self.spec.gamma_shape
        assert c is not None
        a, b = self.spec.beta_factors[0]
        u = float(special.hyperu(b, 1.0 + c - a, x))
        if not u > 0.0:
            return 0.0
        return math.exp((c - 1.0) * math.log(x) - x + self._log_const + math.log(u))

    def log_density(self, x: Any) -> np.ndarray:
        """ln f at x (vectorised); −inf outside the support."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        positive_array(xs)
        spec = self.spec
        c = spec.gamma_shape
        if c is not None and not spec.beta_factors:
            return stats.gamma.logpdf(xs, c)
        if c is not None and len(spec.beta_factors) == 1:
            a, b = spec.beta_factors[0]
            return (
                (c - 1.0) * np.log(xs)
                - xs
                + self._log_const
                + np.log(special.hyperu(b, 1.0 + c - a, xs))
            )
        if c is not None:
            with np.errstate(divide="ignore"):
                return np.log([self._value(float(xi)) for xi in xs])
        if len(spec.beta_factors) == 1:
            a, b = spec.beta_factors[0]
            return stats.beta.logpdf(xs, a, b)
        with np.errstate(divide="ignore"):
            return np.log(
                [_beta_product_density(spec.beta_factors, float(xi)) for xi in xs]
            )

    def __call__(self, x: Any) -> Any:
        """Density at x: float for a scalar, array otherwise."""
        values = np.exp(self.log_density(x))
        if np.ndim(x) == 0:
            return float(values[0])
        return values


@dataclass(frozen=True, eq=False)
class GridDensity:
    """
    Density tabulated on a grid, with power-law tails at the ends.

    Below nodes[0] the density is taken as ∝ x^{lower_exponent − 1}. Above
    nodes[-1] it decays like e^{−x} when `upper_gap_exponent` is None (Gamma
    factor present), like (1 − x)^{upper_gap_exponent − 1} up to 1 otherwise.
    """

    nodes: np.ndarray
    values: np.ndarray
    lower_exponent: float
    upper_gap_exponent: float | None = None
    interpolation: str = INTERPOLATION_LOG_LOG

    def __post_init__(self) -> None:
        nodes = positive_array(self.nodes, "nodes")
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3 or np.any(np.diff(nodes) <= 0):
            raise ParameterError("nodes must be a strictly increasing list of >= 3 points")
        if values.shape != nodes.shape or np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ParameterError("values must be finite, >= 0 and match the nodes")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @cached_property
    def lower_tail_mass(self) -> float:
        return float(self.nodes[0] * self.values[0] / self.lower_exponent)

    @cached_property
    def upper_tail_mass(self) -> float:
        if self.upper_gap_exponent is None:
            return float(self.values[-1])
        gap = 1.0 - self.nodes[-1]
        return float(self.values[-1] * gap / self.upper_gap_exponent)

    def mass(self) -> float:
        """Simpson mass over the grid plus both analytic tails."""
        return self.moment(0)

    def moment(self, k: float) -> float:
        """E[X^k] from the grid and the tails."""
        x_lo, x_hi = self.nodes[0], self.nodes[-1]
        body = float(sp_integrate.simpson(self.nodes**k * self.values, x=self.nodes))
        lower = (
            self.lower_exponent * self.lower_tail_mass * x_lo**k / (self.lower_exponent + k)
        )
        return body + lower + self._upper_tail_moment(k)

    def _upper_tail_moment(self, k: float) -> float:
        """∫ x^k over the tail beyond nodes[-1]; Γ(k+1, x_hi) e^{x_hi} f(x_hi) for e^{−x}."""
        x_hi = float(self.nodes[-1])
        if self.upper_gap_exponent is not None:
            return x_hi**k * self.upper_tail_mass
        upper = special.gammaincc(k + 1.0, x_hi)
        if upper <= 0.0 or self.values[-1] <= 0.0:
            return 0.0
        return float(
            self.values[-1]
            * math.exp(x_hi + special.gammaln(k + 1.0) + math.log(upper))
        )

    def __call__(self, x: Any) -> Any:
        """Log-log interpolation inside the grid, tail laws outside."""
        xs = np.atleast_1d(positive_array(x))
        with np.errstate(divide="ignore"):
            log_values = np.log(self.values)
            out = np.exp(np.interp(np.log(xs), np.log(self.nodes), log_values))
        x_lo, x_hi = self.nodes[0], self.nodes[-1]
        below = xs < x_lo
        out[below] = self.values[0] * (xs[below] / x_lo) ** (self.lower_exponent - 1.0)
        above = xs > x_hi
        if self.upper_gap_exponent is None:
            out[above] = self.values[-1] * np.exp(-(xs[above] - x_hi))
        else:
            gap = np.clip(1.0 - xs[above], 0.0, None)
            out[above] = self.values[-1] * (gap / (1.0 - x_hi)) ** (
                self.upper_gap_exponent - 1.0
            )
            out[above & (xs >= 1.0)] = 0.0
        if np.ndim(x) == 0:
            return float(out[0])
        return out

    def to_csv(self, path: str | Path) -> None:
        """Two-column CSV `x,f` with a header row."""
        np.savetxt(
            path,
            np.column_stack([self.nodes, self.values]),
            delimiter=",",
            header="x,f",
            comments="",
            fmt="%.17g",
        )


def default_grid(
    spec: ProductSpec,
    *,
    per_decade: int = GRID_NODES_PER_DECADE,
    quantile: float = GRID_QUANTILE,
) -> np.ndarray:
    """
    Log-spaced nodes covering the [quantile, 1 − quantile] range.

    The ends come from Markov bounds on negative and positive moments; for
    Beta-only products the right half is log-spaced in 1 − x.
    """
    s = 0.9 * spec.lower_exponent
    x_lo = (quantile / product_mellin(spec, -s)) ** (1.0 / s)
    if spec.gamma_shape is not None:
        x_hi = min(
            (product_mellin(spec, k) / quantile) ** (1.0 / k) for k in _MOMENT_ORDERS
        )
        _LOGGER.debug("grid for %s: [%.3e, %.3e]", spec, x_lo, x_hi)
        return log_grid(x_lo, x_hi, per_decade)

    gap = max(quantile ** (1.0 / spec.beta_total) / 10.0, _MIN_UPPER_GAP)
    left = log_grid(min(x_lo, 0.25), 0.5, per_decade)
    right = 1.0 - log_grid(gap, 0.5, per_decade)[::-1]
    _LOGGER.debug("grid for %s: [%.3e, 1 - %.3e]", spec, left[0], gap)
    return np.concatenate([left, right[1:]])


def product_density(
    spec: ProductSpec, grid: Sequence[float] | np.ndarray | None = None
) -> GridDensity:
    """Tabulate the product density on `grid` (default_grid when omitted)."""
    nodes = default_grid(spec) if grid is None else np.asarray(grid, dtype=float)
    density = ProductDensity(spec)
    values = np.asarray(density(nodes), dtype=float)
    return GridDensity(
        nodes=nodes,
        values=values,
        lower_exponent=spec.lower_exponent,
        upper_gap_exponent=None if spec.gamma_shape is not None else spec.beta_total,
    )


def tilted_density(
    spec: ProductSpec, c: float, grid: Sequence[float] | np.ndarray | None = None
) -> GridDensity:
    """
    Tabulate y^{−c} f_B(y) / E[B^{−c}] for a single Beta factor.

    The result is the Beta(a − c, b) density.
    """
    if spec.gamma_shape is not None or len(spec.beta_factors) != 1:
        raise ParameterError("tilting needs a spec with exactly one Beta factor")
    a, b = spec.beta_factors[0]
    if not (math.isfinite(c) and c < a):
        raise DomainError(f"tilt c must be < a = {a}, got {c!r}")
    tilted = ProductSpec(None, ((a - c, b),))
    nodes = default_grid(tilted) if grid is None else positive_array(grid, "grid")
    log_norm = product_log_mellin(spec, -c)
    values = np.exp(stats.beta.logpdf(nodes, a, b) - c * np.log(nodes) - log_norm)
    return GridDensity(
        nodes=nodes, values=values, lower_exponent=a - c, upper_gap_exponent=b
    )


def shifted_inverse_density(a: float, b: float, x: Any) -> Any:
    """Density of B_{a,b}^{−1} − 1 at x > 0, by change of variables y = 1/(1+x)."""
    xs = positive_array(x)
    y = 1.0 / (1.0 + xs)
    values = stats.beta.pdf(y, a, b) * y * y
    return float(values) if values.ndim == 0 else values


def beta_prime_density(a: float, b: float, x: Any) -> Any:
    """x^{b−1}(1+x)^{−(a+b)} / B(b, a): closed form of shifted_inverse_density."""
    xs = positive_array(x)
    values = stats.betaprime.pdf(xs, b, a)
    return float(values) if values.ndim == 0 else values
