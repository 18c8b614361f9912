"""Positive α-stable law normalised by E[exp(−λ Z_α)] = exp(−λ^α)."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import optimize, special

from .const import (
    CANCELLATION_LIMIT,
    SERIES_CHUNK,
    SERIES_MAX_TERMS,
    SERIES_PEAK_LIMIT,
    SERIES_REL_TOL,
)
from .exceptions import ConvergenceError, DomainError, ParameterError
from .specfun import log_gamma_ratio
from .utils import integrate

_LOGGER = logging.getLogger(__name__)

# Grille grossière de k pour estimer le pic des termes de la série.
_PEAK_PROBE = np.unique(np.geomspace(1, SERIES_MAX_TERMS, 256).astype(int))


@dataclass(frozen=True)
class StableParams:
    """Stability index α of the positive stable law Z_α."""

    alpha: float

    def __post_init__(self) -> None:
        """Reject α outside the open interval (0, 1)."""
        if not (math.isfinite(self.alpha) and 0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    @property
    def kanter_exponent(self) -> float:
        """Exponent α/(1−α) of x in the integral representation."""
        return self.alpha / (1.0 - self.alpha)


def _check_x(x: float) -> float:
    x = float(x)
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"x must be finite and > 0, got {x!r}")
    return x


def density_half(x: float) -> float:
    """Closed-form density of Z_{1/2}: (1/(2√(π x³))) e^{−1/(4x)}."""
    x = _check_x(x)
    return math.exp(-1.0 / (4.0 * x)) / (2.0 * math.sqrt(math.pi * x**3))


def _log_kanter_a(p: StableParams, u: float) -> float:
    """ln A(u) with A(u) = sin(αu)^{α/(1−α)} sin((1−α)u) / sin(u)^{1/(1−α)}."""
    a = p.alpha
    return (
        p.kanter_exponent * math.log(math.sin(a * u))
        + math.log(math.sin((1.0 - a) * u))
        - math.log(math.sin(u)) / (1.0 - a)
    )


def density_integral(p: StableParams, x: float) -> float:
    """
    Evaluate f_α(x) through the uniform-angle integral representation.

    P(Z_α ≤ x) = (1/π) ∫₀^π exp(−A(u) x^{−α/(1−α)}) du, so that
    f_α(x) = (1/π) ∫₀^π (α/(1−α)) x^{−1/(1−α)} A(u) exp(−A(u) x^{−α/(1−α)}) du.
    The integrand is positive: no cancellation, whatever x.
    """
    x = _check_x(x)
    alpha = p.alpha
    log_t = -p.kanter_exponent * math.log(x)
    log_prefactor = math.log(p.kanter_exponent) - math.log(x) / (1.0 - alpha)

    def integrand(u: float) -> float:
        log_a = _log_kanter_a(p, u)
        return math.exp(log_prefactor + log_a - math.exp(log_a + log_t))

    # Le maximum de A e^{−A t} est en A = 1/t ; on le signale à quad quand il
    # tombe à l'intérieur de (0, π) (grands x).
    points = None
    log_a_min = p.kanter_exponent * math.log(alpha) + math.log(1.0 - alpha)
    if -log_t > log_a_min:
        edge = 1e-12
        u_peak = optimize.brentq(
            lambda u: _log_kanter_a(p, u) + log_t, edge, math.pi - edge, xtol=1e-14
        )
        points = [u_peak]

    value, _ = integrate(integrand, 0.0, math.pi, points=points)
    _LOGGER.debug("density_integral(alpha=%s, x=%s) = %.17g", alpha, x, value / math.pi)
    return value / math.pi


def _series_terms(p: StableParams, x: float) -> tuple[np.ndarray, np.ndarray] | None:
    """
    Return (log |term| bound, signed factor) for the retained series terms.

    The bound Γ(kα+1)/k! · x^{−kα−1} ignores sin(πkα), which vanishes whenever
    kα is an integer: stopping on the signed term would stop too early.
    None means the terms peak above SERIES_PEAK_LIMIT (the sum is hopeless).
    """
    alpha = p.alpha
    log_x = math.log(x)
    log_peak_limit = math.log(SERIES_PEAK_LIMIT)

    probe = _PEAK_PROBE
    probe_mag = special.gammaln(probe * alpha + 1) - special.gammaln(probe + 1)
    probe_mag -= (probe * alpha + 1) * log_x
    if probe_mag.max() > log_peak_limit:
        return None

    logs: list[np.ndarray] = []
    peak = -math.inf
    start = 1
    while start <= SERIES_MAX_TERMS:
        stop = min(start + SERIES_CHUNK * len(logs) + SERIES_CHUNK, SERIES_MAX_TERMS + 1)
        k = np.arange(start, stop, dtype=float)
        log_mag = special.gammaln(k * alpha + 1) - special.gammaln(k + 1)
        log_mag -= (k * alpha + 1) * log_x
        logs.append(log_mag)
        peak = max(peak, float(log_mag.max()))
        cutoff = peak + math.log(SERIES_REL_TOL / CANCELLATION_LIMIT)

        below = np.nonzero((log_mag < cutoff) & (np.diff(log_mag, prepend=np.inf) < 0))[0]
        if below.size:
            last = int(start + below[0])
            all_logs = np.concatenate(logs)[: last - 1]
            kk = np.arange(1, last, dtype=float)
            signs = np.where(kk % 2 == 1, 1.0, -1.0) * np.sin(
                math.pi * np.fmod(kk * alpha, 2.0)
            )
            return all_logs, signs
        start = stop

    last_term = math.exp(float(np.concatenate(logs)[-1]))
    raise ConvergenceError(
        f"series for f_alpha(x={x}) did not converge in {SERIES_MAX_TERMS} terms",
        last_term=last_term,
    )


def density_series(p: StableParams, x: float, *, fallback: bool = True) -> float:
    """
    Evaluate f_α(x) = (1/π) Σ (−1)^{k+1} Γ(kα+1)/k! sin(πkα) x^{−kα−1}.

    When the partial sums cancel by more than CANCELLATION_LIMIT (small x), the
    value comes from `density_integral` instead. With fallback=False the series
    result is returned as is, and a ConvergenceError is raised when the term
    cap is hit.
    """
    x = _check_x(x)
    try:
        terms = _series_terms(p, x)
    except ConvergenceError:
        if not fallback:
            raise
        terms = None

    if terms is None:
        if not fallback:
            raise ConvergenceError(
                f"series for f_alpha(x={x}) peaks above {SERIES_PEAK_LIMIT:g}",
                last_term=math.inf,
            )
        _LOGGER.debug("alpha=%s x=%s: series hopeless, integral route", p.alpha, x)
        return density_integral(p, x)

    log_mag, signs = terms
    values = signs * np.exp(log_mag)
    total = math.fsum(values.tolist()) / math.pi
    largest = float(np.exp(log_mag.max())) / math.pi

    if largest > CANCELLATION_LIMIT * abs(total):
        if fallback:
            _LOGGER.debug(
                "alpha=%s x=%s: cancellation %.1e, integral route",
                p.alpha,
                x,
                largest / max(abs(total), 1e-300),
            )
            return density_integral(p, x)
        _LOGGER.warning(
            "alpha=%s x=%s: series cancellation %.1e, result unreliable",
            p.alpha,
            x,
            largest / max(abs(total), 1e-300),
        )

    # Bruit d'arrondi autour de zéro dans les queues.
    return max(total, 0.0)


def mellin_inverse_moment(p: StableParams, s: float) -> float:
    """Return E[Z_α^{−s}] = Γ(1+s/α)/Γ(1+s) for s ≥ 0."""
    if not (math.isfinite(s) and s >= 0.0):
        raise DomainError(f"s must be >= 0, got {s!r}")
    return math.exp(log_gamma_ratio(1.0, s / p.alpha) - log_gamma_ratio(1.0, s))


def _integrate_half_line(func: Callable[[float], float]) -> float:
    """∫₀^∞ func, split at 1 (density mass sits on both sides)."""
    head, _ = integrate(func, 0.0, 1.0, epsrel=1e-10, epsabs=1e-13)
    tail, _ = integrate(func, 1.0, math.inf, epsrel=1e-10, epsabs=1e-13)
    return head + tail


def laplace_check(p: StableParams, lam: float) -> tuple[float, float]:
    """
    Return (∫₀^∞ e^{−λx} f_α(x) dx by quadrature, e^{−λ^α}).

    The caller compares both components.
    """
    if not (math.isfinite(lam) and lam > 0.0):
        raise DomainError(f"lambda must be > 0, got {lam!r}")
    density = partial(density_series, p)
    quadrature = _integrate_half_line(lambda x: math.exp(-lam * x) * density(x))
    return quadrature, math.exp(-(lam**p.alpha))


def mellin_quadrature(p: StableParams, s: float) -> float:
    """Return ∫₀^∞ x^{−s} f_α(x) dx by quadrature (compare with mellin_inverse_moment)."""
    if not (math.isfinite(s) and s >= 0.0):
        raise DomainError(f"s must be >= 0, got {s!r}")
    density = partial(density_series, p)
    return _integrate_half_line(lambda x: x ** (-s) * density(x))


def sample_oracle(p: StableParams, n: int, seed: int) -> np.ndarray:
    """
    Draw n independent copies of Z_α, deterministic given seed.

    Exact uniform-angle construction: Z_α = (A(U)/E)^{(1−α)/α} with U uniform
    on (0, π) and E standard exponential, both from a per-call generator.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    alpha = p.alpha
    # random() tire dans [0, 1) : 1 − r écarte u = 0.
    u = math.pi * (1.0 - rng.random(n))
    e = rng.standard_exponential(n)
    log_a = (
        p.kanter_exponent * np.log(np.sin(alpha * u))
        + np.log(np.sin((1.0 - alpha) * u))
        - np.log(np.sin(u)) / (1.0 - alpha)
    )
    return np.exp((log_a - np.log(e)) / p.kanter_exponent)


def power_density(p: StableParams, q: float, y: float) -> float:
    """Density of Z_α^q at y > 0, for q ≠ 0."""
    if q == 0.0 or not math.isfinite(q):
        raise DomainError(f"power q must be finite and non-zero, got {q!r}")
    y = _check_x(y)
    x = y ** (1.0 / q)
    return density_series(p, x) * x / (abs(q) * y)


def conjectured_power_threshold(p: StableParams) -> float:
    """Smallest |q| for which Z_α^q is conjectured HCM when α ≤ 1/2: α/(1−α)."""
    return p.kanter_exponent


def density_callable(
    p: StableParams, *, closed_form: bool = False, power: float | None = None
) -> Callable[[float], float]:
    """Build the scalar density callable handed to the HCM checkers."""
    if closed_form:
        if p.alpha != 0.5:
            raise DomainError("closed form only exists for alpha = 1/2")
        if power is not None:
            raise ParameterError("closed form and power are exclusive")
        return density_half
    if power is not None:
        return partial(power_density, p, power)
    return partial(density_series, p)
