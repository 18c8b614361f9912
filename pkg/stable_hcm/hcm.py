"""Finite-difference tests of hyperbolic (complete) monotonicity.

A density f on (0, ∞) is HCM when, for every u > 0, the function

    H_u(w) = f(uv) f(u/v),   w = v + 1/v,

is completely monotone in w ≥ 2; HM when it is only non-increasing. Both
tests are one-sided: a pass is a necessary-condition certificate, a witness
is a disproof up to the tolerance.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .const import DEFAULT_EPSILON, DEFAULT_HM_EPSILON, MAX_WITNESSES_PER_ORDER
from .exceptions import DomainError, ParameterError

_LOGGER = logging.getLogger(__name__)

DensityFn = Callable[[Any], Any]

# Grille considérée comme arithmétique de pas δ à cette tolérance relative près.
_LATTICE_RTOL = 1e-9


def v_of_w(w: Any) -> Any:
    """Return v ≥ 1 with v + 1/v = w, for w ≥ 2 (scalar or array)."""
    ws = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(ws)) or np.any(ws < 2.0):
        raise DomainError(f"w must be finite and >= 2, got {w!r}")
    v = (ws + np.sqrt((ws - 2.0) * (ws + 2.0))) / 2.0
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class HypFunction:
    """H_u(w) = f(uv) f(u/v) for a density f and an anchor u > 0."""

    density: DensityFn
    u: float
    vectorized: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.u) and self.u > 0.0):
            raise DomainError(f"anchor u must be > 0, got {self.u!r}")

    def _density_values(self, xs: np.ndarray) -> np.ndarray:
        if self.vectorized:
            return np.asarray(self.density(xs), dtype=float)
        return np.array([self.density(float(x)) for x in xs], dtype=float)

    def values(self, ws: Any) -> np.ndarray:
        """H_u on an array of w values."""
        vs = np.atleast_1d(v_of_w(ws))
        f = self._density_values(np.concatenate([self.u * vs, self.u / vs]))
        return f[: vs.size] * f[vs.size :]

    def __call__(self, w: float) -> float:
        return float(self.values(w)[0])


@dataclass(frozen=True)
class Witness:
    """Grid point where (−1)^k Δ^k H_u(w) < −ε·scale; value is the ratio to scale."""

    k: int
    w: float
    value: float
    u: float

    def to_dict(self) -> dict[str, Any]:
        return {"k": self.k, "w": self.w, "value": self.value}


@dataclass(frozen=True)
class CmReport:
    """Outcome of an HM or HCM finite-difference scan."""

    u: float | tuple[float, ...]
    w_min: float
    w_max: float
    n_points: int
    delta: float | None
    max_order: int
    epsilon: float
    passes: tuple[bool, ...]
    witnesses: tuple[Witness, ...] = field(default=())

    @property
    def passed(self) -> bool:
        """True when every order passes."""
        return all(self.passes)

    def witnesses_at(self, k: int) -> tuple[Witness, ...]:
        return tuple(wit for wit in self.witnesses if wit.k == k)

    def to_dict(self) -> dict[str, Any]:
        """Report document, fields u/w_min/w_max/n_points/delta/max_order/epsilon/pass/witnesses."""
        return {
            "u": list(self.u) if isinstance(self.u, tuple) else self.u,
            "w_min": self.w_min,
            "w_max": self.w_max,
            "n_points": self.n_points,
            "delta": self.delta,
            "max_order": self.max_order,
            "epsilon": self.epsilon,
            "pass": self.passed,
            "witnesses": [wit.to_dict() for wit in self.witnesses],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary(self) -> str:
        """One-line verdict."""
        if self.passed:
            return (
                f"pass up to order {self.max_order} (necessary condition only, "
                f"eps={self.epsilon:g})"
            )
        failed = [k for k, ok in enumerate(self.passes) if not ok]
        worst = min(self.witnesses, key=lambda wit: wit.value)
        return (
            f"fail at orders {failed}: worst value {worst.value:.3e} "
            f"at w={worst.w:.6g} (k={worst.k}, u={worst.u:g})"
        )


def _check_w_grid(w_grid: Sequence[float] | np.ndarray) -> np.ndarray:
    ws = np.asarray(w_grid, dtype=float)
    if ws.ndim != 1 or ws.size == 0:
        raise ParameterError("w grid must be a non-empty list")
    if not np.all(np.isfinite(ws)) or ws.min() < 2.0:
        raise ParameterError(f"w grid must stay in [2, inf), min is {ws.min()!r}")
    return np.sort(ws)


def _worst(witnesses: list[Witness]) -> list[Witness]:
    kept = sorted(witnesses, key=lambda wit: wit.value)[:MAX_WITNESSES_PER_ORDER]
    return sorted(kept, key=lambda wit: (wit.u, wit.w))


def _scan_order(
    k: int,
    signed: np.ndarray,
    scale: np.ndarray,
    ws: np.ndarray,
    u: float,
    epsilon: float,
) -> tuple[bool, list[Witness]]:
    """Flag grid points where signed < −ε·scale."""
    bad = signed < -epsilon * scale
    ratio = np.divide(signed, scale, out=np.zeros_like(signed), where=scale > 0)
    found = [
        Witness(k=k, w=float(ws[i]), value=float(ratio[i]), u=u)
        for i in np.flatnonzero(bad)
    ]
    return not found, found


def _stencil_values(
    hyp: HypFunction, ws: np.ndarray, delta: float, max_order: int
) -> np.ndarray:
    """H_u(w_i + jδ) for j = 0..K, as an (n, K+1) array."""
    steps = np.diff(ws)
    if ws.size > 1 and np.allclose(steps, delta, rtol=_LATTICE_RTOL, atol=0.0):
        lattice = ws[0] + delta * np.arange(ws.size + max_order)
        values = hyp.values(lattice)
        _LOGGER.debug("lattice reuse: %d evaluations of H", lattice.size)
        return np.lib.stride_tricks.sliding_window_view(values, max_order + 1)[: ws.size]
    points = ws[:, None] + delta * np.arange(max_order + 1)[None, :]
    return hyp.values(points.ravel()).reshape(points.shape)


def forward_differences(
    hyp: HypFunction, w_grid: Sequence[float] | np.ndarray, delta: float, max_order: int
) -> tuple[np.ndarray, np.ndarray]:
    """
    Return (Δ_δ^k H_u(w_i), max_{j ≤ k} |H_u(w_i + jδ)|), both shaped (K+1, n).

    The grid is sorted first.
    """
    ws = _check_w_grid(w_grid)
    stencil = _stencil_values(hyp, ws, delta, max_order)
    diffs = np.empty((max_order + 1, ws.size))
    scales = np.empty_like(diffs)
    for k in range(max_order + 1):
        window = stencil[:, : k + 1]
        diffs[k] = np.diff(window, n=k, axis=1)[:, 0]
        scales[k] = np.max(np.abs(window), axis=1)
    return diffs, scales


def hcm_check(
    f: DensityFn,
    u: float,
    w_grid: Sequence[float] | np.ndarray,
    delta: float,
    max_order: int,
    epsilon: float = DEFAULT_EPSILON,
    *,
    vectorized: bool = False,
) -> CmReport:
    """
    Check (−1)^k Δ_δ^k H_u(w) ≥ −ε·scale(w) for k = 0..K on every grid w.

    scale(w) is max |H_u| over the stencil w, w+δ, …, w+kδ.
    """
    if max_order < 1:
        raise ParameterError(f"max order must be >= 1, got {max_order}")
    if not (math.isfinite(delta) and delta > 0.0):
        raise ParameterError(f"step delta must be > 0, got {delta!r}")
    ws = _check_w_grid(w_grid)
    diffs, scales = forward_differences(HypFunction(f, u, vectorized), ws, delta, max_order)

    passes: list[bool] = []
    witnesses: list[Witness] = []
    for k in range(max_order + 1):
        ok, found = _scan_order(k, (-1.0) ** k * diffs[k], scales[k], ws, u, epsilon)
        passes.append(ok)
        witnesses.extend(_worst(found))

    report = CmReport(
        u=u,
        w_min=float(ws[0]),
        w_max=float(ws[-1]),
        n_points=int(ws.size),
        delta=delta,
        max_order=max_order,
        epsilon=epsilon,
        passes=tuple(passes),
        witnesses=tuple(witnesses),
    )
    _LOGGER.info("hcm_check u=%s: %s", u, report.summary())
    return report


def hm_check(
    f: DensityFn,
    u_grid: Sequence[float] | np.ndarray,
    w_grid: Sequence[float] | np.ndarray,
    epsilon: float = DEFAULT_HM_EPSILON,
    *,
    vectorized: bool = False,
) -> CmReport:
    """
    Check that H_u is non-increasing along the w grid, for every u.

    A witness is a consecutive pair with H(w_{i+1}) − H(w_i) > ε·scale; its
    value is −(H(w_{i+1}) − H(w_i))/scale, negative like order-1 HCM witnesses.
    """
    us = tuple(float(u) for u in np.atleast_1d(np.asarray(u_grid, dtype=float)))
    if not us:
        raise ParameterError("u grid must be non-empty")
    ws = _check_w_grid(w_grid)
    steps = np.diff(ws)
    uniform = ws.size > 1 and np.allclose(steps, steps[0], rtol=_LATTICE_RTOL, atol=0.0)

    found: list[Witness] = []
    for u in us:
        values = HypFunction(f, u, vectorized).values(ws)
        scale = np.maximum(np.abs(values[:-1]), np.abs(values[1:]))
        _, at_u = _scan_order(1, -np.diff(values), scale, ws[:-1], u, epsilon)
        found.extend(at_u)

    report = CmReport(
        u=us,
        w_min=float(ws[0]),
        w_max=float(ws[-1]),
        n_points=int(ws.size),
        delta=float(steps[0]) if uniform else None,
        max_order=1,
        epsilon=epsilon,
        passes=(True, not found),
        witnesses=tuple(_worst(found)),
    )
    _LOGGER.info("hm_check u=%s: %s", us, report.summary())
    return report
