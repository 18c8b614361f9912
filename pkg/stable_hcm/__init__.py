"""Positive stable laws: Beta-Gamma factorizations and HCM numerical checks."""

from __future__ import annotations

from .exceptions import (
    ConvergenceError,
    DomainError,
    NumericalError,
    ParameterError,
    StableHcmError,
)
from .factorizations import (
    BetaFactor,
    FactorizationPlan,
    GammaFactor,
    MellinReport,
    lemma2_plan,
    lemma3_plan,
    plan_mellin,
    power_plan,
    sample_plan,
    split_beta,
    theorem_plan,
    williams_plan,
)
from .hcm import CmReport, HypFunction, hcm_check, hm_check, v_of_w
from .products import GridDensity, ProductDensity, ProductSpec, product_density
from .stable import StableParams, density_half, density_series, sample_oracle

__version__ = "1.0.0"

__all__ = [
    "BetaFactor",
    "CmReport",
    "ConvergenceError",
    "DomainError",
    "FactorizationPlan",
    "GammaFactor",
    "GridDensity",
    "HypFunction",
    "MellinReport",
    "NumericalError",
    "ParameterError",
    "ProductDensity",
    "ProductSpec",
    "StableHcmError",
    "StableParams",
    "density_half",
    "density_series",
    "hcm_check",
    "hm_check",
    "lemma2_plan",
    "lemma3_plan",
    "plan_mellin",
    "power_plan",
    "product_density",
    "sample_oracle",
    "sample_plan",
    "split_beta",
    "theorem_plan",
    "v_of_w",
    "williams_plan",
]
