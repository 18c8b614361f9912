"""Configuration des tests de stable-hcm."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stable_hcm.stable import StableParams

# Les fonctions spéciales et les quadratures dépassent la deadline par défaut.
settings.register_profile(
    "numerics",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("numerics")


@pytest.fixture
def half() -> StableParams:
    """Loi stable d'indice 1/2, la seule à densité en forme fermée."""
    return StableParams(0.5)


@pytest.fixture
def rng() -> np.random.Generator:
    """Générateur à graine fixe pour les tirages de référence."""
    return np.random.default_rng(20240611)
