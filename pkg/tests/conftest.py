"""Shared fixtures: small constraint systems with known answers."""

import numpy as np
import pytest

from models.schemas import KernelFamily
from models.system import ConstraintSystem, Measure
from services.synthesis_service import SynthesisService


def random_system(seed: int, rows: int = 10, cols: int = 8, weighted: bool = True) -> ConstraintSystem:
    """Well-conditioned positive kernel with noisy data and per-datum sigma."""
    rng = np.random.default_rng(seed)
    kernel = rng.uniform(0.1, 1.0, size=(rows, cols))
    p = rng.uniform(0.0, 1.0, size=cols)
    p /= p.sum()
    f_true = kernel @ p
    sigma = 0.05 * f_true
    fobs = f_true + sigma * rng.standard_normal(rows)
    mu = Measure.from_sigma(sigma) if weighted else Measure.uniform(rows)
    return ConstraintSystem(kernel, fobs, mu=mu, sigma=sigma, f_true=f_true)


@pytest.fixture
def identity_system() -> ConstraintSystem:
    """2x2 identity kernel with f^o = (1, 0): alpha_1 = -alpha_2 = f~o."""
    return ConstraintSystem(np.eye(2), [1.0, 0.0])


@pytest.fixture
def small_system() -> ConstraintSystem:
    return random_system(7)


@pytest.fixture
def exponential_system() -> ConstraintSystem:
    """Exponential kernel exp(-0.01 n i) on i <= 10, n <= 5 with a smooth truth."""
    kernel = SynthesisService.kernel_from(KernelFamily.EXPONENTIAL, 10, 5)
    p = np.array([0.1, 0.3, 0.3, 0.2, 0.1])
    f_true = kernel @ p
    rng = np.random.default_rng(3)
    sigma = 0.01 * f_true
    fobs = f_true + sigma * rng.standard_normal(10)
    return ConstraintSystem(kernel, fobs, mu=Measure.from_sigma(sigma), sigma=sigma, f_true=f_true)


@pytest.fixture
def make_system():
    """Factory for random systems: make_system(seed, rows=10, cols=8, weighted=True)."""
    return random_system
