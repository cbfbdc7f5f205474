"""
Shared fixtures: a few small built-in chains and a seeded generator.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from entropic_ricci.core.chain import builtin  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale checks (deselect with -m 'not slow')")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def twopoint():
    return builtin("twopoint:1,1")


@pytest.fixture(scope="session")
def square():
    return builtin("hypercube:2")


@pytest.fixture(scope="session")
def cycle4():
    return builtin("cycle:4")


@pytest.fixture(scope="session")
def complete3():
    return builtin("complete:3")


def random_interior(chain, rng, count=None, floor=0.05):
    """Interior densities with every entry at least `floor`."""
    size = (chain.n,) if count is None else (count, chain.n)
    mu = rng.dirichlet(np.ones(chain.n), size=None if count is None else count)
    rho = mu / chain.pi
    rho = floor + (1.0 - floor) * rho
    return rho.reshape(size)
