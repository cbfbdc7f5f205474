"""
Random densities and potentials for the falsification passes.

Every sampler takes an explicit numpy Generator; callers derive child
generators from one root seed so batches are reproducible whatever the
worker count.
"""

from typing import List, Sequence

import numpy as np

from entropic_ricci.core.chain import MarkovChain

CONCENTRATIONS = (0.2, 1.0, 5.0)
NEAR_BOUNDARY = 1e-6


def child_generators(seed: int, count: int) -> List[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _to_density(chain: MarkovChain, mu: np.ndarray) -> np.ndarray:
    mu = mu / mu.sum(axis=-1, keepdims=True)
    return mu / chain.pi


def dirichlet_densities(
    chain: MarkovChain,
    count: int,
    rng: np.random.Generator,
    concentration: float = 1.0,
    floor: float = 0.0,
) -> np.ndarray:
    """pi-densities whose measures are Dirichlet(concentration); rho >= floor after mixing."""
    mu = rng.dirichlet(np.full(chain.n, concentration), size=count)
    rho = _to_density(chain, mu)
    if floor > 0:
        rho = floor + (1.0 - floor) * rho
    return rho


def mixed_densities(
    chain: MarkovChain,
    count: int,
    rng: np.random.Generator,
    boundary_fraction: float = 0.25,
    floor: float = 0.0,
) -> np.ndarray:
    """Dirichlet mixture over several concentrations plus near-boundary draws.

    A near-boundary draw has one coordinate of its measure pushed to 1e-6.
    """
    if count == 0:
        return np.zeros((0, chain.n))
    choice = rng.integers(len(CONCENTRATIONS), size=count)
    mu = np.empty((count, chain.n))
    for i, a in enumerate(CONCENTRATIONS):
        rows = choice == i
        mu[rows] = rng.dirichlet(np.full(chain.n, a), size=int(rows.sum()))
    near = rng.random(count) < boundary_fraction
    if chain.n > 1 and np.any(near):
        coords = rng.integers(chain.n, size=int(near.sum()))
        rows = np.nonzero(near)[0]
        mu[rows, coords] = NEAR_BOUNDARY
    rho = _to_density(chain, mu)
    if floor > 0:
        rho = floor + (1.0 - floor) * rho
    return rho


def gauge(chain: MarkovChain, psi: np.ndarray) -> np.ndarray:
    """Remove the pi-mean so that sum pi psi = 0."""
    psi = np.asarray(psi, dtype=float)
    return psi - (psi @ chain.pi)[..., None]


def gaussian_potentials(chain: MarkovChain, count: int, rng: np.random.Generator) -> np.ndarray:
    return gauge(chain, rng.standard_normal((count, chain.n)))


def batches(total: int, size: int) -> Sequence[int]:
    full, rest = divmod(total, size)
    return [size] * full + ([rest] if rest else [])
