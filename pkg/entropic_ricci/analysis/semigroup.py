"""
Heat semigroup P_t = exp(t(K - I)), entropy, Fisher information and the
spectral gap.

Reversibility makes D^(1/2) (K - I) D^(-1/2) symmetric (D = diag pi), so
one eigendecomposition per chain gives every P_t and the exact Poincare
constant.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np
from scipy import linalg

from entropic_ricci.core.chain import MarkovChain
from entropic_ricci.transport.calculus import entropy, fisher
from entropic_ricci.utils.errors import EigFail, NegativeInput

logger = logging.getLogger(__name__)

__all__ = [
    "Spectrum",
    "spectrum",
    "heat",
    "poincare_lambda",
    "entropy",
    "fisher",
    "entropy_dissipation",
    "Linearisation",
    "linearisation",
    "dirichlet_form",
]


@dataclass(frozen=True)
class Spectrum:
    """Eigenpairs of the symmetrised generator, eigenvalues ascending in 1 - K."""

    gaps: np.ndarray
    vectors: np.ndarray
    sqrt_pi: np.ndarray


@lru_cache(maxsize=64)
def spectrum(chain: MarkovChain) -> Spectrum:
    s = np.sqrt(chain.pi)
    sym = s[:, None] * (np.eye(chain.n) - chain.kernel) / s[None, :]
    sym = 0.5 * (sym + sym.T)
    try:
        values, vectors = linalg.eigh(sym)
    except (linalg.LinAlgError, ValueError) as exc:
        raise EigFail(f"eigendecomposition failed for {chain.name or 'chain'}: {exc}") from exc
    values[0] = 0.0 if abs(values[0]) < 1e-12 else values[0]
    return Spectrum(values, vectors, s)


def heat(chain: MarkovChain, rho, t: float) -> np.ndarray:
    """P_t rho; rho may carry leading batch axes."""
    if t < 0:
        raise NegativeInput(f"heat flow time {t} must be nonnegative")
    rho = np.asarray(rho, dtype=float)
    if t == 0:
        return rho.copy()
    sp = spectrum(chain)
    coeffs = (rho * sp.sqrt_pi) @ sp.vectors
    out = (coeffs * np.exp(-t * sp.gaps)) @ sp.vectors.T / sp.sqrt_pi
    return out


def poincare_lambda(chain: MarkovChain) -> float:
    """Spectral gap of I - K in L^2(pi), the best constant in P(lambda)."""
    gap = float(spectrum(chain).gaps[1]) if chain.n > 1 else float("inf")
    if not gap > 0:
        raise EigFail(f"non-positive spectral gap {gap}")
    logger.debug("spectral gap of %s: %.15g", chain.name, gap)
    return gap


def dirichlet_form(chain: MarkovChain, phi) -> float:
    """|grad phi|_pi^2 = 1/2 sum (phi(y) - phi(x))^2 K(x, y) pi(x)."""
    phi = chain.check_potential(phi)
    G = phi[None, :] - phi[:, None]
    return float(0.5 * np.sum(G * G * chain.weights))


def entropy_dissipation(chain: MarkovChain, rho, t: float, h: float = 1e-5) -> Tuple[float, float]:
    """(finite-difference d/dt H(P_t rho), -I(P_t rho))."""
    if t > h:
        derivative = (entropy(chain, heat(chain, rho, t + h)) - entropy(chain, heat(chain, rho, t - h))) / (2 * h)
    else:
        derivative = (entropy(chain, heat(chain, rho, t + h)) - entropy(chain, heat(chain, rho, t))) / h
    return derivative, -fisher(chain, heat(chain, rho, t))


@dataclass(frozen=True)
class Linearisation:
    eps: Tuple[float, ...]
    entropy_ratios: Tuple[float, ...]
    fisher_ratios: Tuple[float, ...]
    entropy_limit: float
    fisher_limit: float
    entropy_target: float
    fisher_target: float


def _richardson(coarse: float, fine: float, ratio: float) -> float:
    return (ratio * fine - coarse) / (ratio - 1.0)


def linearisation(chain: MarkovChain, phi, eps: Sequence[float] = (1e-2, 1e-3)) -> Linearisation:
    """H(1 + eps phi)/eps^2 and I(1 + eps phi)/eps^2 with their extrapolated limits.

    phi is centred first; the limits are 1/2 |phi|_pi^2 and |grad phi|_pi^2.
    """
    phi = chain.check_potential(phi)
    phi = phi - np.dot(chain.pi, phi)
    if len(eps) != 2 or eps[0] <= eps[1]:
        raise NegativeInput("linearisation takes two step sizes, coarse first")
    scale = np.max(np.abs(phi))
    if scale * eps[0] >= 1:
        raise NegativeInput("1 + eps phi must stay positive")
    h_ratios, i_ratios = [], []
    for e in eps:
        rho = 1.0 + e * phi
        h_ratios.append(entropy(chain, rho) / e**2)
        i_ratios.append(fisher(chain, rho) / e**2)
    ratio = eps[0] / eps[1]
    return Linearisation(
        eps=tuple(eps),
        entropy_ratios=tuple(h_ratios),
        fisher_ratios=tuple(i_ratios),
        entropy_limit=_richardson(h_ratios[0], h_ratios[1], ratio),
        fisher_limit=_richardson(i_ratios[0], i_ratios[1], ratio),
        entropy_target=0.5 * float(np.dot(chain.pi, phi * phi)),
        fisher_target=dirichlet_form(chain, phi),
    )
