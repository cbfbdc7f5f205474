"""
Discrete calculus on a chain: gradient, divergence, the two inner products
and the action functionals A(rho, psi) and A'(rho, V).

Fields are dense (n, n) matrices indexed [x, y]; entries off the support
of K are carried along and killed by the K(x,y) weight in every sum.
"""

import numpy as np

from entropic_ricci.core.chain import MarkovChain
from entropic_ricci.transport.means import alpha, theta
from entropic_ricci.utils.errors import ShapeMismatch


def _field(chain: MarkovChain, F) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if F.shape != (chain.n, chain.n):
        raise ShapeMismatch(f"field has shape {F.shape}, expected ({chain.n}, {chain.n})")
    return F


def gradient(chain: MarkovChain, psi) -> np.ndarray:
    psi = chain.check_potential(psi)
    return psi[None, :] - psi[:, None]


def divergence(chain: MarkovChain, V) -> np.ndarray:
    V = _field(chain, V)
    return 0.5 * np.sum((V - V.T) * chain.kernel, axis=1)


def laplacian(chain: MarkovChain, psi) -> np.ndarray:
    return chain.laplacian @ chain.check_potential(psi)


def rho_hat(chain: MarkovChain, rho) -> np.ndarray:
    """Edge density theta(rho(x), rho(y))."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (chain.n,):
        raise ShapeMismatch(f"density has shape {rho.shape}, chain has {chain.n} states")
    return theta(rho[:, None], rho[None, :])


def pi_inner(chain: MarkovChain, a, b) -> float:
    """<a, b>_pi for functions (1-d) or fields (2-d, with the 1/2 K pi weight)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeMismatch(f"operands have shapes {a.shape} and {b.shape}")
    if a.ndim == 1:
        if a.shape != (chain.n,):
            raise ShapeMismatch(f"function has shape {a.shape}, chain has {chain.n} states")
        return float(np.sum(a * b * chain.pi))
    _field(chain, a)
    return float(0.5 * np.sum(a * b * chain.weights))


def rho_inner(chain: MarkovChain, rho, Phi, Psi) -> float:
    Phi = _field(chain, Phi)
    Psi = _field(chain, Psi)
    return float(0.5 * np.sum(Phi * Psi * rho_hat(chain, rho) * chain.weights))


def action(chain: MarkovChain, rho, psi) -> float:
    """A(rho, psi) = |grad psi|_rho^2."""
    G = gradient(chain, psi)
    return rho_inner(chain, rho, G, G)


def action_prime(chain: MarkovChain, rho, V) -> float:
    """A'(rho, V); +inf when flux crosses an edge with zero edge density."""
    V = _field(chain, V)
    rho = np.asarray(rho, dtype=float)
    support = chain.kernel > 0
    cost = alpha(V[support], np.broadcast_to(rho[:, None], V.shape)[support],
                 np.broadcast_to(rho[None, :], V.shape)[support])
    return float(0.5 * np.sum(cost * chain.weights[support]))


def entropy(chain: MarkovChain, rho) -> float:
    """H(rho) = sum pi rho log rho with 0 log 0 = 0."""
    rho = np.asarray(rho, dtype=float)
    pos = rho > 0
    return float(np.sum(chain.pi[pos] * rho[pos] * np.log(rho[pos])))


def fisher(chain: MarkovChain, rho) -> float:
    """I(rho); +inf as soon as rho vanishes somewhere."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        return float("inf")
    log_rho = np.log(rho)
    diff = (rho[:, None] - rho[None, :]) * (log_rho[:, None] - log_rho[None, :])
    return float(0.5 * np.sum(diff * chain.weights))
