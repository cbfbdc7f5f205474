"""
Finite reversible Markov chains.

A MarkovChain is validated once at construction (validate_chain) and is
immutable afterwards: the kernel and stationary vector are read-only
numpy arrays. Densities and potentials are plain float vectors indexed
like `chain.states`.
"""

import logging
import re
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from scipy import linalg

from entropic_ricci.utils.config import Tolerances
from entropic_ricci.utils.errors import (
    BadLambda,
    BadSpec,
    EmptyProduct,
    NegativeInput,
    NotIrreducible,
    NotReversible,
    NotStochastic,
    ShapeMismatch,
    WeightSum,
)

logger = logging.getLogger(__name__)

Density = np.ndarray
Potential = np.ndarray
StateRef = Union[int, str]

DEFAULT_TOLERANCES = Tolerances()


def _frozen(array: np.ndarray) -> np.ndarray:
    out = np.array(array, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Irreducible kernel K with reversible stationary measure pi."""

    states: Tuple[str, ...]
    kernel: np.ndarray
    pi: np.ndarray
    name: str = ""

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def weights(self) -> np.ndarray:
        """Symmetric edge weights K(x,y)pi(x)."""
        return self.kernel * self.pi[:, None]

    @property
    def laplacian(self) -> np.ndarray:
        """Generator K - I."""
        return self.kernel - np.eye(self.n)

    def index(self, state: StateRef) -> int:
        if isinstance(state, (int, np.integer)):
            if not 0 <= state < self.n:
                raise BadSpec(f"state index {state} out of range for {self.n} states")
            return int(state)
        try:
            return self.states.index(str(state))
        except ValueError:
            raise BadSpec(f"unknown state '{state}'") from None

    def edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """Unordered support edges x < y with K(x,y) > 0."""
        xs, ys = np.nonzero(np.triu(self.kernel, k=1) > 0)
        return xs, ys

    def uniform(self) -> Density:
        return np.ones(self.n)

    def dirac(self, state: StateRef) -> Density:
        rho = np.zeros(self.n)
        i = self.index(state)
        rho[i] = 1.0 / self.pi[i]
        return rho

    def mass(self, rho: Density) -> float:
        return float(np.dot(self.pi, rho))

    def check_density(
        self,
        rho,
        interior: bool = False,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> Density:
        """Validate a pi-density and return it as a float vector."""
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.n,):
            raise ShapeMismatch(f"density has shape {rho.shape}, chain has {self.n} states")
        if np.any(rho < 0):
            raise NegativeInput("density has negative entries")
        mass = self.mass(rho)
        if abs(mass - 1.0) > tolerances.density_mass:
            raise BadSpec(f"density mass {mass:.15g} differs from 1", details={"mass": mass})
        if interior and np.any(rho <= 0):
            raise BadSpec("density must be strictly positive")
        return rho

    def check_potential(self, psi) -> Potential:
        psi = np.asarray(psi, dtype=float)
        if psi.shape != (self.n,):
            raise ShapeMismatch(f"potential has shape {psi.shape}, chain has {self.n} states")
        return psi

    def summary(self) -> dict:
        return {
            "name": self.name,
            "states": list(self.states),
            "pi": self.pi.tolist(),
            "reversibility_residual": detailed_balance_residual(self.kernel, self.pi),
            "diameter": int(graph_distance(self).max()),
        }


# ================================================================
# VALIDATION
# ================================================================

def detailed_balance_residual(kernel: np.ndarray, pi: np.ndarray) -> float:
    flux = kernel * pi[:, None]
    return float(np.max(np.abs(flux - flux.T))) if flux.size else 0.0


def support_graph(kernel: np.ndarray) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(kernel.shape[0]))
    xs, ys = np.nonzero(kernel > 0)
    graph.add_edges_from((int(x), int(y)) for x, y in zip(xs, ys) if x != y)
    return graph


def stationary_vector(kernel: np.ndarray) -> np.ndarray:
    """Unique solution of pi K = pi, sum(pi) = 1, from the null space of K^T - I."""
    n = kernel.shape[0]
    basis = linalg.null_space(kernel.T - np.eye(n), rcond=1e-12)
    if basis.shape[1] != 1:
        raise NotIrreducible(f"stationary space has dimension {basis.shape[1]}")
    v = basis[:, 0]
    v = v / v.sum()
    return np.abs(v)


def validate_chain(
    kernel,
    pi=None,
    states: Optional[Sequence[str]] = None,
    name: str = "",
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> MarkovChain:
    K = np.array(kernel, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] == 0:
        raise ShapeMismatch(f"kernel must be a nonempty square matrix, got shape {K.shape}")
    n = K.shape[0]
    if not np.all(np.isfinite(K)) or np.any(K < 0):
        raise NotStochastic("kernel entries must be finite and nonnegative")

    # structural zeros
    K[K < tolerances.structural_zero] = 0.0

    row_err = np.abs(K.sum(axis=1) - 1.0)
    if np.any(row_err > tolerances.row_sum):
        bad = int(np.argmax(row_err))
        raise NotStochastic(
            f"row {bad} sums to {K[bad].sum():.15g}",
            details={"row": bad, "error": float(row_err[bad])},
        )

    if not nx.is_strongly_connected(support_graph(K)):
        raise NotIrreducible("support graph of the kernel is not connected")

    if pi is None:
        p = stationary_vector(K)
    else:
        p = np.asarray(pi, dtype=float)
        if p.shape != (n,):
            raise ShapeMismatch(f"pi has shape {p.shape}, kernel has {n} states")
        if np.any(p <= 0):
            raise BadSpec("pi must be strictly positive")
        if abs(p.sum() - 1.0) > tolerances.pi_sum:
            raise BadSpec(f"pi sums to {p.sum():.15g}")

    residual = detailed_balance_residual(K, p)
    if residual > tolerances.detailed_balance:
        raise NotReversible(
            f"detailed balance violated by {residual:.3e}",
            details={"residual": residual},
        )

    labels = tuple(str(s) for s in states) if states is not None else tuple(str(i) for i in range(n))
    if len(labels) != n or len(set(labels)) != n:
        raise ShapeMismatch("state labels must be unique and match the kernel size")

    return MarkovChain(states=labels, kernel=_frozen(K), pi=_frozen(p), name=name)


# ================================================================
# BUILT-IN FAMILIES
# ================================================================

_SPEC = re.compile(r"^\s*(?P<family>[a-z]+)\s*:\s*(?P<args>.+?)\s*$")


def _parse_int(text: str, spec: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise BadSpec(f"'{spec}': expected an integer, got '{text}'") from None
    if value < 1:
        raise BadSpec(f"'{spec}': size must be at least 1")
    return value


def _parse_rate(text: str, spec: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise BadSpec(f"'{spec}': expected a rate, got '{text}'") from None
    if not 0 < value <= 1:
        raise BadSpec(f"'{spec}': rates must lie in (0, 1]")
    return value


def complete_chain(n: int) -> MarkovChain:
    return validate_chain(np.full((n, n), 1.0 / n), np.full(n, 1.0 / n), name=f"complete:{n}")


def cycle_chain(n: int) -> MarkovChain:
    K = np.zeros((n, n))
    for m in range(n):
        K[m, (m + 1) % n] += 0.5
        K[m, (m - 1) % n] += 0.5
    return validate_chain(K, np.full(n, 1.0 / n), name=f"cycle:{n}")


def hypercube_chain(n: int) -> MarkovChain:
    size = 2**n
    K = np.zeros((size, size))
    for x in range(size):
        for i in range(n):
            K[x, x ^ (1 << (n - 1 - i))] = 1.0 / n
    states = [format(x, f"0{n}b") for x in range(size)]
    return validate_chain(K, np.full(size, 1.0 / size), states=states, name=f"hypercube:{n}")


def two_point_chain(p: float, q: float) -> MarkovChain:
    K = np.array([[1.0 - p, p], [q, 1.0 - q]])
    pi = np.array([q, p]) / (p + q)
    return validate_chain(K, pi, name=f"twopoint:{p:g},{q:g}")


def torus_chain(sizes: Sequence[int]) -> MarkovChain:
    d = len(sizes)
    chain = product([cycle_chain(c) for c in sizes], [1.0 / d] * d)
    return MarkovChain(
        states=chain.states,
        kernel=chain.kernel,
        pi=chain.pi,
        name="torus:" + "x".join(str(c) for c in sizes),
    )


def builtin(spec: str) -> MarkovChain:
    """Parse complete:n, cycle:n, hypercube:n, twopoint:p,q or torus:c1xc2x..."""
    match = _SPEC.match(spec or "")
    if not match:
        raise BadSpec(f"cannot parse chain spec '{spec}'")
    family, args = match.group("family"), match.group("args")

    if family == "complete":
        return complete_chain(_parse_int(args, spec))
    if family == "cycle":
        return cycle_chain(_parse_int(args, spec))
    if family == "hypercube":
        return hypercube_chain(_parse_int(args, spec))
    if family == "twopoint":
        parts = args.split(",")
        if len(parts) != 2:
            raise BadSpec(f"'{spec}': twopoint needs two rates p,q")
        return two_point_chain(_parse_rate(parts[0], spec), _parse_rate(parts[1], spec))
    if family == "torus":
        sizes = [_parse_int(part, spec) for part in re.split(r"[x×*]", args)]
        return torus_chain(sizes)
    raise BadSpec(f"unknown chain family '{family}'")


# ================================================================
# CONSTRUCTIONS
# ================================================================

def lazy(chain: MarkovChain, lam: float) -> MarkovChain:
    if not 0 < lam < 1:
        raise BadLambda(f"laziness parameter {lam} must lie in (0, 1)")
    K = (1.0 - lam) * np.eye(chain.n) + lam * chain.kernel
    return validate_chain(K, chain.pi, states=chain.states, name=f"lazy({chain.name},{lam:g})")


def product_states(chains: Sequence[MarkovChain]) -> List[str]:
    """Lexicographic in factor order; the first factor varies slowest."""
    labels = [[s] for s in chains[0].states]
    for chain in chains[1:]:
        labels = [prefix + [s] for prefix in labels for s in chain.states]
    return [",".join(parts) for parts in labels]


def product(chains: Sequence[MarkovChain], alpha: Sequence[float]) -> MarkovChain:
    if not chains:
        raise EmptyProduct("product of an empty list of chains")
    weights = np.asarray(alpha, dtype=float)
    if weights.shape != (len(chains),):
        raise ShapeMismatch(f"{len(chains)} chains but {weights.size} weights")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise WeightSum(f"weights {weights.tolist()} must be nonnegative and sum to 1")

    sizes = [c.n for c in chains]
    total = int(np.prod(sizes))
    K = np.zeros((total, total))
    for i, (chain, a) in enumerate(zip(chains, weights)):
        factors = [np.eye(m) for m in sizes]
        factors[i] = chain.kernel
        K += a * reduce(np.kron, factors)
    pi = reduce(np.kron, [c.pi for c in chains])
    name = "product(" + ";".join(c.name for c in chains) + ")"
    return validate_chain(K, pi, states=product_states(chains), name=name)


def product_coordinates(sizes: Sequence[int]) -> np.ndarray:
    """Row z holds the factor indices of product state z."""
    return np.array(np.unravel_index(np.arange(int(np.prod(sizes))), tuple(sizes))).T


def graph_distance(chain: MarkovChain) -> np.ndarray:
    """Shortest-path distances on the undirected support graph {K(x,y) > 0}."""
    graph = support_graph(chain.kernel).to_undirected()
    dist = np.zeros((chain.n, chain.n), dtype=int)
    for source, lengths in nx.all_pairs_shortest_path_length(graph):
        for target, d in lengths.items():
            dist[source, target] = d
    return dist
