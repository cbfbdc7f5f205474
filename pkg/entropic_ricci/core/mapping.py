"""
Mapping representations (G, c) of a Markov kernel.

Moves are stored as an integer table maps[j, x] = delta_j(x) and rates as
rates[x, j] = c(x, delta_j), so nabla_delta psi for every move is a single
fancy-indexing expression: psi[maps] - psi[None, :].
"""

import logging
import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from entropic_ricci.core.chain import MarkovChain, cycle_chain, product, product_coordinates
from entropic_ricci.utils.config import DEFAULT_SEED, Tolerances
from entropic_ricci.utils.errors import (
    BadSpec,
    EmptyProduct,
    GeneratorMismatch,
    NoInverse,
    ReversibilityFail,
    ShapeMismatch,
    WeightSum,
)

logger = logging.getLogger(__name__)

REVERSIBILITY_TRIALS = 8


@dataclass(frozen=True)
class Move:
    """User-supplied move: targets[x] = delta(x), rates[x] = c(x, delta)."""

    label: str
    targets: Sequence[int]
    rates: Sequence[float]
    inverse: Optional[str] = None


@dataclass(frozen=True, eq=False)
class MappingRepresentation:
    chain: MarkovChain
    labels: Tuple[str, ...]
    maps: np.ndarray
    rates: np.ndarray
    inverse: np.ndarray

    @property
    def size(self) -> int:
        return len(self.labels)

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """nabla_delta f(x), shape (n, moves)."""
        f = np.asarray(f, dtype=float)
        return (f[self.maps] - f[None, :]).T

    def generator_matrix(self) -> np.ndarray:
        n = self.chain.n
        M = np.zeros((n, n))
        xs = np.arange(n)
        for j in range(self.size):
            np.add.at(M, (xs, self.maps[j]), self.rates[:, j])
            M[xs, xs] -= self.rates[:, j]
        return M

    # ------------------------------------------------------------
    # criterion conditions
    # ------------------------------------------------------------
    def commutes(self) -> bool:
        for j in range(self.size):
            for k in range(j + 1, self.size):
                if not np.array_equal(self.maps[j][self.maps[k]], self.maps[k][self.maps[j]]):
                    return False
        return True

    def rate_invariant(self, tol: float = 1e-12) -> bool:
        for j in range(self.size):
            if np.max(np.abs(self.rates[self.maps[j], :] - self.rates)) > tol:
                return False
        return True

    def involutive(self) -> bool:
        xs = np.arange(self.chain.n)
        return all(np.array_equal(self.maps[j][self.maps[j]], xs) for j in range(self.size))

    def min_positive_rate(self) -> float:
        positive = self.rates[self.rates > 0]
        return float(positive.min()) if positive.size else 0.0


# ================================================================
# VALIDATION
# ================================================================

def check_representation(
    rep: MappingRepresentation,
    seed: int = DEFAULT_SEED,
    tolerances: Tolerances = Tolerances(),
) -> MappingRepresentation:
    chain = rep.chain
    n, m = chain.n, rep.size
    if rep.maps.shape != (m, n) or rep.rates.shape != (n, m) or rep.inverse.shape != (m,):
        raise ShapeMismatch("move table, rate table and inverse index disagree in shape")
    if np.any(rep.maps < 0) or np.any(rep.maps >= n):
        raise BadSpec("move maps a state outside the chain")
    if np.any(rep.rates < 0):
        raise BadSpec("rates must be nonnegative")

    # generator identity, tested on the standard basis
    residual = float(np.max(np.abs(rep.generator_matrix() - chain.laplacian))) if n else 0.0
    if residual > tolerances.generator:
        raise GeneratorMismatch(
            f"moves reproduce K - I only up to {residual:.3e}",
            details={"residual": residual},
        )

    xs = np.arange(n)
    for j in range(m):
        inv = rep.inverse[j]
        if not 0 <= inv < m:
            raise NoInverse(f"move '{rep.labels[j]}' has no inverse")
        active = rep.rates[:, j] > 0
        back = rep.maps[inv][rep.maps[j]]
        if np.any(back[active] != xs[active]):
            raise NoInverse(f"'{rep.labels[inv]}' does not undo '{rep.labels[j]}'")

    rng = np.random.default_rng(seed)
    weight = rep.rates * chain.pi[:, None]
    for _ in range(REVERSIBILITY_TRIALS):
        F = rng.standard_normal((n, m))
        lhs = float(np.sum(F * weight))
        rhs = float(np.sum(F[rep.maps.T, rep.inverse[None, :]] * weight))
        if abs(lhs - rhs) > 1e-10 * (1.0 + abs(lhs)):
            raise ReversibilityFail(
                f"summation identity off by {abs(lhs - rhs):.3e}",
                details={"lhs": lhs, "rhs": rhs},
            )
    return rep


def _assemble(chain: MarkovChain, labels, maps, rates, inverse) -> MappingRepresentation:
    return MappingRepresentation(
        chain=chain,
        labels=tuple(labels),
        maps=np.asarray(maps, dtype=int).reshape(len(labels), chain.n),
        rates=np.asarray(rates, dtype=float).reshape(chain.n, len(labels)),
        inverse=np.asarray(inverse, dtype=int).reshape(len(labels)),
    )


# ================================================================
# CONSTRUCTIONS
# ================================================================

def transposition_representation(chain: MarkovChain) -> MappingRepresentation:
    """t_{x,y} swaps x and y; c(x, t_{x,y}) = K(x,y) and zero away from {x, y}."""
    n = chain.n
    xs, ys = chain.edges()
    labels, maps = [], []
    rates = np.zeros((n, len(xs)))
    for j, (x, y) in enumerate(zip(xs, ys)):
        t = np.arange(n)
        t[x], t[y] = y, x
        maps.append(t)
        rates[x, j] = chain.kernel[x, y]
        rates[y, j] = chain.kernel[y, x]
        labels.append(f"t({chain.states[x]},{chain.states[y]})")
    return _assemble(chain, labels, np.array(maps, dtype=int), rates, np.arange(len(xs)))


def bit_flip_representation(chain: MarkovChain, n_bits: int) -> MappingRepresentation:
    size = 2**n_bits
    if chain.n != size:
        raise ShapeMismatch(f"hypercube:{n_bits} has {size} states, chain has {chain.n}")
    xs = np.arange(size)
    maps = np.array([xs ^ (1 << (n_bits - 1 - i)) for i in range(n_bits)])
    rates = np.full((size, n_bits), 1.0 / n_bits)
    return _assemble(chain, [f"flip{i}" for i in range(n_bits)], maps, rates, np.arange(n_bits))


def rotation_representation(chain: MarkovChain) -> MappingRepresentation:
    n = chain.n
    xs = np.arange(n)
    maps = np.array([(xs + 1) % n, (xs - 1) % n])
    rates = np.full((n, 2), 0.5)
    return _assemble(chain, ["+", "-"], maps, rates, [1, 0])


def product_representation(
    chain: MarkovChain,
    reps: Sequence[MappingRepresentation],
    alpha: Sequence[float],
) -> MappingRepresentation:
    """Lift factor moves to the product chain with c(x, delta_i) = alpha_i c_i(x_i, delta)."""
    if not reps:
        raise EmptyProduct("product of an empty list of representations")
    weights = np.asarray(alpha, dtype=float)
    if weights.shape != (len(reps),) or abs(weights.sum() - 1.0) > 1e-12 or np.any(weights < 0):
        raise WeightSum("product weights must be nonnegative and sum to 1")
    sizes = [r.chain.n for r in reps]
    if int(np.prod(sizes)) != chain.n:
        raise ShapeMismatch("factor state counts do not multiply to the product size")

    coords = product_coordinates(sizes)
    labels: List[str] = []
    maps, columns, inverse = [], [], []
    offset = 0
    for i, (rep, a) in enumerate(zip(reps, weights)):
        for j in range(rep.size):
            moved = coords.copy()
            moved[:, i] = rep.maps[j][coords[:, i]]
            maps.append(np.ravel_multi_index(tuple(moved.T), tuple(sizes)))
            columns.append(a * rep.rates[coords[:, i], j])
            inverse.append(offset + rep.inverse[j])
            labels.append(f"{i}:{rep.labels[j]}")
        offset += rep.size
    rates = np.array(columns).T if columns else np.zeros((chain.n, 0))
    maps_arr = np.array(maps, dtype=int) if maps else np.zeros((0, chain.n), dtype=int)
    return _assemble(chain, labels, maps_arr, rates, inverse)


def custom_representation(chain: MarkovChain, moves: Sequence[Move]) -> MappingRepresentation:
    labels = [mv.label for mv in moves]
    if len(set(labels)) != len(labels):
        raise BadSpec("move labels must be unique")
    inverse = []
    for mv in moves:
        if mv.inverse is None or mv.inverse not in labels:
            raise NoInverse(f"move '{mv.label}' does not name an inverse in the move set")
        inverse.append(labels.index(mv.inverse))
    for mv in moves:
        if len(mv.targets) != chain.n or len(mv.rates) != chain.n:
            raise ShapeMismatch(f"move '{mv.label}' must list one target and one rate per state")
    maps = np.array([list(mv.targets) for mv in moves], dtype=int).reshape(len(moves), chain.n)
    rates = np.array([list(mv.rates) for mv in moves], dtype=float).reshape(len(moves), chain.n).T
    return _assemble(chain, labels, maps, rates, inverse)


def mapping_representation(
    chain: MarkovChain,
    moves: Optional[Sequence[Move]] = None,
    seed: int = DEFAULT_SEED,
) -> MappingRepresentation:
    """Validated representation; transpositions unless custom moves are given."""
    rep = transposition_representation(chain) if moves is None else custom_representation(chain, moves)
    return check_representation(rep, seed=seed)


def builtin_representation(spec: str, chain: MarkovChain) -> MappingRepresentation:
    """Natural moves for a built-in family: bit flips, rotations, or their products."""
    family, _, args = spec.strip().partition(":")
    if family == "hypercube":
        rep = bit_flip_representation(chain, int(args))
    elif family == "cycle":
        rep = rotation_representation(chain)
    elif family == "torus":
        sizes = [int(part) for part in re.split(r"[x×*]", args)]
        cycles = [cycle_chain(c) for c in sizes]
        reps = [rotation_representation(c) for c in cycles]
        rep = product_representation(chain, reps, [1.0 / len(sizes)] * len(sizes))
    else:
        rep = transposition_representation(chain)
    logger.debug("representation for %s: %d moves", spec, rep.size)
    return check_representation(rep)


def product_with_representation(
    factors: Sequence[Tuple[MarkovChain, MappingRepresentation]],
    alpha: Sequence[float],
) -> Tuple[MarkovChain, MappingRepresentation]:
    chain = product([c for c, _ in factors], alpha)
    rep = product_representation(chain, [r for _, r in factors], alpha)
    return chain, check_representation(rep)
