"""
Entropic Ricci curvature.

B(rho, psi) is the Hessian of the entropy in the transport geometry and
Ric(K) >= kappa is equivalent to B >= kappa A on the interior. This module
evaluates A and B (kernel form and mapping form), minimises B/A by
multi-start L-BFGS-B, runs a batched random falsification pass and
produces certified lower bounds from the commutation criterion, the
two-point formula, tensorisation and laziness.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import optimize

from entropic_ricci.analysis.sampling import batches, child_generators, gauge, gaussian_potentials, mixed_densities
from entropic_ricci.core.chain import MarkovChain
from entropic_ricci.core.mapping import MappingRepresentation, transposition_representation
from entropic_ricci.transport.means import theta, theta_hessian, theta_partials
from entropic_ricci.utils.config import CurvatureConfig, worker_count
from entropic_ricci.utils.errors import BadLambda, BadRate, BoundaryDensity, OptFail, WeightSum

logger = logging.getLogger(__name__)

FORM_AGREEMENT = 1e-10
SAMPLE_SLACK = 1e-8


# ================================================================
# KERNEL FORM
# ================================================================

def _interior(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise BoundaryDensity("the curvature form is only defined for strictly positive densities")
    return rho


def kernel_forms(chain: MarkovChain, rho, psi) -> Tuple[np.ndarray, np.ndarray]:
    """(B, A) from the double sums over x, y; leading batch axes broadcast."""
    rho = _interior(rho)
    psi = np.asarray(psi, dtype=float)
    W = chain.weights
    L = chain.laplacian
    G = psi[..., None, :] - psi[..., :, None]
    rx, ry = rho[..., :, None], rho[..., None, :]
    Th = theta(rx, ry)
    T1, T2 = theta_partials(rx, ry)
    L_rho = rho @ L.T
    L_psi = psi @ L.T
    H = L_psi[..., None, :] - L_psi[..., :, None]
    G2W = G * G * W

    density_term = 0.25 * np.sum((T1 * L_rho[..., :, None] + T2 * L_rho[..., None, :]) * G2W, axis=(-2, -1))
    potential_term = 0.5 * np.sum(Th * G * H * W, axis=(-2, -1))
    A = 0.5 * np.sum(G2W * Th, axis=(-2, -1))
    return density_term - potential_term, A


def b_form(chain: MarkovChain, rho, psi) -> float:
    return float(kernel_forms(chain, rho, psi)[0])


def a_form(chain: MarkovChain, rho, psi) -> float:
    return float(kernel_forms(chain, rho, psi)[1])


def b_form_batch(chain: MarkovChain, rhos: np.ndarray, psis: np.ndarray) -> np.ndarray:
    return kernel_forms(chain, rhos, psis)[0]


def form_gradients(chain: MarkovChain, rho, psi) -> Tuple[float, float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """B, A and their gradients (dB/drho, dB/dpsi, dA/drho, dA/dpsi)."""
    rho = _interior(rho)
    psi = np.asarray(psi, dtype=float)
    W = chain.weights
    L = chain.laplacian
    G = psi[None, :] - psi[:, None]
    rx, ry = rho[:, None], rho[None, :]
    Th = theta(rx, ry)
    T1, _ = theta_partials(rx, ry)
    T11, T12, _ = theta_hessian(rx, ry)
    L_rho = L @ rho
    L_psi = L @ psi
    H = L_psi[None, :] - L_psi[:, None]
    G2W = G * G * W

    A = 0.5 * np.sum(G2W * Th)
    dA_psi = -2.0 * np.sum(G * Th * W, axis=1)
    dA_rho = np.sum(G2W * T1, axis=1)

    potential = 0.5 * np.sum(Th * G * H * W)
    dP_psi = -np.sum(Th * W * H, axis=1) - L.T @ np.sum(Th * W * G, axis=1)
    dP_rho = np.sum(G * H * W * T1, axis=1)

    r = np.sum(T1 * G2W, axis=1)
    density = 0.5 * float(L_rho @ r)
    Q = T1 * L_rho[:, None] * W * G
    dD_psi = Q.sum(axis=0) - Q.sum(axis=1)
    dD_rho = 0.5 * (L.T @ r) + 0.5 * (L_rho * np.sum(G2W * T11, axis=1)
                                      + np.sum(L_rho[:, None] * G2W * T12, axis=0))

    B = density - potential
    return float(B), float(A), dD_rho - dP_rho, dD_psi - dP_psi, dA_rho, dA_psi


# ================================================================
# MAPPING FORM
# ================================================================

def representation_forms(rep: MappingRepresentation, rho, psi) -> Tuple[float, float]:
    """(B, A) as triple sums over x and pairs of moves (delta, eta)."""
    rho = _interior(rho)
    psi = np.asarray(psi, dtype=float)
    pi = rep.chain.pi
    c = rep.rates
    after = rep.maps.T

    grad_psi = rep.gradient(psi)
    grad_rho = rep.gradient(rho)
    moved = rho[after]
    Th = theta(rho[:, None], moved)
    T1, T2 = theta_partials(rho[:, None], moved)

    psi_next = grad_psi[after]
    rho_next = grad_rho[after]
    c_next = c[after]

    A = 0.5 * np.einsum("xd,xd,xd,x->", grad_psi**2, Th, c, pi)
    bracket = psi_next * c_next - (grad_psi * c)[:, None, :]
    potential = 0.5 * np.einsum("xd,xde,xd,xd,x->", grad_psi, bracket, Th, c, pi)
    rho_part = (T1[:, :, None] * (grad_rho * c)[:, None, :]) + T2[:, :, None] * rho_next * c_next
    density = 0.25 * np.einsum("xd,xde,xd,x->", grad_psi**2, rho_part, c, pi)
    return float(density - potential), float(A)


def representation_forms_matrix(rep: MappingRepresentation, rho, psi) -> Tuple[float, float]:
    """Same as representation_forms with the inner move sum collapsed to the generator."""
    rho = _interior(rho)
    psi = np.asarray(psi, dtype=float)
    pi = rep.chain.pi
    c = rep.rates
    after = rep.maps.T
    grad_psi = rep.gradient(psi)
    L_psi = np.sum(grad_psi * c, axis=1)
    L_rho = np.sum(rep.gradient(rho) * c, axis=1)
    moved = rho[after]
    Th = theta(rho[:, None], moved)
    T1, T2 = theta_partials(rho[:, None], moved)
    weight = c * pi[:, None]

    A = 0.5 * np.sum(grad_psi**2 * Th * weight)
    potential = 0.5 * np.sum(grad_psi * (L_psi[after] - L_psi[:, None]) * Th * weight)
    density = 0.25 * np.sum(grad_psi**2 * (T1 * L_rho[:, None] + T2 * L_rho[after]) * weight)
    return float(density - potential), float(A)


def forms_agree(chain: MarkovChain, rho, psi, rep: Optional[MappingRepresentation] = None) -> bool:
    rep = rep or transposition_representation(chain)
    b_kernel, a_kernel = kernel_forms(chain, rho, psi)
    b_map, a_map = representation_forms(rep, rho, psi)
    scale = max(1.0, abs(float(b_kernel)), abs(float(a_kernel)))
    return abs(b_kernel - b_map) <= FORM_AGREEMENT * scale and abs(a_kernel - a_map) <= FORM_AGREEMENT * scale


# ================================================================
# CERTIFIED BOUNDS
# ================================================================

class CertifiedBound(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    provenance: str
    note: str = ""


def criterion_bound(rep: MappingRepresentation) -> Optional[CertifiedBound]:
    """Commuting moves with invariant rates give kappa = 0; involutions improve it to 2C."""
    if not (rep.commutes() and rep.rate_invariant()):
        return None
    if rep.involutive():
        C = rep.min_positive_rate()
        return CertifiedBound(value=2.0 * C, provenance="criterion", note=f"involutive moves, C = {C:g}")
    return CertifiedBound(value=0.0, provenance="criterion", note="commuting moves with invariant rates")


def two_point_kappa(p: float, q: float) -> CertifiedBound:
    """(p + q)/2 + inf over beta in (-1, 1) of theta(q(1 + beta), p(1 - beta)) / (1 - beta^2).

    The objective blows up at both ends of the interval, so a coarse grid
    brackets the minimum before bounded Brent refinement.
    """
    if not (0 < p <= 1 and 0 < q <= 1):
        raise BadRate(f"two-point rates ({p}, {q}) must lie in (0, 1]")

    def objective(beta: float) -> float:
        return float(theta(q * (1.0 + beta), p * (1.0 - beta))) / (1.0 - beta * beta)

    grid = np.linspace(-1.0, 1.0, 2001)[1:-1]
    values = theta(q * (1.0 + grid), p * (1.0 - grid)) / (1.0 - grid**2)
    i = int(np.argmin(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    best = min(float(res.fun), float(values[i]))
    return CertifiedBound(
        value=0.5 * (p + q) + best,
        provenance="two-point formula",
        note=f"beta* = {float(res.x):.6g}",
    )


def combine_bounds(parts: Sequence[Tuple[MarkovChain, float, float]]) -> CertifiedBound:
    """Tensorisation: Ric(product) >= min_i alpha_i kappa_i."""
    weights = np.array([a for _, _, a in parts], dtype=float)
    if not parts or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise WeightSum("product weights must be nonnegative and sum to 1")
    value = min(a * k for _, k, a in parts)
    names = ", ".join(chain.name for chain, _, _ in parts)
    return CertifiedBound(value=float(value), provenance="tensorisation", note=f"factors: {names}")


def lazy_bound(kappa: float, lam: float) -> CertifiedBound:
    if not 0 < lam < 1:
        raise BadLambda(f"laziness parameter {lam} must lie in (0, 1)")
    return CertifiedBound(value=lam * kappa, provenance="laziness", note=f"lambda = {lam:g}")


def certified_bound(chain: MarkovChain, rep: Optional[MappingRepresentation] = None) -> Optional[CertifiedBound]:
    """Best certificate available without optimisation."""
    found: List[CertifiedBound] = []
    if rep is not None:
        bound = criterion_bound(rep)
        if bound is not None:
            found.append(bound)
    if chain.n == 2:
        found.append(two_point_kappa(float(chain.kernel[0, 1]), float(chain.kernel[1, 0])))
    if not found:
        return None
    return max(found, key=lambda b: b.value)


# ================================================================
# ESTIMATION
# ================================================================

@dataclass
class _Restart:
    index: int
    value: float
    rho: np.ndarray
    psi: np.ndarray
    converged: bool


class _RatioObjective:
    """B/A over rho = floor + (1 - floor) softmax_pi(u) and free psi."""

    def __init__(self, chain: MarkovChain, floor: float):
        self.chain = chain
        self.floor = floor

    def density(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        e = np.exp(u - u.max())
        s = e / np.dot(self.chain.pi, e)
        return self.floor + (1.0 - self.floor) * s, s

    def __call__(self, z: np.ndarray) -> Tuple[float, np.ndarray]:
        n = self.chain.n
        u, psi = z[:n], z[n:]
        rho, s = self.density(u)
        B, A, dB_rho, dB_psi, dA_rho, dA_psi = form_gradients(self.chain, rho, psi)
        if A <= 0 or not np.isfinite(A):
            return math.inf, np.zeros_like(z)
        R = B / A
        g_rho = (dB_rho - R * dA_rho) / A
        g_psi = (dB_psi - R * dA_psi) / A
        g_u = (1.0 - self.floor) * (g_rho * s - self.chain.pi * s * np.dot(s, g_rho))
        return R, np.concatenate([g_u, g_psi])


def _run_restart(objective: _RatioObjective, index: int, rng: np.random.Generator, max_iter: int) -> _Restart:
    chain = objective.chain
    mu = rng.dirichlet(np.ones(chain.n))
    u0 = np.log(np.maximum(mu / chain.pi, 1e-300))
    psi0 = gauge(chain, rng.standard_normal(chain.n))
    z0 = np.concatenate([u0 - u0.max(), psi0])
    try:
        res = optimize.minimize(objective, z0, jac=True, method="L-BFGS-B",
                                options={"maxiter": max_iter, "gtol": 1e-10, "ftol": 1e-14})
    except (ValueError, FloatingPointError) as exc:
        logger.debug("restart %d failed: %s", index, exc)
        return _Restart(index, math.inf, np.ones(chain.n), np.zeros(chain.n), False)
    n = chain.n
    rho, _ = objective.density(res.x[:n])
    psi = gauge(chain, res.x[n:])
    value = float(res.fun)
    grad_norm = float(np.linalg.norm(res.jac)) if res.jac is not None else math.inf
    converged = bool(np.isfinite(value) and (res.success or grad_norm <= 1e-5 * (1.0 + abs(value))))
    return _Restart(index, value, rho, psi, converged)


class SampleSummary(BaseModel):
    samples: int
    kappa: float
    min_margin: float
    min_ratio: float
    violations: int
    witness_rho: Optional[List[float]] = None
    witness_psi: Optional[List[float]] = None


def sample_margins(
    chain: MarkovChain,
    kappa: float,
    samples: int,
    seed: int,
    batch: int = 4096,
    floor: float = 1e-6,
    keep_witness: bool = False,
) -> SampleSummary:
    """min of B - kappa A over random interior (rho, psi), batched."""
    sizes = batches(samples, batch)
    gens = child_generators(seed, len(sizes))
    best_margin, best_ratio, violations = math.inf, math.inf, 0
    witness = (None, None)
    for size, rng in zip(sizes, gens):
        rhos = mixed_densities(chain, size, rng, floor=floor)
        psis = gaussian_potentials(chain, size, rng)
        B, A = kernel_forms(chain, rhos, psis)
        margin = B - kappa * A
        violations += int(np.sum(margin < -SAMPLE_SLACK))
        i = int(np.argmin(margin))
        if margin[i] < best_margin:
            best_margin = float(margin[i])
            witness = (rhos[i], psis[i])
        positive = A > 0
        if np.any(positive):
            best_ratio = min(best_ratio, float(np.min(B[positive] / A[positive])))
    return SampleSummary(
        samples=samples,
        kappa=kappa,
        min_margin=best_margin if samples else 0.0,
        min_ratio=best_ratio,
        violations=violations,
        witness_rho=witness[0].tolist() if keep_witness and witness[0] is not None else None,
        witness_psi=witness[1].tolist() if keep_witness and witness[1] is not None else None,
    )


class CurvatureReport(BaseModel):
    chain: str
    kappa_certified: Optional[float] = None
    certified_provenance: Optional[str] = None
    certified_note: str = ""
    kappa_estimated: Optional[float] = None
    estimate_provenance: str = "estimated"
    restarts: int = 0
    converged_restarts: int = 0
    spread: Optional[float] = None
    on_floor: Optional[bool] = None
    argmin_rho: Optional[List[float]] = None
    argmin_psi: Optional[List[float]] = None
    sampling: Optional[SampleSummary] = None
    certified_sampling: Optional[SampleSummary] = None
    consistent: Optional[bool] = None


def ricci_estimate(
    chain: MarkovChain,
    config: Optional[CurvatureConfig] = None,
    certified: Optional[CertifiedBound] = None,
    workers: Optional[int] = None,
) -> CurvatureReport:
    """Non-certified estimate of inf B/A plus a random falsification pass.

    Restarts run on a thread pool and are merged by (value, restart index),
    so the report does not depend on the worker count.
    """
    config = config or CurvatureConfig()
    objective = _RatioObjective(chain, config.floor)
    gens = child_generators(config.seed, config.restarts)
    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        runs = list(pool.map(lambda args: _run_restart(objective, args[0], args[1], config.max_iter),
                             enumerate(gens)))
    runs.sort(key=lambda r: (r.value, r.index))
    good = [r for r in runs if r.converged]
    if not good:
        raise OptFail(f"none of {config.restarts} restarts converged", details={"chain": chain.name})
    best = good[0]
    values = [r.value for r in good]
    logger.info("kappa_estimated=%.8f from %d/%d restarts", best.value, len(good), len(runs))

    if config.debug and not forms_agree(chain, best.rho, best.psi):
        logger.warning("kernel and mapping forms of B disagree at the argmin")

    B, A = kernel_forms(chain, best.rho, best.psi)
    scale = 1.0 / math.sqrt(float(A)) if A > 0 else 1.0
    report = CurvatureReport(
        chain=chain.name,
        kappa_estimated=best.value,
        restarts=len(runs),
        converged_restarts=len(good),
        spread=float(max(values) - min(values)),
        on_floor=bool(np.min(best.rho) <= 10.0 * config.floor),
        argmin_rho=best.rho.tolist() if config.debug else None,
        argmin_psi=(best.psi * scale).tolist() if config.debug else None,
    )
    if config.samples:
        report.sampling = sample_margins(chain, best.value, config.samples, config.seed,
                                         config.batch, config.floor, keep_witness=config.debug)
    if certified is not None:
        report.kappa_certified = certified.value
        report.certified_provenance = certified.provenance
        report.certified_note = certified.note
        report.consistent = certified.value <= best.value + 1e-6
        if config.samples:
            report.certified_sampling = sample_margins(chain, certified.value, config.samples,
                                                       config.seed + 1, config.batch, config.floor,
                                                       keep_witness=config.debug)
    return report


def curvature_report(
    chain: MarkovChain,
    rep: Optional[MappingRepresentation] = None,
    config: Optional[CurvatureConfig] = None,
    estimate: bool = True,
) -> CurvatureReport:
    """Certificate first, then (optionally) the numerical estimate."""
    certified = certified_bound(chain, rep)
    if not estimate:
        report = CurvatureReport(chain=chain.name)
        if certified is not None:
            report.kappa_certified = certified.value
            report.certified_provenance = certified.provenance
            report.certified_note = certified.note
        return report
    return ricci_estimate(chain, config, certified)
