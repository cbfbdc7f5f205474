"""
Geodesic equations on the interior of the density simplex.

    d/dt rho(x) = - sum_y (psi(y) - psi(x)) theta(rho(x), rho(y)) K(x, y)
    d/dt psi(x) = - 1/2 sum_y (psi(x) - psi(y))^2 d1 theta(rho(x), rho(y)) K(x, y)

Forward integration is classical RK4 with a fixed step. shoot() solves the
two-point problem by least squares on the endpoint map psi0 -> rho(1);
it is a cross-check for solve_W, which stays the reference for distances.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from entropic_ricci.core.chain import MarkovChain
from entropic_ricci.transport.calculus import action, entropy
from entropic_ricci.transport.means import theta, theta_partials
from entropic_ricci.transport.solver import PathSolution, recover_potentials, solve_W
from entropic_ricci.utils.config import GeodesicConfig, SolverConfig
from entropic_ricci.utils.errors import BoundaryState, LeftInterior, NoConvergence, StepRejected

logger = logging.getLogger(__name__)

MASS_DRIFT = 1e-10
SHOOT_GRID = 16
# residual returned by the endpoint map when a trial trajectory leaves the interior
OFF_INTERIOR = 1e3


@dataclass(frozen=True)
class GeodesicState:
    rho: np.ndarray
    psi: np.ndarray
    time: float = 0.0

    def to_dict(self, chain: MarkovChain) -> dict:
        return {
            "time": self.time,
            "density": self.rho.tolist(),
            "potential": self.psi.tolist(),
            "action": action(chain, self.rho, self.psi),
        }


def _rates(chain: MarkovChain, rho: np.ndarray, psi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    K = chain.kernel
    G = psi[None, :] - psi[:, None]
    rx, ry = rho[:, None], rho[None, :]
    d1, _ = theta_partials(rx, ry)
    drho = -np.sum(G * theta(rx, ry) * K, axis=1)
    dpsi = -0.5 * np.sum(G * G * d1 * K, axis=1)
    return drho, dpsi


def geodesic_rhs(
    chain: MarkovChain,
    state: GeodesicState,
    floor: float = GeodesicConfig().floor,
) -> Tuple[np.ndarray, np.ndarray]:
    rho = np.asarray(state.rho, dtype=float)
    if np.any(rho <= floor):
        raise BoundaryState(f"density {rho.min():.3e} at or below the interior floor {floor:g}")
    return _rates(chain, rho, chain.check_potential(state.psi))


def _rk4_step(chain: MarkovChain, rho: np.ndarray, psi: np.ndarray, h: float, floor: float):
    def f(r, p):
        if np.any(r <= floor):
            raise LeftInterior(f"trajectory reached density {r.min():.3e}")
        return _rates(chain, r, p)

    k1r, k1p = f(rho, psi)
    k2r, k2p = f(rho + 0.5 * h * k1r, psi + 0.5 * h * k1p)
    k3r, k3p = f(rho + 0.5 * h * k2r, psi + 0.5 * h * k2p)
    k4r, k4p = f(rho + h * k3r, psi + h * k3p)
    return (
        rho + h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r),
        psi + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )


def integrate(
    chain: MarkovChain,
    initial: GeodesicState,
    T: float,
    steps: Optional[int] = None,
    config: Optional[GeodesicConfig] = None,
) -> List[GeodesicState]:
    """RK4 trajectory of the geodesic system on [t0, t0 + T], steps + 1 states."""
    config = config or GeodesicConfig()
    if steps is None:
        steps = max(1, math.ceil(config.steps_per_unit * abs(T)))
    rho = np.array(initial.rho, dtype=float)
    psi = np.array(initial.psi, dtype=float)
    if np.any(rho <= config.floor):
        raise LeftInterior("initial density is not in the interior")
    mass0 = chain.mass(rho)
    h = T / steps

    trajectory = [GeodesicState(rho.copy(), psi.copy(), initial.time)]
    for k in range(1, steps + 1):
        rho, psi = _rk4_step(chain, rho, psi, h, config.floor)
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(psi))):
            raise StepRejected(f"non-finite state at step {k}")
        drift = abs(chain.mass(rho) - mass0)
        if drift > MASS_DRIFT:
            raise StepRejected(f"mass drift {drift:.3e} at step {k}", details={"step": k})
        if np.any(rho <= config.floor):
            raise LeftInterior(f"density {rho.min():.3e} at step {k}", details={"step": k})
        trajectory.append(GeodesicState(rho.copy(), psi.copy(), initial.time + k * h))
    return trajectory


def reverse(state: GeodesicState) -> GeodesicState:
    """Same point, opposite tangent: integrating it runs the geodesic backwards."""
    return GeodesicState(state.rho, -state.psi, state.time)


def entropy_hessian(chain: MarkovChain, rho, psi, h: float = 1e-3, steps: int = 8) -> float:
    """Central second difference of t -> H(rho_t) at t = 0 along the geodesic."""
    start = GeodesicState(np.asarray(rho, dtype=float), np.asarray(psi, dtype=float))
    forward = integrate(chain, start, h, steps)[-1]
    backward = integrate(chain, reverse(start), h, steps)[-1]
    return (entropy(chain, forward.rho) - 2.0 * entropy(chain, start.rho) + entropy(chain, backward.rho)) / h**2


@dataclass
class ShotGeodesic:
    trajectory: List[GeodesicState]
    psi0: np.ndarray
    endpoint_error: float
    evaluations: int
    speed2: float = 0.0

    @property
    def length(self) -> float:
        return math.sqrt(max(self.speed2, 0.0))


def _initial_guess(chain: MarkovChain, rho0, rho1, solver_config: SolverConfig) -> Tuple[np.ndarray, PathSolution]:
    solution = solve_W(chain, rho0, rho1, solver_config)
    potentials, _ = recover_potentials(chain, solution)
    return potentials[0], solution


def shoot(
    chain: MarkovChain,
    rho0,
    rho1,
    config: Optional[GeodesicConfig] = None,
    solver_config: Optional[SolverConfig] = None,
) -> ShotGeodesic:
    """Geodesic from rho0 to rho1 on [0, 1] with psi0 found by least squares.

    The last coordinate of psi0 is pinned to 0. Works for interior endpoints
    close enough that the path stays away from the boundary; otherwise
    NoConvergence carries the convex solver's path as a fallback.
    """
    config = config or GeodesicConfig()
    solver_config = solver_config or SolverConfig(grid=SHOOT_GRID, refine=False)
    rho0 = chain.check_density(rho0, interior=True)
    rho1 = chain.check_density(rho1, interior=True)
    steps = config.steps_per_unit

    if np.max(np.abs(rho0 - rho1)) <= 1e-14:
        start = GeodesicState(rho0, np.zeros(chain.n))
        return ShotGeodesic([start, GeodesicState(rho0, np.zeros(chain.n), 1.0)], np.zeros(chain.n), 0.0, 0)

    guess, solution = _initial_guess(chain, rho0, rho1, solver_config)
    guess = guess - guess[-1]
    evaluations = 0

    def lift(z: np.ndarray) -> np.ndarray:
        return np.append(z, 0.0)

    def endpoint(z: np.ndarray) -> np.ndarray:
        nonlocal evaluations
        evaluations += 1
        try:
            final = integrate(chain, GeodesicState(rho0, lift(z)), 1.0, steps, config)[-1]
        except (LeftInterior, StepRejected):
            return np.full(chain.n, OFF_INTERIOR)
        return final.rho - rho1

    res = optimize.least_squares(endpoint, guess[:-1], method="trf", x_scale="jac",
                                 xtol=1e-14, ftol=1e-14, gtol=1e-14,
                                 max_nfev=config.shoot_max_nfev)
    psi0 = lift(res.x)
    error = float(np.max(np.abs(res.fun)))
    if not np.isfinite(error) or error > config.shoot_tol:
        raise NoConvergence(
            f"shooting stopped with endpoint error {error:.3e}",
            details={"endpoint_error": error, "fallback": solution.to_dict()},
        )
    trajectory = integrate(chain, GeodesicState(rho0, psi0), 1.0, steps, config)
    speed2 = action(chain, rho0, psi0)
    logger.info("shot geodesic: length %.8f, endpoint error %.2e, %d evaluations",
                math.sqrt(speed2), error, evaluations)
    return ShotGeodesic(trajectory, psi0, error, evaluations, speed2)


def trajectory_rows(chain: MarkovChain, trajectory: Sequence[GeodesicState]) -> List[dict]:
    """Rows (step, time, state, density, potential, action) in the path CSV schema."""
    rows = []
    for k, st in enumerate(trajectory):
        a = action(chain, st.rho, st.psi)
        for i, state in enumerate(chain.states):
            rows.append({
                "step": k,
                "time": float(st.time),
                "state": state,
                "density": float(st.rho[i]),
                "potential": float(st.psi[i]),
                "action": float(a),
            })
    return rows


def action_drift(chain: MarkovChain, trajectory: Sequence[GeodesicState]) -> float:
    """max |A(rho_t, psi_t) - A(rho_0, psi_0)| relative to A(rho_0, psi_0)."""
    values = np.array([action(chain, s.rho, s.psi) for s in trajectory])
    if values[0] == 0:
        return float(np.max(np.abs(values)))
    return float(np.max(np.abs(values - values[0])) / values[0])


def convexity_margins(chain: MarkovChain, densities: np.ndarray, times: np.ndarray, kappa: float, w: float) -> np.ndarray:
    """(1-t)H0 + tH1 - kappa/2 t(1-t) W^2 - H(rho_t) at every node of a path."""
    H = np.array([entropy(chain, r) for r in densities])
    t = np.asarray(times, dtype=float)
    return (1.0 - t) * H[0] + t * H[-1] - 0.5 * kappa * t * (1.0 - t) * w * w - H
