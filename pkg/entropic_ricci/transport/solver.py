"""
Transport distance solver.

The time-discretised problem on N uniform intervals (h = 1/N):

    minimise   sum_k h A'(rho_bar_k, V_k)
    subject to rho_k - rho_{k-1} + h div V_k = 0,   k = 1..N

with rho_0, rho_N the query densities and rho_bar_k the interval midpoint.
Momenta are antisymmetric and live on the unordered support edges, so the
variable per interval is one flux v_e per edge e = (x < y) and
div V = D v with D[x, e] = K(x, y), D[y, e] = -K(y, x).

Two methods solve the same program:

- "newton" eliminates the densities (rho_k is affine in the fluxes), works
  in the null space of the single remaining constraint and follows a
  log-barrier on the interior densities down to 1e-12.
- "pdhg" is a Chambolle-Pock primal-dual iteration with the per-edge
  prox of the cost and an exact projection onto the continuity constraints.

W_est = sqrt(optimal discrete action) is not a bound on W. On the
benchmarks it increases towards W as N grows, so it sits below W, and
refinement_gap = |W_est(N) - W_est(N/2)| is the only error estimate.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate, linalg

from entropic_ricci.core.chain import Density, MarkovChain
from entropic_ricci.transport.means import alpha, alpha_derivatives, theta, theta_hessian, theta_partials
from entropic_ricci.utils.config import SolverConfig
from entropic_ricci.utils.errors import BadRate, Infeasible, QuadratureFail, SolverDiverged

logger = logging.getLogger(__name__)

SAME_DENSITY_TOL = 1e-14
PROX_FLOOR = 1e-14
# relative singular-value cutoff; D has rank n - 1 on a connected chain
RANK_CUTOFF = 1e-10


@dataclass
class PathSolution:
    """Discrete path (rho_k, V_k) with its action and convergence record."""

    times: np.ndarray
    densities: np.ndarray
    momenta: np.ndarray
    interval_actions: np.ndarray
    action: float
    converged: bool
    method: str
    iterations: int = 0
    residuals: Dict[str, float] = field(default_factory=dict)
    coarse_w: Optional[float] = None

    @property
    def grid(self) -> int:
        return len(self.times) - 1

    @property
    def w_est(self) -> float:
        return math.sqrt(max(self.action, 0.0))

    @property
    def refinement_gap(self) -> Optional[float]:
        """|W_est(N) - W_est(N/2)|, the reported discretisation slack."""
        if self.coarse_w is None:
            return None
        return abs(self.w_est - self.coarse_w)

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.densities[1:] + self.densities[:-1])

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "method": self.method,
            "converged": self.converged,
            "iterations": self.iterations,
            "action": self.action,
            "w_est": self.w_est,
            "coarse_w": self.coarse_w,
            "refinement_gap": self.refinement_gap,
            "residuals": dict(self.residuals),
            "times": self.times.tolist(),
            "densities": self.densities.tolist(),
            "momenta": self.momenta.tolist(),
            "interval_actions": self.interval_actions.tolist(),
        }


# ================================================================
# DISCRETISATION
# ================================================================

class _Discretisation:
    """Operators of the N-interval program, with fluxes flattened as v[k * E + e]."""

    def __init__(self, chain: MarkovChain, rho0: Density, rho1: Density, grid: int):
        self.chain = chain
        self.rho0 = rho0
        self.rho1 = rho1
        self.N = grid
        self.h = 1.0 / grid
        self.a, self.b = chain.edges()
        self.E = len(self.a)
        n = chain.n

        cols = np.arange(self.E)
        self.D = np.zeros((n, self.E))
        self.D[self.a, cols] = chain.kernel[self.a, self.b]
        self.D[self.b, cols] = -chain.kernel[self.b, self.a]

        self.edge_weight = chain.weights[self.a, self.b]
        self.term_weight = self.h * np.tile(self.edge_weight, grid)

        cum = np.tril(np.ones((grid, grid)))
        mid = cum - 0.5 * np.eye(grid)
        self.J_rho = -self.h * np.kron(cum[:-1], self.D)
        J_mid = -self.h * np.kron(mid, self.D)
        steps = np.arange(grid)[:, None] * n
        self.J_s = J_mid[(steps + self.a[None, :]).ravel()]
        self.J_t = J_mid[(steps + self.b[None, :]).ravel()]
        self.s0 = np.tile(rho0[self.a], grid)
        self.t0 = np.tile(rho0[self.b], grid)

        self.C = np.kron(np.ones((1, grid)), self.D)
        self.target = (rho0 - rho1) / self.h
        self.barrier_weight = self.h * np.tile(chain.pi, grid - 1)

    # ------------------------------------------------------------
    def interior(self, v: np.ndarray) -> np.ndarray:
        return np.tile(self.rho0, self.N - 1) + self.J_rho @ v

    def edge_values(self, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.s0 + self.J_s @ v, self.t0 + self.J_t @ v

    def densities(self, v: np.ndarray) -> np.ndarray:
        inner = self.interior(v).reshape(self.N - 1, self.chain.n)
        return np.vstack([self.rho0, inner, self.rho1])

    def momenta(self, v: np.ndarray) -> np.ndarray:
        n = self.chain.n
        V = np.zeros((self.N, n, n))
        flux = v.reshape(self.N, self.E)
        V[:, self.a, self.b] = flux
        V[:, self.b, self.a] = -flux
        return V

    def initial_path(self) -> Tuple[np.ndarray, np.ndarray]:
        """Positive interpolation rho_k and fluxes reproducing its increments."""
        t = np.linspace(0.0, 1.0, self.N + 1)[:, None]
        bump = 2.0 * t * (1.0 - t)
        rho = (1.0 - bump) * ((1.0 - t) * self.rho0 + t * self.rho1) + bump
        rho[0], rho[-1] = self.rho0, self.rho1
        increments = (rho[1:] - rho[:-1]) / self.h
        v = np.zeros((self.N, self.E))
        for k in range(self.N):
            v[k] = self._flux_for(-increments[k])
        # roundoff in the endpoint gap is spread evenly over the intervals;
        # only its mass-free part lies in the range of D
        gap = self.target - v.sum(axis=0) @ self.D.T
        v += self._flux_for(gap) / self.N
        v = v.ravel()
        if np.max(np.abs(self.C @ v - self.target)) > 1e-8 * (1.0 + np.max(np.abs(self.target))):
            raise Infeasible("continuity constraints admit no feasible path")

        s, t = self.edge_values(v)
        lowest = min(float(np.min(self.interior(v))) if self.N > 1 else math.inf,
                     float(np.min(s)), float(np.min(t)))
        if not lowest > 0:
            raise SolverDiverged("start path leaves the interior", details={"min_density": lowest})
        return rho, v

    def _flux_for(self, change: np.ndarray) -> np.ndarray:
        """Least-norm flux v with D v = change, after removing the pi-mass of change."""
        change = change - float(np.dot(self.chain.pi, change))
        return linalg.lstsq(self.D, change, cond=RANK_CUTOFF)[0]

    def interval_actions(self, v: np.ndarray) -> np.ndarray:
        s, t = self.edge_values(v)
        cost = alpha(v, np.maximum(s, 0.0), np.maximum(t, 0.0)) * self.term_weight
        return cost.reshape(self.N, self.E).sum(axis=1)

    def residuals(self, densities: np.ndarray, v: np.ndarray) -> Dict[str, float]:
        flux = v.reshape(self.N, self.E)
        step = densities[1:] - densities[:-1] + self.h * flux @ self.D.T
        return {
            "continuity": float(np.max(np.abs(step))) if step.size else 0.0,
            "min_density": float(np.min(densities[1:-1])) if self.N > 1 else 0.0,
        }


# ================================================================
# BARRIER NEWTON
# ================================================================

class _BarrierNewton:
    def __init__(self, problem: _Discretisation, config: SolverConfig):
        self.p = problem
        self.config = config
        self.Z = linalg.null_space(problem.C)
        self.iterations = 0

    def _value(self, v: np.ndarray, mu: float) -> float:
        p = self.p
        rho = p.interior(v)
        if np.any(rho <= 0):
            return math.inf
        s, t = p.edge_values(v)
        if np.any(s <= 0) or np.any(t <= 0):
            return math.inf
        cost = float(np.sum(p.term_weight * v * v / theta(s, t)))
        return cost - mu * float(np.sum(p.barrier_weight * np.log(rho)))

    def _derivatives(self, v: np.ndarray, mu: float) -> Tuple[np.ndarray, np.ndarray]:
        p = self.p
        s, t = p.edge_values(v)
        (gx, gs, gt), (hxx, hxs, hxt, hss, hst, htt) = alpha_derivatives(v, s, t)
        w = p.term_weight
        rho = p.interior(v)

        grad = w * gx + p.J_s.T @ (w * gs) + p.J_t.T @ (w * gt)
        grad -= mu * p.J_rho.T @ (p.barrier_weight / rho)

        cross = (w * hxs)[:, None] * p.J_s + (w * hxt)[:, None] * p.J_t
        hess = np.diag(w * hxx) + cross + cross.T
        hess += p.J_s.T @ ((w * hss)[:, None] * p.J_s)
        st = p.J_s.T @ ((w * hst)[:, None] * p.J_t)
        hess += st + st.T
        hess += p.J_t.T @ ((w * htt)[:, None] * p.J_t)
        hess += mu * p.J_rho.T @ ((p.barrier_weight / rho**2)[:, None] * p.J_rho)
        return grad, hess

    def _max_step(self, v: np.ndarray, dv: np.ndarray) -> float:
        p = self.p
        s, t = p.edge_values(v)
        candidates = [1.0]
        for base, slope in ((p.interior(v), p.J_rho @ dv), (s, p.J_s @ dv), (t, p.J_t @ dv)):
            neg = slope < 0
            if np.any(neg):
                candidates.append(0.99 * float(np.min(-base[neg] / slope[neg])))
        return min(candidates)

    def _newton_stage(self, v: np.ndarray, mu: float, decrement_tol: float) -> Tuple[np.ndarray, float]:
        decrement = math.inf
        while True:
            grad, hess = self._derivatives(v, mu)
            gz = self.Z.T @ grad
            hz = self.Z.T @ hess @ self.Z
            try:
                dy = linalg.solve(hz, -gz, assume_a="pos")
            except (linalg.LinAlgError, ValueError):
                dy = linalg.lstsq(hz, -gz)[0]
            decrement = float(-gz @ dy)
            if not np.isfinite(decrement):
                raise SolverDiverged("Newton system became singular", details={"mu": mu})
            if decrement / 2.0 <= decrement_tol:
                return v, decrement
            if self.iterations >= self.config.newton_max_iter:
                return v, decrement

            dv = self.Z @ dy
            step = self._max_step(v, dv)
            f0 = self._value(v, mu)
            while step > 1e-16:
                trial = v + step * dv
                if self._value(trial, mu) <= f0 - 1e-4 * step * decrement:
                    break
                step *= 0.5
            else:
                # no further decrease at machine precision
                return v, decrement
            v = trial
            self.iterations += 1

    def solve(self, v0: np.ndarray) -> Tuple[np.ndarray, float]:
        cfg = self.config
        v = v0.copy()
        mu = cfg.barrier_start
        decrement = math.inf
        while True:
            tol = 1e-3 * cfg.tol * max(1.0, abs(self._value(v, 0.0)))
            v, decrement = self._newton_stage(v, mu, tol)
            logger.debug("barrier mu=%.1e decrement=%.3e iterations=%d", mu, decrement, self.iterations)
            if self.iterations >= cfg.newton_max_iter and decrement / 2.0 > tol:
                raise SolverDiverged(
                    f"Newton did not converge in {cfg.newton_max_iter} iterations",
                    details={"mu": mu, "decrement": decrement},
                )
            if mu <= cfg.barrier_final:
                return v, decrement
            mu = max(mu * cfg.barrier_factor, cfg.barrier_final)


# ================================================================
# PRIMAL-DUAL
# ================================================================

def prox_alpha(m0: np.ndarray, a0: np.ndarray, b0: np.ndarray, gamma: np.ndarray,
               iterations: int = 50) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Elementwise prox of gamma * alpha at (m0, a0, b0).

    Minimising over m first gives m = m0 theta / (theta + 2 gamma); the
    remaining convex function of (a, b) is minimised by damped Newton on
    the quadrant a, b >= PROX_FLOOR.
    """
    m0, a0, b0, gamma = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (m0, a0, b0, gamma)))
    q = gamma * m0 * m0

    def value(a, b):
        return q / (theta(a, b) + 2.0 * gamma) + 0.5 * ((a - a0) ** 2 + (b - b0) ** 2)

    a = np.maximum(a0, PROX_FLOOR)
    b = np.maximum(b0, PROX_FLOOR)
    active = q > 0
    for _ in range(iterations):
        if not np.any(active):
            break
        th = theta(a, b)
        t1, t2 = theta_partials(a, b)
        h11, h12, h22 = theta_hessian(a, b)
        phi = th + 2.0 * gamma
        c1 = q / phi**2
        c2 = 2.0 * q / phi**3
        ga = -c1 * t1 + (a - a0)
        gb = -c1 * t2 + (b - b0)
        H11 = c2 * t1 * t1 - c1 * h11 + 1.0
        H12 = c2 * t1 * t2 - c1 * h12
        H22 = c2 * t2 * t2 - c1 * h22 + 1.0
        det = H11 * H22 - H12 * H12
        da = -(H22 * ga - H12 * gb) / det
        db = -(-H12 * ga + H11 * gb) / det
        da = np.where(active, da, 0.0)
        db = np.where(active, db, 0.0)

        step = np.ones_like(a)
        for base, d in ((a, da), (b, db)):
            neg = d < 0
            room = np.where(neg, 0.99 * (base - PROX_FLOOR) / np.where(neg, -d, 1.0), np.inf)
            step = np.minimum(step, room)
        current = value(a, b)
        for _ in range(30):
            trial = value(a + step * da, b + step * db)
            worse = trial > current
            if not np.any(worse):
                break
            step = np.where(worse, 0.5 * step, step)
        accept = value(a + step * da, b + step * db) <= current
        step = np.where(accept, step, 0.0)
        a = a + step * da
        b = b + step * db
        moved = np.maximum(np.abs(step * da), np.abs(step * db))
        active = active & (moved > 1e-15 * (1.0 + np.abs(a) + np.abs(b)))

    th = theta(a, b)
    m = np.where(q > 0, m0 * th / (th + 2.0 * gamma), 0.0)
    return m, a, b


class _PrimalDual:
    """x = (rho_1..rho_{N-1}, v); L x + c = (v, rho_bar at edge tails, rho_bar at edge heads)."""

    def __init__(self, problem: _Discretisation, config: SolverConfig):
        self.p = problem
        self.config = config
        n, N, E = problem.chain.n, problem.N, problem.E
        self.n_rho = n * (N - 1)
        dim = self.n_rho + N * E
        self.iterations = 0

        # midpoint map from interior densities: rho_bar_k = (rho_{k-1} + rho_k) / 2
        avg = np.zeros((N, N - 1))
        for k in range(N):
            if k - 1 >= 0:
                avg[k, k - 1] += 0.5
            if k < N - 1:
                avg[k, k] += 0.5
        mid = np.kron(avg, np.eye(n))
        steps = np.arange(N)[:, None] * n
        rows_a = (steps + problem.a[None, :]).ravel()
        rows_b = (steps + problem.b[None, :]).ravel()
        mid_const = np.zeros((N, n))
        mid_const[0] += 0.5 * problem.rho0
        mid_const[-1] += 0.5 * problem.rho1
        mid_const = mid_const.ravel()

        NE = N * E
        L = np.zeros((3 * NE, dim))
        L[:NE, self.n_rho:] = np.eye(NE)
        L[NE:2 * NE, :self.n_rho] = mid[rows_a]
        L[2 * NE:, :self.n_rho] = mid[rows_b]
        self.L = L
        self.offset = np.concatenate([np.zeros(NE), mid_const[rows_a], mid_const[rows_b]])
        self.NE = NE

        # continuity constraints A x = beq; row block k is interval k + 1
        A = np.zeros((N * n, dim))
        for k in range(N):
            rows = slice(k * n, (k + 1) * n)
            if k < N - 1:
                A[rows, k * n:(k + 1) * n] += np.eye(n)
            if k > 0:
                A[rows, (k - 1) * n:k * n] -= np.eye(n)
            A[rows, self.n_rho + k * E:self.n_rho + (k + 1) * E] = problem.h * problem.D
        beq = np.zeros(N * n)
        beq[:n] += problem.rho0
        beq[-n:] -= problem.rho1
        self.A = A
        self.A_pinv = linalg.pinv(A, rtol=RANK_CUTOFF)
        self.beq = beq

    def project(self, x: np.ndarray) -> np.ndarray:
        return x - self.A_pinv @ (self.A @ x - self.beq)

    def action(self, x: np.ndarray) -> float:
        z = self.L @ x + self.offset
        NE = self.NE
        cost = alpha(z[:NE], np.maximum(z[NE:2 * NE], 0.0), np.maximum(z[2 * NE:], 0.0))
        return float(np.sum(cost * self.p.term_weight))

    def dual_prox(self, u: np.ndarray, sigma: float) -> np.ndarray:
        NE = self.NE
        point = u / sigma + self.offset
        gamma = self.p.term_weight / sigma
        m, a, b = prox_alpha(point[:NE], point[NE:2 * NE], point[2 * NE:], gamma)
        return u - sigma * (np.concatenate([m, a, b]) - self.offset)

    def solve(self, x0: np.ndarray) -> Tuple[np.ndarray, Dict[str, float], bool]:
        cfg = self.config
        norm = float(np.linalg.norm(self.L, 2))
        tau = sigma = 0.99 / norm
        x = self.project(x0)
        y = np.zeros(self.L.shape[0])
        Lty = self.L.T @ y
        last_action = self.action(x)
        record = {"primal": math.inf, "dual": math.inf, "action_change": math.inf}

        for it in range(1, cfg.max_iter + 1):
            x_new = self.project(x - tau * Lty)
            x_bar = 2.0 * x_new - x
            y_new = self.dual_prox(y + sigma * (self.L @ x_bar), sigma)
            Lty_new = self.L.T @ y_new

            if it % cfg.check_every == 0:
                p_res = (x - x_new) / tau - (Lty - Lty_new)
                d_res = (y - y_new) / sigma - self.L @ (x - x_new)
                p_norm = float(np.linalg.norm(p_res))
                d_norm = float(np.linalg.norm(d_res))
                p_thresh = 1e-10 + cfg.tol * max(np.linalg.norm(x_new) / tau, np.linalg.norm(Lty_new))
                d_thresh = 1e-10 + cfg.tol * max(np.linalg.norm(y_new) / sigma,
                                                 np.linalg.norm(self.L @ x_new))
                current = self.action(x_new)
                change = abs(current - last_action) / max(1.0, abs(current))
                last_action = current
                record = {"primal": p_norm, "dual": d_norm, "action_change": change}
                if p_norm < p_thresh and d_norm < d_thresh and change < cfg.tol and np.isfinite(current):
                    self.iterations = it
                    return x_new, record, True

            x, y, Lty = x_new, y_new, Lty_new

        self.iterations = cfg.max_iter
        return x, record, False


# ================================================================
# PUBLIC API
# ================================================================

def _constant_path(chain: MarkovChain, rho: Density, grid: int, method: str) -> PathSolution:
    return PathSolution(
        times=np.linspace(0.0, 1.0, grid + 1),
        densities=np.tile(rho, (grid + 1, 1)),
        momenta=np.zeros((grid, chain.n, chain.n)),
        interval_actions=np.zeros(grid),
        action=0.0,
        converged=True,
        method=method,
        residuals={"continuity": 0.0},
    )


def _solve_grid(chain: MarkovChain, rho0: Density, rho1: Density, config: SolverConfig) -> PathSolution:
    if np.max(np.abs(rho0 - rho1)) <= SAME_DENSITY_TOL:
        return _constant_path(chain, rho0, config.grid, config.method)

    problem = _Discretisation(chain, rho0, rho1, config.grid)
    _, v0 = problem.initial_path()

    if config.method == "newton":
        engine = _BarrierNewton(problem, config)
        v, decrement = engine.solve(v0)
        extra = {"decrement": decrement}
        converged = True
        iterations = engine.iterations
    else:
        engine = _PrimalDual(problem, config)
        x0 = np.concatenate([problem.interior(v0), v0])
        x, extra, converged = engine.solve(x0)
        v = x[engine.n_rho:]
        iterations = engine.iterations

    densities = problem.densities(v)
    residuals = problem.residuals(densities, v)
    residuals.update(extra)
    interval = problem.interval_actions(v)
    total = float(interval.sum())
    converged = converged and residuals["continuity"] <= max(config.tol, 1e-9) and np.isfinite(total)

    solution = PathSolution(
        times=np.linspace(0.0, 1.0, config.grid + 1),
        densities=densities,
        momenta=problem.momenta(v),
        interval_actions=interval,
        action=total,
        converged=bool(converged),
        method=config.method,
        iterations=iterations,
        residuals=residuals,
    )
    if not converged:
        raise SolverDiverged(
            f"{config.method} solver stopped with residuals {residuals}",
            details={"partial": solution.to_dict()},
        )
    return solution


def solve_W(
    chain: MarkovChain,
    rho0,
    rho1,
    config: Optional[SolverConfig] = None,
) -> PathSolution:
    """Estimate W_est = sqrt(action) of W(rho0, rho1) with its optimal discrete path.

    The estimate approaches W from below under grid refinement.

    With config.refine the problem is also solved on N/2 intervals and the
    difference of the two estimates is reported as refinement_gap.
    """
    config = config or SolverConfig()
    rho0 = chain.check_density(rho0)
    rho1 = chain.check_density(rho1)

    solution = _solve_grid(chain, rho0, rho1, config)
    if config.refine and config.grid // 2 >= 2:
        coarse = _solve_grid(chain, rho0, rho1, config.coarse())
        solution.coarse_w = coarse.w_est
    logger.info(
        "W_est=%.8f on N=%d (%s, %d iterations, gap %s)",
        solution.w_est, solution.grid, solution.method, solution.iterations,
        "n/a" if solution.refinement_gap is None else f"{solution.refinement_gap:.2e}",
    )
    return solution


def recover_potentials(chain: MarkovChain, solution: PathSolution) -> Tuple[np.ndarray, bool]:
    """Per-interval psi_k with V_k ~ theta(rho_bar_k) grad psi_k, gauge sum(pi psi) = 0.

    Weighted least squares over the support edges; the second value is False
    when some midpoint edge density vanishes, in which case psi is not unique.
    """
    xs, ys = chain.edges()
    weights = chain.weights[xs, ys]
    unique = True
    potentials = np.zeros((solution.grid, chain.n))
    for k, rho_bar in enumerate(solution.midpoints()):
        edge_rho = theta(np.maximum(rho_bar[xs], 0.0), np.maximum(rho_bar[ys], 0.0))
        live = edge_rho > 0
        if not np.all(live):
            unique = False
        flux = solution.momenta[k][xs, ys]
        scale = np.sqrt(weights[live] * edge_rho[live])
        rows = np.zeros((int(live.sum()) + 1, chain.n))
        idx = np.arange(int(live.sum()))
        rows[idx, ys[live]] = scale
        rows[idx, xs[live]] -= scale
        rows[-1] = chain.pi
        rhs = np.concatenate([flux[live] / edge_rho[live] * scale, [0.0]])
        potentials[k] = linalg.lstsq(rows, rhs)[0]
    return potentials, unique


def two_point_distance(p: float, r0: float, r1: float) -> float:
    """Closed form W on twopoint:p,p between densities (1 + r, 1 - r)."""
    if not 0 < p <= 1:
        raise BadRate(f"rate {p} must lie in (0, 1]")
    if not (-1.0 <= r0 <= 1.0 and -1.0 <= r1 <= 1.0):
        raise BadRate("r must lie in [-1, 1]")

    def integrand(r: float) -> float:
        return 1.0 / math.sqrt(2.0 * float(theta(1.0 - r, 1.0 + r)))

    lo, hi = sorted((r0, r1))
    if hi - lo == 0:
        return 0.0
    value, err = integrate.quad(integrand, lo, hi, limit=400, epsabs=1e-11, epsrel=1e-12)
    if err > 1e-8:
        raise QuadratureFail(f"quadrature error {err:.3e}")
    return value / math.sqrt(p)


def dirac_distances(chain: MarkovChain, config: Optional[SolverConfig] = None) -> np.ndarray:
    """Matrix of W_est between all pairs of Dirac densities."""
    config = config or SolverConfig()
    out = np.zeros((chain.n, chain.n))
    for x in range(chain.n):
        for y in range(x + 1, chain.n):
            w = solve_W(chain, chain.dirac(x), chain.dirac(y), config).w_est
            out[x, y] = out[y, x] = w
    return out


def path_table(chain: MarkovChain, solution: PathSolution) -> List[dict]:
    """Flat rows (step, time, state, density, potential, action) for CSV export."""
    potentials, _ = recover_potentials(chain, solution)
    rows = []
    for k, t in enumerate(solution.times):
        psi = potentials[min(k, solution.grid - 1)]
        interval = solution.interval_actions[min(k, solution.grid - 1)] if solution.grid else 0.0
        for i, state in enumerate(chain.states):
            rows.append({
                "step": k,
                "time": float(t),
                "state": state,
                "density": float(solution.densities[k, i]),
                "potential": float(psi[i]),
                "action": float(interval),
            })
    return rows
