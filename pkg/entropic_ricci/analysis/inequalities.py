"""
Sampled verification of the functional-inequality ladder.

Given a certified curvature bound kappa, verify_ladder evaluates both sides
of MLSI, T_W, T_1, sub-Gaussian concentration, HWI, EVI, contraction and
the metric speed of the heat flow on random densities, and records the
worst margin (rhs - lhs) with its witness for each inequality.

Checks that need W use W_est from solve_W, which approaches W from below
under grid refinement. Each check states in `bound_direction` how that
affects its margin. The transport checks run on `transport_samples` of the
densities only; a sample whose solve fails is counted in `failed_samples`
and left out of the margin.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import logsumexp

from entropic_ricci.analysis.sampling import child_generators, dirichlet_densities, mixed_densities
from entropic_ricci.analysis.semigroup import entropy, fisher, heat, poincare_lambda
from entropic_ricci.core.chain import MarkovChain, graph_distance
from entropic_ricci.transport.solver import solve_W
from entropic_ricci.transport.wasserstein import wasserstein
from entropic_ricci.utils.config import LadderConfig, SolverConfig, worker_count
from entropic_ricci.utils.errors import EntropicRicciError, SolverDiverged

logger = logging.getLogger(__name__)

T = TypeVar("T")

EXACT_SLACK = 1e-9
SUBGAUSSIAN_SLACK = 1e-12
TRANSPORT_SLACK = 1e-7
SPEED_SLACK_REL = 1e-3
EVI_SLACK = 1e-4
# floor mixed into the endpoints of the flow checks so P_t rho is smooth at t = 0
FLOW_FLOOR = 0.05


class InequalityCheck(BaseModel):
    name: str
    passed: bool = True
    skipped: bool = False
    min_margin: Optional[float] = None
    samples: int = 0
    failed_samples: int = 0
    provenance: str = "sampled"
    bound_direction: str = ""
    witness: Dict[str, object] = Field(default_factory=dict)
    certified_margin: Optional[float] = None
    error: Optional[str] = None
    note: str = ""
    rows: List[dict] = Field(default_factory=list, exclude=True)


class InequalityReport(BaseModel):
    chain: str
    kappa: float
    poincare_lambda: float
    poincare_provenance: str = "exact-spectral"
    mlsi_lambda_est: Optional[float] = None
    mlsi_witness: Optional[List[float]] = None
    talagrand_lambda_est: Optional[float] = None
    reverse_ov_lambda: Optional[float] = None
    implication_consistent: Optional[bool] = None
    mlsi_check: InequalityCheck
    talagrand_check: InequalityCheck
    t1_check: InequalityCheck
    subgaussian_check: InequalityCheck
    hwi_check: InequalityCheck
    evi_check: InequalityCheck
    contraction_check: InequalityCheck
    speed_check: InequalityCheck

    def checks(self) -> List[InequalityCheck]:
        return [
            self.mlsi_check, self.talagrand_check, self.t1_check, self.subgaussian_check,
            self.hwi_check, self.evi_check, self.contraction_check, self.speed_check,
        ]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks())


def ladder_rows(report: InequalityReport) -> List[dict]:
    """Per-sample rows (check, sample_id, lhs, rhs, margin) for CSV export."""
    rows: List[dict] = []
    for check in report.checks():
        rows.extend(check.rows)
    return rows


# ================================================================
# LIPSCHITZ OBSERVABLES
# ================================================================

def _lipschitz_constant(chain: MarkovChain, phi: np.ndarray) -> float:
    xs, ys = chain.edges()
    if xs.size == 0:
        return 0.0
    return float(np.max(np.abs(phi[xs] - phi[ys])))


def lipschitz_sampler(chain: MarkovChain, count: int, seed: int) -> List[np.ndarray]:
    """Random functions with Lipschitz constant exactly 1 for the graph distance.

    Random values are replaced by their 1-Lipschitz lower envelope
    min_y (f(y) + d(x, y)) and rescaled so the constraint is active.
    Constant draws are discarded.
    """
    d = graph_distance(chain).astype(float)
    scale = max(1.0, float(d.max()))
    rng = child_generators(seed, 1)[0]
    out: List[np.ndarray] = []
    while len(out) < count:
        f = scale * rng.standard_normal(chain.n)
        envelope = np.min(f[None, :] + d, axis=1)
        lip = _lipschitz_constant(chain, envelope)
        if lip <= 1e-12:
            continue
        out.append(envelope / lip)
    return out


def distance_observables(chain: MarkovChain) -> List[np.ndarray]:
    """d_g(x0, .) for every x0; on the hypercube these include the Hamming weight."""
    d = graph_distance(chain).astype(float)
    return [row for row in d if _lipschitz_constant(chain, row) > 0]


# ================================================================
# CHECK PLUMBING
# ================================================================

def _summarise(
    check: InequalityCheck,
    lhs: np.ndarray,
    rhs: np.ndarray,
    slack: np.ndarray,
    witness: Callable[[int], Dict[str, object]],
) -> InequalityCheck:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    margin = rhs - lhs
    check.samples = int(margin.size)
    check.rows = [
        {"check": check.name, "sample_id": i, "lhs": float(lhs[i]), "rhs": float(rhs[i]), "margin": float(margin[i])}
        for i in range(margin.size)
    ]
    if margin.size == 0:
        return check
    i = int(np.argmin(margin))
    check.min_margin = float(margin[i])
    check.passed = bool(np.all(margin >= -np.broadcast_to(slack, margin.shape)))
    check.witness = {"sample_id": i, **witness(i)}
    return check


def _attempt(label: str, task: Callable[[], T]) -> Optional[T]:
    """Result of one sample, or None when its transport solve fails."""
    try:
        return task()
    except EntropicRicciError as exc:
        logger.warning("%s sample dropped: %s: %s", label, type(exc).__name__, exc)
        return None


def _surviving(check: InequalityCheck, results: Sequence[Optional[T]]) -> List[T]:
    """Keep the evaluated samples and count the failed ones on the check."""
    kept = [r for r in results if r is not None]
    check.failed_samples = len(results) - len(kept)
    if results and not kept:
        raise SolverDiverged(f"all {len(results)} {check.name} samples failed to solve")
    return kept


def _skipped(name: str, reason: str) -> InequalityCheck:
    return InequalityCheck(name=name, skipped=True, note=reason)


def _guarded(name: str, body: Callable[[InequalityCheck], InequalityCheck], **fields) -> InequalityCheck:
    check = InequalityCheck(name=name, **fields)
    try:
        return body(check)
    except EntropicRicciError as exc:
        logger.warning("%s check failed: %s", name, exc)
        check.passed = False
        check.error = f"{type(exc).__name__}: {exc}"
        return check


# ================================================================
# LADDER
# ================================================================

class _Ladder:
    def __init__(
        self,
        chain: MarkovChain,
        kappa: float,
        config: LadderConfig,
        solver: SolverConfig,
        workers: Optional[int],
    ):
        self.chain = chain
        self.kappa = kappa
        self.lam = kappa if kappa > 0 else None
        self.config = config
        self.solver = solver
        self.flat_solver = solver.model_copy(update={"refine": False})
        self.workers = worker_count(workers)

        gen_densities, gen_lipschitz, gen_pairs = child_generators(config.seed, 3)
        sampled = mixed_densities(chain, max(config.densities - 1, 0), gen_densities)
        self.densities = np.vstack([chain.uniform()[None, :], sampled])
        self.H = np.array([entropy(chain, r) for r in self.densities])
        self.I = np.array([fisher(chain, r) for r in self.densities])
        self.lipschitz_seed = int(gen_lipschitz.integers(2**31))

        n_pairs = max(1, config.transport_samples // 2)
        self.flow_starts = dirichlet_densities(chain, n_pairs, gen_pairs, 1.0, FLOW_FLOOR)
        self.flow_targets = dirichlet_densities(chain, n_pairs, gen_pairs, 1.0, FLOW_FLOOR)
        self.transport_ids = list(range(min(config.transport_samples, len(self.densities))))
        self.transport_note = (f"{len(self.transport_ids)} transport samples of {len(self.densities)} densities, "
                               f"{len(self.flow_starts)} flow pairs")

    def _parallel(self, tasks: Sequence[Callable[[], T]]) -> List[T]:
        if self.workers == 1:
            return [task() for task in tasks]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(lambda task: task(), tasks))

    def _w(self, a, b, refine: bool = True) -> Tuple[float, float]:
        sol = solve_W(self.chain, a, b, self.solver if refine else self.flat_solver)
        return sol.w_est, sol.refinement_gap or 0.0

    # ---------------- information-only checks ----------------

    def mlsi(self) -> InequalityCheck:
        if self.lam is None:
            return _skipped("mlsi", "requires kappa > 0")

        def body(check: InequalityCheck) -> InequalityCheck:
            rhs = self.I / (2.0 * self.lam)
            return _summarise(check, self.H, rhs, np.full(len(self.H), EXACT_SLACK),
                              lambda i: {"rho": self.densities[i].tolist()})

        return _guarded("mlsi", body, bound_direction="exact: no transport distance involved")

    def mlsi_estimate(self) -> Tuple[Optional[float], Optional[List[float]]]:
        mask = self.H > self.config.mlsi_entropy_floor
        if not np.any(mask):
            return None, None
        ratios = np.full(len(self.H), np.inf)
        ratios[mask] = self.I[mask] / (2.0 * self.H[mask])
        i = int(np.argmin(ratios))
        return float(ratios[i]), self.densities[i].tolist()

    def t1(self) -> InequalityCheck:
        if self.lam is None:
            return _skipped("t1", "requires kappa > 0")

        def body(check: InequalityCheck) -> InequalityCheck:
            one = self.chain.uniform()
            lhs = np.array([wasserstein(self.chain, r, one, "graph", 1) for r in self.densities])
            rhs = np.sqrt(self.H / self.lam)
            return _summarise(check, lhs, rhs, np.full(len(lhs), EXACT_SLACK),
                              lambda i: {"rho": self.densities[i].tolist()})

        return _guarded("t1", body, provenance="exact", bound_direction="exact: network simplex W_1")

    def subgaussian(self) -> InequalityCheck:
        if self.lam is None:
            return _skipped("subgaussian", "requires kappa > 0")

        def body(check: InequalityCheck) -> InequalityCheck:
            funcs = distance_observables(self.chain) + lipschitz_sampler(
                self.chain, self.config.lipschitz, self.lipschitz_seed)
            log_pi = np.log(self.chain.pi)
            lhs, rhs, meta = [], [], []
            for k, phi in enumerate(funcs):
                centred = phi - np.dot(self.chain.pi, phi)
                for t in self.config.subgaussian_t:
                    lhs.append(float(logsumexp(t * centred + log_pi)))
                    rhs.append(t * t / (4.0 * self.lam))
                    meta.append((k, t, phi))
            return _summarise(
                check, np.array(lhs), np.array(rhs), np.full(len(lhs), SUBGAUSSIAN_SLACK),
                lambda i: {"function": meta[i][2].tolist(), "t": meta[i][1], "function_id": meta[i][0]},
            )

        return _guarded("subgaussian", body, provenance="exact",
                        bound_direction="exact: log of the exponential moment")

    # ---------------- transport checks ----------------

    def distances_to_uniform(self) -> List[Optional[Tuple[int, float, float]]]:
        """(density id, W_est, refinement gap) per transport sample, None where the solve failed."""
        one = self.chain.uniform()

        def task(i: int) -> Optional[Tuple[int, float, float]]:
            return _attempt("distance", lambda: (i, *self._w(self.densities[i], one)))

        return self._parallel([lambda i=i: task(i) for i in self.transport_ids])

    def talagrand(self, dist: List[Optional[Tuple[int, float, float]]]) -> InequalityCheck:
        if self.lam is None:
            return _skipped("talagrand", "requires kappa > 0")

        def body(check: InequalityCheck) -> InequalityCheck:
            kept = _surviving(check, dist)
            ids = [d[0] for d in kept]
            # W_est(N) + |W_est(N) - W_est(N/2)| extrapolates towards W from below
            lhs = np.array([d[1] + d[2] for d in kept])
            rhs = np.sqrt(2.0 * self.H[ids] / self.lam)
            return _summarise(check, lhs, rhs, np.full(len(lhs), TRANSPORT_SLACK),
                              lambda i: {"rho": self.densities[ids[i]].tolist(), "w_est": float(kept[i][1])})

        return _guarded("talagrand", body, provenance="estimated", note=self.transport_note,
                        bound_direction="non-conservative: W_est sits below W; lhs adds the refinement gap")

    def hwi(self, dist: List[Optional[Tuple[int, float, float]]]) -> InequalityCheck:
        def body(check: InequalityCheck) -> InequalityCheck:
            kept = _surviving(check, dist)
            ids = [d[0] for d in kept]
            one = self.chain.uniform()
            w = np.array([d[1] for d in kept])
            gap = np.array([d[2] for d in kept])
            info = self.I[ids]
            root = np.sqrt(info)
            rhs = np.where(np.isinf(info), np.inf, w * root - 0.5 * self.kappa * w * w)
            slack = 2.0 * gap * (np.where(np.isinf(root), 0.0, root) + abs(self.kappa) * w) + TRANSPORT_SLACK
            _summarise(check, self.H[ids], rhs, slack,
                       lambda i: {"rho": self.densities[ids[i]].tolist(), "w_est": float(w[i])})

            # weaker test with the certified lower bound sqrt 2 W_1 in place of W
            low = np.array([math.sqrt(2.0) * wasserstein(self.chain, self.densities[i], one, "graph", 1) for i in ids])
            certified = np.where(np.isinf(info), np.inf, low * root - 0.5 * self.kappa * low * low) - self.H[ids]
            check.certified_margin = float(np.min(certified)) if certified.size else None
            return check

        return _guarded(
            "hwi", body, provenance="estimated", note=self.transport_note,
            bound_direction="W_est on the right side with slack 2 gap |d rhs/dW|; "
                            "certified_margin substitutes sqrt(2) W_1,g",
        )

    def evi(self) -> InequalityCheck:
        times = self.config.evi_times
        steps = self.config.evi_steps

        def sample(j: int, t: float) -> Tuple:
            rho, nu = self.flow_starts[j], self.flow_targets[j]
            base = heat(self.chain, rho, t)
            w0, gap = self._w(base, nu)
            slopes = []
            for h in steps:
                w1, _ = self._w(heat(self.chain, rho, t + h), nu, refine=False)
                w2, _ = self._w(heat(self.chain, rho, t + 2 * h), nu, refine=False)
                # one-sided second-order difference of t -> W^2
                slopes.append((-3.0 * w0 * w0 + 4.0 * w1 * w1 - w2 * w2) / (2.0 * h))
            lhs = 0.5 * max(slopes) + 0.5 * self.kappa * w0 * w0
            rhs = entropy(self.chain, nu) - entropy(self.chain, base)
            return j, t, lhs, rhs, w0, gap

        def body(check: InequalityCheck) -> InequalityCheck:
            tasks = [lambda j=j, t=t: _attempt("evi", lambda: sample(j, t))
                     for j in range(len(self.flow_starts)) for t in times]
            flat = _surviving(check, self._parallel(tasks))
            lhs = np.array([r[2] for r in flat])
            rhs = np.array([r[3] for r in flat])
            w = np.array([r[4] for r in flat])
            gap = np.array([r[5] for r in flat])
            slack = EVI_SLACK * (1.0 + w * w) + abs(self.kappa) * w * gap
            return _summarise(check, lhs, rhs, slack,
                              lambda i: {"pair": flat[i][0], "t": flat[i][1],
                                         "rho": self.flow_starts[flat[i][0]].tolist(),
                                         "nu": self.flow_targets[flat[i][0]].tolist()})

        return _guarded("evi", body, provenance="estimated", note=self.transport_note,
                        bound_direction="estimated: upper Dini derivative by one-sided differences")

    def contraction(self) -> InequalityCheck:
        times = self.config.contraction_times

        def pair_task(j: int) -> List[Optional[Tuple]]:
            rho, sigma = self.flow_starts[j], self.flow_targets[j]
            start = _attempt("contraction", lambda: self._w(rho, sigma))
            if start is None:
                return [None] * len(times)
            w0, gap0 = start
            out: List[Optional[Tuple]] = []
            for t in times:
                end = _attempt("contraction",
                               lambda t=t: self._w(heat(self.chain, rho, t), heat(self.chain, sigma, t)))
                out.append(None if end is None else (j, t, end[0], math.exp(-self.kappa * t) * w0, end[1] + gap0))
            return out

        def body(check: InequalityCheck) -> InequalityCheck:
            rows = self._parallel([lambda j=j: pair_task(j) for j in range(len(self.flow_starts))])
            flat = _surviving(check, [row for pair in rows for row in pair])
            return _summarise(
                check, np.array([r[2] for r in flat]), np.array([r[3] for r in flat]),
                np.array([r[4] for r in flat]) + TRANSPORT_SLACK,
                lambda i: {"pair": flat[i][0], "t": flat[i][1]},
            )

        return _guarded("contraction", body, provenance="estimated", note=self.transport_note,
                        bound_direction="estimated: W_est on both sides, slack is the refinement gaps")

    def speed(self) -> InequalityCheck:
        h = self.config.speed_step
        times = self.config.speed_times

        def sample(j: int, t: float) -> Tuple:
            now = heat(self.chain, self.flow_starts[j], t)
            w, _ = self._w(heat(self.chain, self.flow_starts[j], t + h), now, refine=False)
            return j, t, w / h, math.sqrt(fisher(self.chain, now))

        def body(check: InequalityCheck) -> InequalityCheck:
            tasks = [lambda j=j, t=t: _attempt("speed", lambda: sample(j, t))
                     for j in range(len(self.flow_starts)) for t in times]
            flat = _surviving(check, self._parallel(tasks))
            lhs = np.array([r[2] for r in flat])
            rhs = np.array([r[3] for r in flat])
            return _summarise(check, lhs, rhs, SPEED_SLACK_REL * (1.0 + rhs),
                              lambda i: {"start": flat[i][0], "t": flat[i][1]})

        return _guarded("speed", body, provenance="estimated", note=self.transport_note,
                        bound_direction="non-conservative: W_est sits below W on the smaller side")


def talagrand_lambda_estimate(H: np.ndarray, w: np.ndarray) -> Optional[float]:
    """inf of 2H / W_est^2 over samples with W_est > 0."""
    mask = w > 1e-12
    if not np.any(mask):
        return None
    return float(np.min(2.0 * H[mask] / (w[mask] ** 2)))


def reverse_ov_lambda(lam: Optional[float], kappa: float) -> Optional[float]:
    """max{(lambda/4)(1 + kappa/lambda)^2, kappa}, defined for kappa > -lambda."""
    if lam is None or lam <= 0 or kappa <= -lam:
        return None
    return max(0.25 * lam * (1.0 + kappa / lam) ** 2, kappa)


def verify_ladder(
    chain: MarkovChain,
    kappa: float,
    config: Optional[LadderConfig] = None,
    solver: Optional[SolverConfig] = None,
    workers: Optional[int] = None,
) -> InequalityReport:
    config = config or LadderConfig()
    solver = solver or SolverConfig()
    ladder = _Ladder(chain, kappa, config, solver, workers)
    gap = poincare_lambda(chain)
    mlsi_est, mlsi_witness = ladder.mlsi_estimate()

    dist = ladder.distances_to_uniform()
    talagrand = ladder.talagrand(dist)
    hwi = ladder.hwi(dist)
    solved = [d for d in dist if d is not None]
    tal_est = None
    if solved:
        tal_est = talagrand_lambda_estimate(ladder.H[[d[0] for d in solved]], np.array([d[1] for d in solved]))

    mlsi = ladder.mlsi()
    report = InequalityReport(
        chain=chain.name,
        kappa=kappa,
        poincare_lambda=gap,
        mlsi_lambda_est=mlsi_est,
        mlsi_witness=mlsi_witness,
        talagrand_lambda_est=tal_est,
        reverse_ov_lambda=reverse_ov_lambda(tal_est, kappa),
        mlsi_check=mlsi,
        talagrand_check=talagrand,
        t1_check=ladder.t1(),
        subgaussian_check=ladder.subgaussian(),
        hwi_check=hwi,
        evi_check=ladder.evi(),
        contraction_check=ladder.contraction(),
        speed_check=ladder.speed(),
    )
    if ladder.lam is not None:
        mlsi_ok = mlsi.passed and not mlsi.skipped
        tw_ok = talagrand.passed and not talagrand.skipped
        p_ok = gap >= ladder.lam - 1e-9
        report.implication_consistent = bool((not mlsi_ok or tw_ok) and (not tw_ok or p_ok))
    logger.info(
        "ladder on %s with kappa=%g: %s",
        chain.name, kappa,
        ", ".join(f"{c.name}={'skip' if c.skipped else ('ok' if c.passed else 'FAIL')}" for c in report.checks()),
    )
    return report
