"""
Command-line front end.

    python -m entropic_ricci chain        --builtin hypercube:3
    python -m entropic_ricci distance     --builtin twopoint:0.5,0.5 --from dirac:0 --to dirac:1
    python -m entropic_ricci geodesic     --builtin cycle:4 --from '[1.5,1,0.5,1]' --to uniform --shoot
    python -m entropic_ricci curvature    --builtin hypercube:3 [--estimate]
    python -m entropic_ricci inequalities --builtin hypercube:2 --kappa 1
    python -m entropic_ricci report       --builtin twopoint:1,1 [--no-estimate]

Exit codes: 0 success, 1 validation error (error name on stderr),
2 solver non-convergence (partial artifacts are still written, flagged).
"""

import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from entropic_ricci.analysis.inequalities import InequalityReport, ladder_rows, verify_ladder
from entropic_ricci.core.chain import MarkovChain
from entropic_ricci.core.mapping import MappingRepresentation, builtin_representation, mapping_representation
from entropic_ricci.core.pipeline import PipelineSettings, ReportPipeline
from entropic_ricci.data.chain_io import (
    CHECK_COLUMNS,
    TABLE_COLUMNS,
    TRAJECTORY_COLUMNS,
    chain_from_source,
    csv_text,
    dumps,
    parse_density,
)
from entropic_ricci.geometry.curvature import CurvatureReport, curvature_report
from entropic_ricci.geometry.geodesics import shoot, trajectory_rows
from entropic_ricci.transport.solver import path_table, recover_potentials, solve_W
from entropic_ricci.transport.wasserstein import comparison_table
from entropic_ricci.utils.config import (
    DEFAULT_SEED,
    CurvatureConfig,
    GeodesicConfig,
    LadderConfig,
    SolverConfig,
)
from entropic_ricci.utils.errors import EntropicRicciError, NoConvergence, SolverError
from entropic_ricci.utils.logging import configure

logger = logging.getLogger(__name__)

COMMANDS = ("chain", "distance", "geodesic", "curvature", "inequalities", "report")
CHAIN_COLUMNS = ["state", "pi"]


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Literal["chain", "distance", "geodesic", "curvature", "inequalities", "report"]
    builtin: Optional[str] = None
    input: Optional[str] = None
    source: Optional[str] = None
    target: Optional[str] = None
    grid: int = 32
    tol: float = 1e-7
    method: Literal["newton", "pdhg"] = "newton"
    restarts: int = 64
    samples: int = 100000
    densities: int = 2000
    kappa: Optional[float] = None
    estimate: Optional[bool] = None
    transport_samples: int = 16
    shoot: bool = False
    dirac_bound: bool = False
    debug: bool = False
    seed: int = DEFAULT_SEED
    threads: Optional[int] = None
    out: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    verbose: bool = False

    @model_validator(mode="after")
    def _one_input(self) -> "RunConfig":
        if (self.builtin is None) == (self.input is None):
            raise ValueError("exactly one of --builtin and --input is required")
        return self

    def solver(self) -> SolverConfig:
        return SolverConfig(grid=self.grid, tol=self.tol, method=self.method)

    def curvature(self) -> CurvatureConfig:
        return CurvatureConfig(restarts=self.restarts, samples=self.samples, seed=self.seed, debug=self.debug)

    def ladder(self) -> LadderConfig:
        return LadderConfig(densities=self.densities, transport_samples=self.transport_samples, seed=self.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entropic_ricci",
        description="Transport distance, entropic Ricci curvature and functional inequalities for reversible Markov chains",
    )
    parser.add_argument("command", choices=COMMANDS)
    source = parser.add_argument_group("chain")
    source.add_argument("--builtin", help="complete:n | cycle:n | hypercube:n | twopoint:p,q | torus:c1xc2")
    source.add_argument("--input", help="chain JSON (states, kernel, pi) or CSV kernel")

    transport = parser.add_argument_group("transport")
    transport.add_argument("--from", dest="source", help="dirac:<state> | uniform | JSON vector | file")
    transport.add_argument("--to", dest="target", help="dirac:<state> | uniform | JSON vector | file")
    transport.add_argument("--grid", type=int, default=32)
    transport.add_argument("--tol", type=float, default=1e-7)
    transport.add_argument("--method", choices=["newton", "pdhg"], default="newton")
    transport.add_argument("--dirac-bound", action="store_true", help="add W_2 for the Dirac distance matrix")
    transport.add_argument("--shoot", action="store_true", help="also solve the geodesic equations by shooting")

    curv = parser.add_argument_group("curvature")
    curv.add_argument("--estimate", action="store_true", default=None,
                      help="run the numerical minimisation of B/A (always on for report)")
    curv.add_argument("--no-estimate", dest="estimate", action="store_false", default=None,
                      help="skip it in report")
    curv.add_argument("--restarts", type=int, default=64)
    curv.add_argument("--samples", type=int, default=100000)
    curv.add_argument("--debug", action="store_true", help="cross-check both forms of B and dump the argmin")

    ladder = parser.add_argument_group("inequalities")
    ladder.add_argument("--kappa", type=float)
    ladder.add_argument("--densities", type=int, default=2000)
    ladder.add_argument("--transport-samples", type=int, default=16,
                        help="densities used by the W-based checks (talagrand, hwi, evi, contraction, speed)")

    out = parser.add_argument_group("output")
    out.add_argument("--seed", type=int, default=DEFAULT_SEED)
    out.add_argument("--threads", type=int)
    out.add_argument("--out")
    out.add_argument("--format", choices=["json", "csv"], default="json")
    out.add_argument("-v", "--verbose", action="store_true")
    return parser


# ================================================================
# COMMANDS
# ================================================================

def _representation(config: RunConfig, chain: MarkovChain) -> MappingRepresentation:
    if config.builtin is not None:
        return builtin_representation(config.builtin, chain)
    return mapping_representation(chain, seed=config.seed)


def _endpoints(config: RunConfig, chain: MarkovChain):
    rho0 = parse_density(chain, config.source) if config.source else chain.dirac(0)
    rho1 = parse_density(chain, config.target) if config.target else chain.dirac(chain.n - 1)
    return rho0, rho1


def _quantity_rows(report: BaseModel, provenance: Dict[str, str]) -> List[dict]:
    data = report.model_dump()
    return [
        {"quantity": key, "value": data[key], "provenance": prov}
        for key, prov in provenance.items()
        if isinstance(data.get(key), (int, float))
    ]


Artifact = Tuple[Any, List[dict], List[str]]


def run_chain(config: RunConfig, chain: MarkovChain) -> Artifact:
    summary = chain.summary()
    rows = [{"state": s, "pi": float(p)} for s, p in zip(chain.states, chain.pi)]
    return summary, rows, CHAIN_COLUMNS


def run_distance(config: RunConfig, chain: MarkovChain) -> Artifact:
    rho0, rho1 = _endpoints(config, chain)
    solver = config.solver()
    solution = solve_W(chain, rho0, rho1, solver)
    rows = comparison_table(chain, rho0, rho1, solver, solution, with_dirac=config.dirac_bound)
    payload = {
        "w_est": solution.w_est,
        "refinement_gap": solution.refinement_gap,
        "converged": solution.converged,
        "method": solution.method,
        "grid": solution.grid,
        "table": rows,
    }
    return payload, rows, TABLE_COLUMNS


def run_geodesic(config: RunConfig, chain: MarkovChain) -> Artifact:
    rho0, rho1 = _endpoints(config, chain)
    solution = solve_W(chain, rho0, rho1, config.solver())
    potentials, unique = recover_potentials(chain, solution)
    payload: Dict[str, Any] = {
        "solver": {k: v for k, v in solution.to_dict().items() if k != "momenta"},
        "potentials": potentials.tolist(),
        "potentials_unique": unique,
    }
    rows, columns = path_table(chain, solution), TRAJECTORY_COLUMNS
    if config.shoot:
        try:
            shot = shoot(chain, rho0, rho1, GeodesicConfig(), config.solver().coarse())
        except NoConvergence as exc:
            payload["shot"] = None
            payload["fallback"] = True
            raise NoConvergence(str(exc), details={"partial": payload}) from exc
        stride = max(1, (len(shot.trajectory) - 1) // solution.grid)
        sampled = shot.trajectory[::stride]
        payload["shot"] = {
            "psi0": shot.psi0.tolist(),
            "length": shot.length,
            "endpoint_error": shot.endpoint_error,
            "trajectory": [s.to_dict(chain) for s in sampled],
        }
        rows = trajectory_rows(chain, sampled)
    return payload, rows, columns


def run_curvature(config: RunConfig, chain: MarkovChain) -> Artifact:
    rep = _representation(config, chain)
    report: CurvatureReport = curvature_report(chain, rep, config.curvature(), estimate=bool(config.estimate))
    rows = _quantity_rows(report, {
        "kappa_certified": "certified",
        "kappa_estimated": "estimated",
        "spread": "estimated",
    })
    return report, rows, TABLE_COLUMNS


def run_inequalities(config: RunConfig, chain: MarkovChain) -> Artifact:
    kappa = config.kappa
    if kappa is None:
        certified = curvature_report(chain, _representation(config, chain), estimate=False)
        kappa = certified.kappa_certified if certified.kappa_certified is not None else 0.0
    report: InequalityReport = verify_ladder(chain, kappa, config.ladder(), config.solver(), config.threads)
    return report, ladder_rows(report), CHECK_COLUMNS


def run_report(config: RunConfig, chain: MarkovChain) -> Artifact:
    rho0, rho1 = _endpoints(config, chain)
    settings = PipelineSettings(
        solver=config.solver(),
        curvature=config.curvature(),
        ladder=config.ladder(),
        estimate_curvature=config.estimate is not False,
        kappa=config.kappa,
        workers=config.threads,
    )
    bundle, _ = ReportPipeline(settings).run(chain, rho0, rho1, _representation(config, chain))
    if bundle["partial"]:
        failing = bundle["errors"][0]
        raise _PartialReport(failing["error"], bundle, failing["message"])
    return bundle, bundle.get("comparison") or [], TABLE_COLUMNS


class _PartialReport(Exception):
    def __init__(self, name: str, bundle: Dict[str, Any], message: str):
        super().__init__(message)
        self.name = name
        self.bundle = bundle


RUNNERS: Dict[str, Callable[[RunConfig, MarkovChain], Artifact]] = {
    "chain": run_chain,
    "distance": run_distance,
    "geodesic": run_geodesic,
    "curvature": run_curvature,
    "inequalities": run_inequalities,
    "report": run_report,
}


# ================================================================
# OUTPUT
# ================================================================

_SOLVER_ERRORS = {cls.__name__ for cls in SolverError.__subclasses__()} | {"SolverError"}


def columns_for(command: str) -> List[str]:
    return {
        "chain": CHAIN_COLUMNS,
        "geodesic": TRAJECTORY_COLUMNS,
        "inequalities": CHECK_COLUMNS,
    }.get(command, TABLE_COLUMNS)


def _emit(config: RunConfig, payload: Any, rows: List[dict], columns: List[str]) -> None:
    text = csv_text(rows, columns) if config.format == "csv" else dumps(payload)
    if config.out:
        with open(config.out, "w", encoding="utf-8") as handle:
            handle.write(text)
        logger.info("wrote %s", config.out)
    else:
        sys.stdout.write(text)


def _fail(name: str, message: str) -> None:
    sys.stderr.write(f"{name}: {message}\n")


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig(**vars(args))
    except ValidationError as exc:
        _fail("ValidationError", str(exc.errors()[0]["msg"]))
        return 1
    configure(config.verbose)
    if config.threads is not None:
        logger.debug("worker cap %d", config.threads)

    try:
        chain = chain_from_source(config.builtin, config.input)
        payload, rows, columns = RUNNERS[config.command](config, chain)
    except _PartialReport as exc:
        _fail(exc.name, str(exc))
        _emit(config, exc.bundle, exc.bundle.get("comparison") or [], TABLE_COLUMNS)
        return 2 if exc.name in _SOLVER_ERRORS else 1
    except SolverError as exc:
        _fail(exc.name, str(exc))
        partial = exc.details.get("partial") or exc.details.get("fallback")
        if partial is not None:
            _emit(config, {"partial": True, "error": exc.name, "data": partial}, [], columns_for(config.command))
        return 2
    except (EntropicRicciError, ValidationError) as exc:
        name = exc.name if isinstance(exc, EntropicRicciError) else "ValidationError"
        _fail(name, str(exc))
        return 1

    _emit(config, payload, rows, columns)
    return 0


def main() -> None:
    sys.exit(run())
