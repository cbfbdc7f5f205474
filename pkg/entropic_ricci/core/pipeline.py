"""
Report pipeline

    chain → distance → curvature ─┬─ certified κ ──→ inequalities → bundle → END
                                  └─ no certificate ────────────────→ bundle → END

Any stage that raises routes straight to bundle; the bundle is then
flagged partial and carries the error of the failing stage.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple, TypedDict

import numpy as np
from langgraph.graph import END, StateGraph

from entropic_ricci.analysis.inequalities import verify_ladder
from entropic_ricci.core.chain import MarkovChain
from entropic_ricci.core.mapping import MappingRepresentation
from entropic_ricci.geometry.curvature import curvature_report
from entropic_ricci.transport.solver import solve_W
from entropic_ricci.transport.wasserstein import comparison_table
from entropic_ricci.utils.config import CurvatureConfig, LadderConfig, SolverConfig
from entropic_ricci.utils.errors import EntropicRicciError
from entropic_ricci.utils.tracking import ProvenanceTracker

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineSettings:
    solver: SolverConfig = field(default_factory=SolverConfig)
    curvature: CurvatureConfig = field(default_factory=CurvatureConfig)
    ladder: LadderConfig = field(default_factory=LadderConfig)
    estimate_curvature: bool = True
    kappa: Optional[float] = None
    workers: Optional[int] = None


class ReportState(TypedDict, total=False):
    chain: MarkovChain
    representation: Optional[MappingRepresentation]
    rho0: np.ndarray
    rho1: np.ndarray

    chain_summary: Dict[str, Any]
    distance: Dict[str, Any]
    comparison: List[Dict[str, Any]]
    curvature: Dict[str, Any]
    kappa: Optional[float]
    kappa_source: Optional[str]
    inequalities: Dict[str, Any]

    status: Literal["ok", "failed"]
    errors: List[Dict[str, str]]
    stage_path: List[str]
    bundle: Dict[str, Any]


class ReportPipeline:
    """Runs every analysis on one chain and bundles the results with their provenance."""

    def __init__(self, settings: Optional[PipelineSettings] = None):
        self.settings = settings or PipelineSettings()
        self.workflow = self._build_graph()
        self.current_tracker: Optional[ProvenanceTracker] = None

    def _build_graph(self):
        workflow = StateGraph(ReportState)

        workflow.add_node("chain", self._chain_node)
        workflow.add_node("distance", self._distance_node)
        workflow.add_node("curvature", self._curvature_node)
        workflow.add_node("inequalities", self._inequalities_node)
        workflow.add_node("bundle", self._bundle_node)

        workflow.set_entry_point("chain")
        workflow.add_conditional_edges("chain", self._route_on_status, {"ok": "distance", "failed": "bundle"})
        workflow.add_conditional_edges("distance", self._route_on_status, {"ok": "curvature", "failed": "bundle"})
        workflow.add_conditional_edges(
            "curvature",
            self._route_after_curvature,
            {"certified": "inequalities", "skip": "bundle", "failed": "bundle"},
        )
        workflow.add_edge("inequalities", "bundle")
        workflow.add_edge("bundle", END)
        return workflow.compile()

    # === ROUTING ===

    def _route_on_status(self, state: ReportState) -> str:
        return state.get("status", "ok")

    def _route_after_curvature(self, state: ReportState) -> str:
        if state.get("status") == "failed":
            return "failed"
        return "certified" if state.get("kappa") is not None else "skip"

    # === NODES ===

    def _guard(self, state: ReportState, stage: str, action: str, body) -> ReportState:
        """Run one stage, record it on the tracker and mark the state on failure."""
        state["stage_path"].append(stage)
        start = time.perf_counter()
        try:
            inputs, outputs, provenance, note, calls = body(state)
        except EntropicRicciError as exc:
            duration = (time.perf_counter() - start) * 1000
            logger.error("%s failed: %s: %s", stage, type(exc).__name__, exc)
            state["status"] = "failed"
            state["errors"].append({"stage": stage, "error": type(exc).__name__, "message": str(exc)})
            self.current_tracker.add_step(
                stage=stage, action=action, input_data={}, output_data={}, provenance="estimated",
                duration_ms=duration, success=False, error=type(exc).__name__,
            )
            return state
        duration = (time.perf_counter() - start) * 1000
        self.current_tracker.add_step(
            stage=stage, action=action, input_data=inputs, output_data=outputs,
            provenance=provenance, note=note, duration_ms=duration, solver_calls=calls,
        )
        return state

    def _chain_node(self, state: ReportState) -> ReportState:
        def body(s: ReportState):
            chain = s["chain"]
            summary = chain.summary()
            s["chain_summary"] = summary
            rep = s.get("representation")
            return (
                {"name": chain.name, "states": chain.n},
                {"diameter": summary["diameter"], "reversibility_residual": summary["reversibility_residual"],
                 "representation": None if rep is None else len(rep.labels)},
                "input", "", 0,
            )

        return self._guard(state, "chain", "validate", body)

    def _distance_node(self, state: ReportState) -> ReportState:
        def body(s: ReportState):
            chain = s["chain"]
            solution = solve_W(chain, s["rho0"], s["rho1"], self.settings.solver)
            rows = comparison_table(chain, s["rho0"], s["rho1"], self.settings.solver, solution)
            summary = {k: v for k, v in solution.to_dict().items() if k not in ("momenta",)}
            s["distance"] = summary
            s["comparison"] = rows
            calls = 2 if solution.coarse_w is not None else 1
            return (
                {"rho0": s["rho0"].tolist(), "rho1": s["rho1"].tolist(), "grid": self.settings.solver.grid},
                {"w_est": solution.w_est, "refinement_gap": solution.refinement_gap},
                "estimated", f"{solution.method} solver, {solution.iterations} iterations", calls,
            )

        return self._guard(state, "distance", "solve_W", body)

    def _curvature_node(self, state: ReportState) -> ReportState:
        def body(s: ReportState):
            chain = s["chain"]
            report = curvature_report(
                chain, s.get("representation"), self.settings.curvature,
                estimate=self.settings.estimate_curvature,
            )
            s["curvature"] = report.model_dump(mode="json")
            kappa, source = report.kappa_certified, report.certified_provenance
            if kappa is None and self.settings.kappa is not None:
                kappa, source = self.settings.kappa, "input"
            s["kappa"], s["kappa_source"] = kappa, source
            provenance = "certified" if report.kappa_certified is not None else "estimated"
            return (
                {"restarts": self.settings.curvature.restarts, "samples": self.settings.curvature.samples},
                {"kappa_certified": report.kappa_certified, "kappa_estimated": report.kappa_estimated},
                provenance, report.certified_note, 0,
            )

        return self._guard(state, "curvature", "ricci_bounds", body)

    def _inequalities_node(self, state: ReportState) -> ReportState:
        def body(s: ReportState):
            report = verify_ladder(s["chain"], s["kappa"], self.settings.ladder, self.settings.solver,
                                   self.settings.workers)
            s["inequalities"] = report.model_dump(mode="json")
            failed = [c.name for c in report.checks() if not c.passed]
            return (
                {"kappa": s["kappa"], "kappa_source": s["kappa_source"]},
                {"poincare_lambda": report.poincare_lambda, "failed_checks": failed},
                "sampled", "", 0,
            )

        return self._guard(state, "inequalities", "verify_ladder", body)

    def _bundle_node(self, state: ReportState) -> ReportState:
        state["stage_path"].append("bundle")
        state["bundle"] = {
            "chain": state.get("chain_summary"),
            "distance": state.get("distance"),
            "comparison": state.get("comparison"),
            "curvature": state.get("curvature"),
            "kappa": {"value": state.get("kappa"), "provenance": state.get("kappa_source")},
            "inequalities": state.get("inequalities"),
            "partial": state.get("status") == "failed",
            "errors": list(state.get("errors", [])),
            "stages": list(state["stage_path"]),
            "provenance": self.current_tracker.to_dict(include_timing=False),
        }
        return state

    # === ENTRY ===

    def run(
        self,
        chain: MarkovChain,
        rho0: np.ndarray,
        rho1: np.ndarray,
        representation: Optional[MappingRepresentation] = None,
    ) -> Tuple[Dict[str, Any], ProvenanceTracker]:
        """Returns (bundle, tracker); the bundle is flagged partial when a stage failed."""
        logger.info("==== report for %s ====", chain.name or f"{chain.n}-state chain")
        self.current_tracker = ProvenanceTracker()
        self.current_tracker.start_tracking()

        initial: ReportState = {
            "chain": chain,
            "representation": representation,
            "rho0": np.asarray(rho0, dtype=float),
            "rho1": np.asarray(rho1, dtype=float),
            "kappa": None,
            "kappa_source": None,
            "status": "ok",
            "errors": [],
            "stage_path": [],
        }
        final = self.workflow.invoke(initial)
        logger.info("stages: %s", " → ".join(final["stage_path"]))
        logger.debug("\n%s", self.current_tracker.get_summary())
        return final["bundle"], self.current_tracker
