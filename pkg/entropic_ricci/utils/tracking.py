"""
Provenance Tracking
Records which stage produced each number, how it was obtained and how long it took
"""

import time
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional

Provenance = Literal["certified", "estimated", "sampled", "exact-spectral", "exact", "input"]


@dataclass
class PipelineStep:
    """A single stage execution in the report pipeline"""
    stage: str
    action: str
    input_data: Dict[str, Any]
    output_data: Dict[str, Any]
    provenance: Provenance
    note: str
    duration_ms: float
    success: bool
    error: Optional[str] = None


@dataclass
class PipelineMetrics:
    """Aggregate metrics for a pipeline run"""
    total_duration_ms: float
    solver_calls: int
    steps_count: int = 0
    success: bool = True
    error: Optional[str] = None


class ProvenanceTracker:
    """Tracks the stages of a run and the provenance of their outputs"""

    def __init__(self):
        self.steps: List[PipelineStep] = []
        self.start_time: float = 0.0
        self.solver_calls: int = 0

    def start_tracking(self):
        """Start tracking a new run"""
        self.steps = []
        self.start_time = time.perf_counter()
        self.solver_calls = 0

    def add_step(
        self,
        stage: str,
        action: str,
        input_data: Dict[str, Any],
        output_data: Dict[str, Any],
        provenance: Provenance,
        note: str = "",
        duration_ms: float = 0.0,
        success: bool = True,
        error: Optional[str] = None,
        solver_calls: int = 0,
    ):
        """Add a stage record"""
        self.steps.append(PipelineStep(
            stage=stage,
            action=action,
            input_data=input_data,
            output_data=output_data,
            provenance=provenance,
            note=note,
            duration_ms=duration_ms,
            success=success,
            error=error,
        ))
        self.solver_calls += solver_calls

    def get_metrics(self) -> PipelineMetrics:
        total_duration = (time.perf_counter() - self.start_time) * 1000
        failed = [step for step in self.steps if not step.success]
        return PipelineMetrics(
            total_duration_ms=round(total_duration, 2),
            solver_calls=self.solver_calls,
            steps_count=len(self.steps),
            success=not failed,
            error=failed[0].error if failed else None,
        )

    def get_summary(self) -> str:
        """Human-readable summary for the log"""
        lines = []
        for i, step in enumerate(self.steps, 1):
            status = "ok" if step.success else "FAILED"
            lines.append(f"{i}. {step.stage}/{step.action} [{step.provenance}] {status} ({step.duration_ms:.0f}ms)")
            if step.note:
                lines.append(f"   {step.note}")
            if step.error:
                lines.append(f"   error: {step.error}")
        metrics = self.get_metrics()
        lines.append(f"total {metrics.total_duration_ms:.0f}ms | solver calls: {metrics.solver_calls}")
        return "\n".join(lines)

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        """Serializable record; wall-clock fields only on request so artifacts stay reproducible"""
        steps = []
        for step in self.steps:
            entry = {
                "stage": step.stage,
                "action": step.action,
                "provenance": step.provenance,
                "note": step.note,
                "success": step.success,
                "error": step.error,
                "input": step.input_data,
                "output": step.output_data,
            }
            if include_timing:
                entry["duration_ms"] = step.duration_ms
            steps.append(entry)
        out: Dict[str, Any] = {"steps": steps, "solver_calls": self.solver_calls}
        if include_timing:
            out["total_duration_ms"] = self.get_metrics().total_duration_ms
        return out

