"""
Configuration models.

Defaults live in code; `.env.local` and `.env` may override the worker
count through ENTROPIC_RICCI_THREADS. All models are frozen so a config
can be shared between threads.
"""

import os
from typing import List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator


load_dotenv(".env.local")
load_dotenv()

THREADS_ENV = "ENTROPIC_RICCI_THREADS"
DEFAULT_SEED = 42


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class Tolerances(_Frozen):
    """Numerical slack for the chain invariants."""

    row_sum: float = Field(1e-12, gt=0)
    pi_sum: float = Field(1e-12, gt=0)
    detailed_balance: float = Field(1e-10, gt=0)
    density_mass: float = Field(1e-10, gt=0)
    # entries below this are treated as structural zeros of the kernel
    structural_zero: float = Field(1e-15, ge=0)
    generator: float = Field(1e-12, gt=0)


class SolverConfig(_Frozen):
    """Settings for the time-discretised transport problem."""

    grid: int = Field(32, ge=2)
    tol: float = Field(1e-7, gt=0)
    max_iter: int = Field(200000, ge=1)
    newton_max_iter: int = Field(400, ge=1)
    method: Literal["newton", "pdhg"] = "newton"
    refine: bool = True
    barrier_start: float = Field(1e-2, gt=0)
    barrier_final: float = Field(1e-12, gt=0)
    barrier_factor: float = Field(0.05, gt=0, lt=1)
    check_every: int = Field(50, ge=1)

    def coarse(self) -> "SolverConfig":
        """Same settings on the half grid, without a further refinement pass."""
        return self.model_copy(update={"grid": max(2, self.grid // 2), "refine": False})


class CurvatureConfig(_Frozen):
    restarts: int = Field(64, ge=1)
    samples: int = Field(100000, ge=0)
    floor: float = Field(1e-6, gt=0, lt=1)
    seed: int = DEFAULT_SEED
    batch: int = Field(4096, ge=1)
    max_iter: int = Field(500, ge=1)
    debug: bool = False


class GeodesicConfig(_Frozen):
    steps_per_unit: int = Field(1000, ge=1)
    floor: float = Field(1e-10, gt=0)
    shoot_tol: float = Field(1e-8, gt=0)
    shoot_max_nfev: int = Field(200, ge=1)


class LadderConfig(_Frozen):
    densities: int = Field(2000, ge=1)
    lipschitz: int = Field(200, ge=0)
    transport_samples: int = Field(16, ge=0)
    subgaussian_t: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    evi_times: List[float] = Field(default_factory=lambda: [0.0, 0.05, 0.2])
    evi_steps: List[float] = Field(default_factory=lambda: [1e-3, 1e-4])
    speed_times: List[float] = Field(default_factory=lambda: [0.05, 0.2])
    speed_step: float = Field(1e-3, gt=0)
    contraction_times: List[float] = Field(default_factory=lambda: [0.1, 0.5])
    mlsi_entropy_floor: float = Field(1e-8, ge=0)
    seed: int = DEFAULT_SEED

    @field_validator("subgaussian_t", "evi_steps")
    @classmethod
    def _positive(cls, values: List[float]) -> List[float]:
        if any(v <= 0 for v in values):
            raise ValueError("values must be positive")
        return values


def worker_count(override: Optional[int] = None) -> int:
    """Worker cap: explicit override, else ENTROPIC_RICCI_THREADS, else 1."""
    if override is not None:
        return max(1, int(override))
    raw = os.getenv(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
