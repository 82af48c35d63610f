"""Pydantic models for network data, solver settings, scenarios and reports."""

import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from config import (
    NEWTON_DAMPING, NEWTON_MAX_HALVINGS, NEWTON_MAX_ITER, NEWTON_TOL,
    OMEGA_S, TIME_SNAP_TOL, WR_DIVERGENCE_LIMIT, WR_EPS, WR_K_MAX, WR_WORKERS,
)


class BusKind(str, Enum):
    SLACK = "slack"
    GENERATOR = "generator"
    LOAD = "load"


class Bus(BaseModel):
    """Network bus with its base-case load and initial voltage."""
    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=1, description="Bus number, 1-based")
    kind: BusKind = Field(description="Slack, generator or load bus")
    v0: float = Field(default=1.0, gt=0, description="Initial voltage magnitude in pu")
    delta0: float = Field(default=0.0, description="Initial voltage angle in radians")
    p_load: float = Field(default=0.0, description="Active load in pu")
    q_load: float = Field(default=0.0, description="Reactive load in pu")

    @field_validator("kind", mode="before")
    @classmethod
    def _normalize_kind(cls, value):
        return value.lower() if isinstance(value, str) else value


class Branch(BaseModel):
    """Pi-model line or transformer; the tap sits on the from side."""
    model_config = ConfigDict(frozen=True)

    from_bus: int = Field(description="From bus id")
    to_bus: int = Field(description="To bus id")
    r: float = Field(default=0.0, description="Series resistance in pu")
    x: float = Field(default=0.0, description="Series reactance in pu")
    b_charging: float = Field(default=0.0, description="Total line-charging susceptance in pu")
    tap: float = Field(default=1.0, description="Off-nominal turns ratio")

    @field_validator("tap", mode="before")
    @classmethod
    def _default_tap(cls, value):
        # 0 means no transformer in the usual case files
        if value is None or value == 0:
            return 1.0
        return value

    @model_validator(mode="after")
    def _check_ends(self):
        if self.from_bus == self.to_bus:
            raise ValueError(f"branch {self.from_bus}-{self.to_bus} connects a bus to itself")
        if self.tap <= 0:
            raise ValueError(f"branch {self.from_bus}-{self.to_bus} has non-positive tap {self.tap}")
        return self


class Generator(BaseModel):
    """Classical machine at a generator or slack bus."""
    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=1, description="Generator number")
    bus: int = Field(description="Bus id of a generator or slack bus")
    h_inertia: float = Field(gt=0, description="Inertia constant H in seconds")
    omega_s: float = Field(default=OMEGA_S, gt=0, description="Synchronous speed in rad/s")
    p_sched: float = Field(default=0.0, description="Dispatched active power for the power flow, pu")
    p_mech: float = Field(default=0.0, description="Mechanical input power, set at initialization, pu")

    @computed_field
    @property
    def m_coeff(self) -> float:
        return 2.0 * self.h_inertia / self.omega_s


class DisturbanceAction(str, Enum):
    DISCONNECT_LOAD = "disconnect_load"
    SCALE_LOAD = "scale_load"


_ACTION_ALIASES = {
    "disconnectload": DisturbanceAction.DISCONNECT_LOAD,
    "disconnect": DisturbanceAction.DISCONNECT_LOAD,
    "scaleload": DisturbanceAction.SCALE_LOAD,
    "scale": DisturbanceAction.SCALE_LOAD,
}


class Disturbance(BaseModel):
    """Load event active on the half-open interval [t_start, t_end)."""
    model_config = ConfigDict(frozen=True)

    t_start: float = Field(ge=0, description="Start time in seconds")
    t_end: float = Field(description="End time in seconds (exclusive)")
    bus: int = Field(description="Bus id carrying the load")
    action: DisturbanceAction = Field(description="Disconnect or scale the load")
    factor: Optional[float] = Field(default=None, description="Scale factor for scale_load")

    @field_validator("action", mode="before")
    @classmethod
    def _normalize_action(cls, value):
        if isinstance(value, str):
            key = value.replace("_", "").replace("-", "").lower()
            return _ACTION_ALIASES.get(key, value)
        return value

    @model_validator(mode="after")
    def _check_interval(self):
        if not self.t_start < self.t_end:
            raise ValueError(f"disturbance at bus {self.bus}: t_start must be before t_end")
        if self.action == DisturbanceAction.SCALE_LOAD:
            if self.factor is None or self.factor <= 0:
                raise ValueError(f"disturbance at bus {self.bus}: scale_load needs a positive factor")
        return self

    def active_at(self, t: float, tol: float = TIME_SNAP_TOL) -> bool:
        return self.t_start - tol <= t < self.t_end - tol


class Partition(BaseModel):
    """Ordered grouping of buses into subsystems."""
    subsystems: List[List[int]] = Field(min_length=1, description="Bus ids per subsystem")
    name: str = Field(default="custom", description="Preset name or 'custom'")

    @property
    def p(self) -> int:
        return len(self.subsystems)


class PartitionViolation(BaseModel):
    kind: Literal["duplicate", "missing", "unknown"] = Field(description="Violation type")
    bus: int = Field(description="Offending bus id")
    subsystem: Optional[int] = Field(default=None, description="Subsystem index, 0-based")

    def __str__(self) -> str:
        where = f" (subsystem {self.subsystem + 1})" if self.subsystem is not None else ""
        return f"{self.kind} bus {self.bus}{where}"


class NewtonConfig(BaseModel):
    """Damped Newton-Raphson settings."""
    tol: float = Field(default=NEWTON_TOL, gt=0, description="Residual infinity-norm threshold")
    max_iter: int = Field(default=NEWTON_MAX_ITER, ge=1, description="Maximum Newton iterations")
    damping: float = Field(default=NEWTON_DAMPING, gt=0, le=1, description="Initial step factor")
    max_halvings: int = Field(default=NEWTON_MAX_HALVINGS, ge=0, description="Step halvings per iteration")


class RelaxationMode(str, Enum):
    JACOBI = "jacobi"
    SEIDEL = "seidel"


class Method(str, Enum):
    DI = "di"
    WR = "wr"
    WRW = "wrw"


class WrConfig(BaseModel):
    """Waveform relaxation settings, shared by plain and windowed runs."""
    eps: float = Field(default=WR_EPS, gt=0, description="Waveform delta threshold (infinity norm)")
    k_max: int = Field(default=WR_K_MAX, ge=1, description="Maximum relaxation sweeps")
    mode: RelaxationMode = Field(default=RelaxationMode.JACOBI, description="Jacobi or Seidel sweeps")
    workers: Optional[int] = Field(default=WR_WORKERS, ge=1,
                                   description="Concurrent subsystem workers in Jacobi mode; one per subsystem when empty")
    residual_tol: Optional[float] = Field(default=None, gt=0,
                                          description="Whole-grid step residual bound at convergence; eps when empty")
    divergence_limit: float = Field(default=WR_DIVERGENCE_LIMIT, gt=0,
                                    description="Growing sweep delta above this is reported as divergence")

    @property
    def residual_bound(self) -> float:
        return self.residual_tol if self.residual_tol is not None else self.eps


def is_multiple(value: float, step: float) -> bool:
    ratio = value / step
    return abs(ratio - round(ratio)) <= 1e-9 * max(1.0, abs(ratio))


class Scenario(BaseModel):
    """One simulation run: time grid, events, method and solver settings."""
    name: str = Field(default="scenario", description="Scenario label")
    network: Optional[str] = Field(default=None, description="Network JSON path; bundled 39-bus when empty")
    h: float = Field(gt=0, description="Step size in seconds")
    T: float = Field(gt=0, description="Horizon in seconds")
    disturbances: List[Disturbance] = Field(default_factory=list, description="Load events")
    method: Method = Field(default=Method.DI, description="di, wr or wrw")
    partition: Union[str, List[List[int]]] = Field(default="table2-3", description="Preset name or bus lists")
    t_win: Optional[float] = Field(default=None, description="Window length for wrw, seconds")
    newton: NewtonConfig = Field(default_factory=NewtonConfig, description="Newton settings")
    wr: WrConfig = Field(default_factory=WrConfig, description="Relaxation settings")
    slack_bus: Optional[int] = Field(default=None, description="Slack override; dataset slack when empty")
    omega_s: float = Field(default=OMEGA_S, gt=0, description="Synchronous speed in rad/s")

    @model_validator(mode="after")
    def _check_grid(self):
        if not is_multiple(self.T, self.h):
            raise ValueError(f"T/h not integral (T={self.T}, h={self.h})")
        for disturbance in self.disturbances:
            if disturbance.t_end > self.T + TIME_SNAP_TOL:
                raise ValueError(f"disturbance at bus {disturbance.bus} ends after T={self.T}")
        if self.method == Method.WRW:
            t_win = self.t_win if self.t_win is not None else self.h
            if not is_multiple(t_win, self.h):
                raise ValueError(f"window length {t_win} is not a multiple of h={self.h}")
            if not is_multiple(self.T, t_win):
                raise ValueError(f"T={self.T} is not a multiple of the window length {t_win}")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.h))

    @property
    def window_length(self) -> float:
        return self.t_win if self.t_win is not None else self.h


class PowerFlowSolution(BaseModel):
    """Static operating point; generator quantities follow grid.generators order."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    v: np.ndarray = Field(description="Bus voltage magnitudes in pu")
    delta: np.ndarray = Field(description="Bus voltage angles in radians")
    pe: np.ndarray = Field(description="Generator active power in pu")
    qe: np.ndarray = Field(description="Generator reactive power in pu")
    converged: bool = Field(description="Whether the mismatch met the tolerance")
    iterations: int = Field(description="Newton iterations used")
    mismatch: float = Field(default=math.nan, description="Final mismatch infinity norm")


class VariableErrorStats(BaseModel):
    """Percent-error statistics of one variable over the time grid."""
    variable: str = Field(description="Variable selector, e.g. delta_7")
    min: float = Field(description="Minimum signed percent error")
    max: float = Field(description="Maximum signed percent error")
    average: float = Field(description="Average signed percent error")
    included: int = Field(description="Samples used")
    excluded: int = Field(description="Samples with near-zero reference")
    absolute_error: List[float] = Field(default_factory=list, description="Absolute error series")


class ErrorReport(BaseModel):
    label: str = Field(default="", description="Method label, e.g. WR or WRW")
    variables: Dict[str, VariableErrorStats] = Field(default_factory=dict)


class WrStats(BaseModel):
    """Iteration counts and timings of one relaxation run (or one window)."""
    iterations: int = Field(description="Relaxation sweeps performed")
    subsystem_times: List[List[float]] = Field(description="Per-sweep, per-subsystem solve seconds")
    parallel_time: float = Field(description="Sum over sweeps of the slowest subsystem")
    converged: bool = Field(description="Whether the waveform delta met eps")
    deltas: List[float] = Field(default_factory=list, description="Combined waveform delta per sweep")
    state_deltas: List[float] = Field(default_factory=list, description="Rotor angle/speed delta per sweep")
    algebraic_deltas: List[float] = Field(default_factory=list, description="Bus voltage delta per sweep")
    newton_iterations: List[List[int]] = Field(default_factory=list, description="Inner Newton iterations")
    residual: float = Field(default=0.0, description="Largest whole-grid step residual, checked once the delta met eps; inf before")

    @classmethod
    def from_sweeps(cls, subsystem_times: List[List[float]], **kwargs: Any) -> "WrStats":
        parallel_time = float(sum(max(row) if row else 0.0 for row in subsystem_times))
        return cls(
            iterations=len(subsystem_times),
            subsystem_times=subsystem_times,
            parallel_time=parallel_time,
            **kwargs,
        )

    @property
    def total_time(self) -> float:
        return float(sum(sum(row) for row in self.subsystem_times))


class WindowRecord(BaseModel):
    window: int = Field(description="Window number, 1-based")
    t_start: float = Field(description="Window start in seconds")
    t_end: float = Field(description="Window end in seconds")
    iterations: int = Field(description="Relaxation sweeps in this window")
    parallel_time: float = Field(description="Parallel-time metric for this window")


class WrwStats(BaseModel):
    windows: List[WindowRecord] = Field(default_factory=list)
    parallel_time: float = Field(default=0.0, description="Parallel-time metric summed over windows")
    converged: bool = Field(default=True)

    @property
    def iterations(self) -> List[int]:
        return [record.iterations for record in self.windows]

    @property
    def average_window_time(self) -> float:
        if not self.windows:
            return 0.0
        return self.parallel_time / len(self.windows)


class DiStats(BaseModel):
    total_solve_time: float = Field(description="Wall-clock seconds of the stepping loop")
    newton_iters: List[int] = Field(default_factory=list, description="Newton iterations per step")
