"""Waveform relaxation run window by window, plus the horizon sweep."""

import asyncio
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import sys
from pathlib import Path

current_dir = Path(__file__).parent
backend_dir = current_dir.parent
sys.path.insert(0, str(backend_dir))

from config import VERBOSE
from cross_platform_utils import status
from errors import PlanMismatch, SimulationError, SolverError, WindowFailure
from grid_model import GridModel
from powerflow import InitialState, prepare_initial_state
from pydantic_models import (
    Partition, RelaxationMode, Scenario, WindowRecord, WrConfig, WrStats, WrwStats,
    is_multiple,
)
from solvers.direct_integration import simulate_di
from solvers.waveform_relaxation import WaveformRelaxationSolver, merge_wr_config, simulate_wr
from trajectory import Trajectory


@dataclass(frozen=True)
class WindowPlan:
    """Uniform windows over [0, T]; bounds are (start, end) in seconds."""
    t_win: float
    w_max: int
    steps_per_window: int
    bounds: Tuple[Tuple[float, float], ...]


def build_window_plan(T: float, h: float, t_win: float) -> WindowPlan:
    if T <= 0:
        raise PlanMismatch(f"horizon must be positive, got T={T}")
    if t_win <= 0 or not is_multiple(t_win, h):
        raise PlanMismatch(f"window length {t_win} is not a multiple of h={h}")
    if not is_multiple(T, t_win):
        raise PlanMismatch(f"T={T} is not a multiple of the window length {t_win}")
    w_max = int(round(T / t_win))
    steps = int(round(t_win / h))
    bounds = tuple((w * steps * h, (w + 1) * steps * h) for w in range(w_max))
    return WindowPlan(t_win=t_win, w_max=w_max, steps_per_window=steps, bounds=bounds)


class WindowedRelaxationSolver(WaveformRelaxationSolver):
    """Windows run in order; each starts from the final row of the one before."""

    label = "WRW"

    def __init__(self, grid: GridModel, scenario: Scenario, partition: Partition,
                 plan: Optional[WindowPlan] = None, wr: Optional[WrConfig] = None,
                 init: Optional[InitialState] = None):
        super().__init__(grid, scenario, partition, wr, init)
        self.plan = plan or build_window_plan(scenario.T, scenario.h, scenario.window_length)
        if self.plan.w_max * self.plan.steps_per_window != scenario.n_steps:
            raise PlanMismatch("window plan does not cover the scenario horizon")
        self.window_stats: List[WrStats] = []

    async def run_async(self) -> Tuple[Trajectory, WrwStats]:
        steps = self.plan.steps_per_window
        rows = [self.init.x0[None, :]]
        x_start = self.init.x0
        records: List[WindowRecord] = []
        self.window_stats = []

        for w in range(self.plan.w_max):
            loads = self.loads.window(w * steps, (w + 1) * steps)
            try:
                result = await self.relax_async(x_start, loads)
            except SolverError as exc:
                raise WindowFailure(w + 1, exc) from exc

            rows.append(result.x[1:])
            x_start = result.x[-1]
            t_start, t_end = self.plan.bounds[w]
            records.append(WindowRecord(
                window=w + 1, t_start=t_start, t_end=t_end,
                iterations=result.stats.iterations, parallel_time=result.stats.parallel_time,
            ))
            self.window_stats.append(result.stats)
            if VERBOSE:
                status("🪟", f"Window {w + 1}/{self.plan.w_max} [{t_start:.4g}, {t_end:.4g}] s: "
                             f"{result.stats.iterations} sweeps, {result.stats.parallel_time:.4f} s")

        stats = WrwStats(windows=records, parallel_time=float(sum(r.parallel_time for r in records)))
        return self.to_trajectory(np.vstack(rows)), stats

    def run(self) -> Tuple[Trajectory, WrwStats]:
        return asyncio.run(self.run_async())


def simulate_wrw(
    grid: GridModel,
    scenario: Scenario,
    partition: Partition,
    window_plan: Optional[WindowPlan] = None,
    mode: Optional[RelaxationMode] = None,
    eps: Optional[float] = None,
    k_max: Optional[int] = None,
    init: Optional[InitialState] = None,
) -> Tuple[Trajectory, WrwStats]:
    wr = merge_wr_config(scenario.wr, mode, eps, k_max)
    return WindowedRelaxationSolver(grid, scenario, partition, window_plan, wr, init).run()


def scenario_for_horizon(scenario: Scenario, T: float) -> Scenario:
    """Copy of scenario cut to horizon T; events past T are dropped or clipped."""
    if T <= 0 or not is_multiple(T, scenario.h):
        raise PlanMismatch(f"horizon {T} is not a positive multiple of h={scenario.h}")
    disturbances = [
        d.model_copy(update={"t_end": min(d.t_end, T)}).model_dump()
        for d in scenario.disturbances
        if d.t_start < T
    ]
    data = scenario.model_dump()
    data.update(T=T, disturbances=disturbances)
    if data.get("t_win") is not None and not is_multiple(T, data["t_win"]):
        data["t_win"] = scenario.h
    return Scenario(**data)


def sweep_horizon(
    grid: GridModel,
    scenario_base: Scenario,
    partition: Partition,
    horizons: Sequence[float],
    init: Optional[InitialState] = None,
) -> pd.DataFrame:
    """
    Solve time of every method per horizon. WR and WRW report the
    parallel-time metric, DI the stepping wall clock. Failed cells hold
    "failed: <ExceptionName>".
    """
    scenarios = [scenario_for_horizon(scenario_base, float(T)) for T in horizons]
    init = init or prepare_initial_state(grid)

    rows = []
    for scenario in scenarios:
        row = {"T": scenario.T}
        cells = (
            ("di_time", lambda: simulate_di(grid, scenario, init)[1].total_solve_time),
            ("wr_time", lambda: simulate_wr(grid, scenario, partition, init=init)[1].parallel_time),
            ("wrw_time", lambda: simulate_wrw(grid, scenario, partition, init=init)[1].parallel_time),
        )
        for column, solve in cells:
            try:
                row[column] = solve()
            except SimulationError as exc:
                row[column] = f"failed: {type(exc).__name__}"
                status("❌", f"Horizon {scenario.T} s, {column}: {exc}")
        status("⏱️", f"Horizon {scenario.T:g} s done")
        rows.append(row)
    return pd.DataFrame(rows, columns=["T", "wr_time", "wrw_time", "di_time"])
