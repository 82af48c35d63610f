"""
Waveform relaxation over a time interval.

Every sweep solves each subsystem over the whole interval with the buses
outside it frozen at an earlier iterate: the previous sweep for Jacobi,
the newest available values for Seidel. Sweeps repeat until no unknown
moves by more than eps at any time point and the stitched rows solve
the whole-grid step equations.
"""

import asyncio
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

import sys
from pathlib import Path

current_dir = Path(__file__).parent
backend_dir = current_dir.parent
sys.path.insert(0, str(backend_dir))

from config import GRID_TOL, VERBOSE
from cross_platform_utils import status
from dae_core import BlockResult, UnknownIndexMap
from errors import ConfigError, GridMismatch, StepFailure, WrDivergence
from grid_model import GridModel, LoadSchedule, validate_partition
from powerflow import InitialState
from pydantic_models import Partition, RelaxationMode, Scenario, WrConfig, WrStats
from solvers.base_solver import BaseSolver
from trajectory import Trajectory


@dataclass
class WaveformSet:
    """Per-subsystem unknown rows on a shared time grid, tagged with the sweep number."""
    times: np.ndarray
    waveforms: List[np.ndarray]
    iteration: int = 0


def waveform_delta(prev: WaveformSet, next: WaveformSet) -> float:
    """Infinity norm of the change over every subsystem, variable and time point."""
    if len(prev.times) != len(next.times) or np.max(np.abs(prev.times - next.times), initial=0.0) > GRID_TOL:
        raise GridMismatch("waveform sets do not share a time grid")
    if len(prev.waveforms) != len(next.waveforms):
        raise GridMismatch("waveform sets come from different partitions")

    delta = 0.0
    for old, new in zip(prev.waveforms, next.waveforms):
        if old.shape != new.shape:
            raise GridMismatch("waveform shapes differ")
        if old.size:
            delta = max(delta, float(np.max(np.abs(new - old))))
    return delta


@dataclass
class RelaxResult:
    x: np.ndarray
    stats: WrStats


class WaveformRelaxationSolver(BaseSolver):
    """Gauss-Jacobi or Gauss-Seidel relaxation on a bus partition."""

    label = "WR"

    def __init__(self, grid: GridModel, scenario: Scenario, partition: Partition,
                 wr: Optional[WrConfig] = None, init: Optional[InitialState] = None):
        super().__init__(grid, scenario, init)
        violations = validate_partition(partition, self.grid.buses)
        if violations:
            raise ConfigError("invalid partition: " + "; ".join(str(v) for v in violations))
        self.partition = partition
        self.wr = wr or scenario.wr
        self.sub_maps = [UnknownIndexMap.build(self.grid, buses) for buses in partition.subsystems]
        self.state_cols = self.imap.state_loc
        self.algebraic_cols = self.imap.algebraic_loc

    @property
    def workers(self) -> int:
        """Jacobi worker count; one per subsystem unless configured."""
        return self.wr.workers or self.partition.p

    def _sweep(self, index: int, source: np.ndarray, loads: LoadSchedule) -> Tuple[BlockResult, float]:
        """Solve one subsystem over the interval against frozen rows of source."""
        imap = self.sub_maps[index]
        start = time.perf_counter()
        block = self.integrate(imap, source[0, imap.full_idx], loads, external=source)
        return block, time.perf_counter() - start

    async def _jacobi_sweep(self, current: np.ndarray, loads: LoadSchedule) -> List[Tuple[BlockResult, float]]:
        semaphore = asyncio.Semaphore(self.workers)

        async def run_one(index: int):
            async with semaphore:
                return await asyncio.to_thread(self._sweep, index, current, loads)

        return await asyncio.gather(*[run_one(i) for i in range(self.partition.p)])

    def _seidel_sweep(self, working: np.ndarray, loads: LoadSchedule) -> List[Tuple[BlockResult, float]]:
        results = []
        for index, imap in enumerate(self.sub_maps):
            block, elapsed = self._sweep(index, working, loads)
            working[:, imap.full_idx] = block.x
            results.append((block, elapsed))
        return results

    async def relax_async(self, x0: np.ndarray, loads: LoadSchedule) -> RelaxResult:
        """
        Relax on the rows of loads starting from x0 (whole-grid unknowns).

        The initial iterate is x0 held constant over the interval; row 0
        keeps x0 at every sweep. Sweeps stop once the waveform delta is at
        most eps and the whole-grid step residual is at most the residual
        bound. A failed inner Newton solve after the first sweep, or a delta
        that keeps growing past the divergence limit, raises WrDivergence.
        """
        current = np.tile(np.asarray(x0, dtype=float), (len(loads.times), 1))
        waves = WaveformSet(loads.times, [current[:, m.full_idx].copy() for m in self.sub_maps], 0)

        sweep_times: List[List[float]] = []
        newton_counts: List[List[int]] = []
        deltas: List[float] = []
        state_deltas: List[float] = []
        algebraic_deltas: List[float] = []
        residual = float("inf")

        def collect(converged: bool) -> WrStats:
            return WrStats.from_sweeps(
                sweep_times,
                converged=converged,
                deltas=deltas,
                state_deltas=state_deltas,
                algebraic_deltas=algebraic_deltas,
                newton_iterations=newton_counts,
                residual=residual,
            )

        for k in range(1, self.wr.k_max + 1):
            try:
                if self.wr.mode == RelaxationMode.JACOBI:
                    results = await self._jacobi_sweep(current, loads)
                    following = current.copy()
                    for imap, (block, _) in zip(self.sub_maps, results):
                        following[:, imap.full_idx] = block.x
                else:
                    following = current.copy()
                    results = self._seidel_sweep(following, loads)
            except StepFailure as exc:
                if k == 1:
                    raise
                raise WrDivergence(k - 1, deltas[-1], collect(False),
                                   reason=f"sweep {k} left the Newton basin ({exc})") from exc

            next_waves = WaveformSet(loads.times, [block.x for block, _ in results], k)
            delta = waveform_delta(waves, next_waves)
            change = np.abs(following - current)
            state_deltas.append(float(change[:, self.state_cols].max(initial=0.0)))
            algebraic_deltas.append(float(change[:, self.algebraic_cols].max(initial=0.0)))
            deltas.append(delta)
            sweep_times.append([elapsed for _, elapsed in results])
            newton_counts.append([sum(block.newton_iters) for block, _ in results])

            current, waves = following, next_waves
            if delta <= self.wr.eps:
                residual = float(self.residual_rows(current, loads).max(initial=0.0))

            if VERBOSE:
                times = ", ".join(f"{t:.4f}" for t in sweep_times[-1])
                status("🔄", f"{self.label} sweep {k}: delta {delta:.3e} | subsystem times [{times}] s")

            if delta <= self.wr.eps and residual <= self.wr.residual_bound:
                break
            if k > 1 and delta > self.wr.divergence_limit and delta > deltas[-2]:
                raise WrDivergence(k, delta, collect(False),
                                   reason=f"delta grew past {self.wr.divergence_limit:g}")

        converged = deltas[-1] <= self.wr.eps and residual <= self.wr.residual_bound
        stats = collect(converged)
        if not converged:
            raise WrDivergence(self.wr.k_max, deltas[-1], stats)
        return RelaxResult(x=current, stats=stats)

    async def run_async(self) -> Tuple[Trajectory, WrStats]:
        result = await self.relax_async(self.init.x0, self.loads)
        return self.to_trajectory(result.x), result.stats

    def run(self) -> Tuple[Trajectory, WrStats]:
        return asyncio.run(self.run_async())


def simulate_wr(
    grid: GridModel,
    scenario: Scenario,
    partition: Partition,
    mode: Optional[RelaxationMode] = None,
    eps: Optional[float] = None,
    k_max: Optional[int] = None,
    init: Optional[InitialState] = None,
) -> Tuple[Trajectory, WrStats]:
    """Relaxation over the whole horizon; unset settings come from scenario.wr."""
    wr = merge_wr_config(scenario.wr, mode, eps, k_max)
    return WaveformRelaxationSolver(grid, scenario, partition, wr, init).run()


def merge_wr_config(base: WrConfig, mode: Optional[RelaxationMode], eps: Optional[float],
                    k_max: Optional[int]) -> WrConfig:
    update = {}
    if mode is not None:
        update["mode"] = RelaxationMode(mode)
    if eps is not None:
        update["eps"] = eps
    if k_max is not None:
        update["k_max"] = k_max
    return WrConfig(**{**base.model_dump(), **update})
