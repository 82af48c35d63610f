"""Run report: one simulated scenario and everything written about it."""

import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from config import CSV_FLOAT_FORMAT
from cross_platform_utils import CrossPlatformFileOperations, CrossPlatformPaths
from pydantic_models import DiStats, Method, Partition, Scenario, WrStats, WrwStats
from trajectory import Trajectory


@dataclass
class RunReport:
    """Converged trajectory plus iteration counts, timings and the parallel-time metric."""

    scenario: Scenario
    method: Method
    trajectory: Trajectory
    partition: Optional[Partition] = None
    di_stats: Optional[DiStats] = None
    wr_stats: Optional[WrStats] = None
    wrw_stats: Optional[WrwStats] = None
    window_stats: List[WrStats] = field(default_factory=list)

    @property
    def iterations(self) -> Union[int, List[int]]:
        if self.wr_stats is not None:
            return self.wr_stats.iterations
        if self.wrw_stats is not None:
            return self.wrw_stats.iterations
        return len(self.di_stats.newton_iters) if self.di_stats else 0

    @property
    def solve_time(self) -> float:
        """DI wall clock or the WR/WRW parallel-time metric."""
        if self.wr_stats is not None:
            return self.wr_stats.parallel_time
        if self.wrw_stats is not None:
            return self.wrw_stats.parallel_time
        return self.di_stats.total_solve_time if self.di_stats else 0.0

    def metadata(self) -> Dict[str, Any]:
        """Deterministic run description; `scenario` re-parses into an equal Scenario."""
        data: Dict[str, Any] = {
            "scenario": self.scenario.model_dump(mode="json"),
            "method": self.method.value,
            "rows": self.trajectory.n_times,
            "machine": f"{platform.system()} {platform.machine()}, Python {platform.python_version()}",
        }
        if self.partition is not None:
            data["partition"] = self.partition.model_dump()
        if self.wr_stats is not None:
            data["iterations"] = self.wr_stats.iterations
            data["converged"] = self.wr_stats.converged
            data["residual"] = self.wr_stats.residual
        if self.wrw_stats is not None:
            data["windows"] = len(self.wrw_stats.windows)
            data["window_iterations"] = self.wrw_stats.iterations
        if self.di_stats is not None:
            data["newton_iterations"] = sum(self.di_stats.newton_iters)
        return data

    def timings(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"solve_time": self.solve_time}
        if self.di_stats is not None:
            data["total_solve_time"] = self.di_stats.total_solve_time
        if self.wr_stats is not None:
            data["parallel_time"] = self.wr_stats.parallel_time
            data["total_subsystem_time"] = self.wr_stats.total_time
        if self.wrw_stats is not None:
            data["parallel_time"] = self.wrw_stats.parallel_time
            data["average_window_time"] = self.wrw_stats.average_window_time
        return data

    def stats_frame(self) -> pd.DataFrame:
        if self.di_stats is not None:
            return pd.DataFrame({
                "step": range(1, len(self.di_stats.newton_iters) + 1),
                "newton_iterations": self.di_stats.newton_iters,
            })
        if self.wr_stats is not None:
            return _sweep_frame(self.wr_stats)
        frame = pd.DataFrame([
            {"window": r.window, "t_start": r.t_start, "t_end": r.t_end, "iterations": r.iterations}
            for r in self.wrw_stats.windows
        ])
        if len(self.window_stats) == len(frame):
            frame["final_delta"] = [stats.deltas[-1] for stats in self.window_stats]
        return frame

    def timing_frame(self) -> Optional[pd.DataFrame]:
        if self.wr_stats is not None:
            return _times_frame(self.wr_stats)
        if self.wrw_stats is not None:
            return pd.DataFrame([
                {"window": r.window, "parallel_time": r.parallel_time} for r in self.wrw_stats.windows
            ])
        return None

    def save(self, out_dir: Union[str, Path], omega_pu: bool = False) -> Path:
        """
        Write trajectory.csv, stats.csv and metadata.json (deterministic)
        next to timings.json and the per-sweep or per-window time log.
        """
        out_dir = CrossPlatformPaths.ensure_dir(out_dir)
        self.trajectory.to_frame(omega_pu=omega_pu).to_csv(
            out_dir / "trajectory.csv", index=False, float_format=CSV_FLOAT_FORMAT)
        self.stats_frame().to_csv(out_dir / "stats.csv", index=False, float_format=CSV_FLOAT_FORMAT)
        CrossPlatformFileOperations.write_json(out_dir / "metadata.json", self.metadata())
        CrossPlatformFileOperations.write_json(out_dir / "timings.json", self.timings())
        times = self.timing_frame()
        if times is not None:
            times.to_csv(out_dir / "times.csv", index=False, float_format=CSV_FLOAT_FORMAT)
        return out_dir


def _sweep_frame(stats: WrStats) -> pd.DataFrame:
    rows = []
    for k, delta in enumerate(stats.deltas):
        row = {
            "k": k + 1,
            "delta": delta,
            "state_delta": stats.state_deltas[k],
            "algebraic_delta": stats.algebraic_deltas[k],
        }
        for i, count in enumerate(stats.newton_iterations[k]):
            row[f"newton_{i + 1}"] = count
        rows.append(row)
    return pd.DataFrame(rows)


def _times_frame(stats: WrStats) -> pd.DataFrame:
    rows = []
    for k, times in enumerate(stats.subsystem_times):
        row = {"k": k + 1, "slowest": max(times) if times else 0.0}
        for i, elapsed in enumerate(times):
            row[f"subsystem_{i + 1}"] = elapsed
        rows.append(row)
    return pd.DataFrame(rows)
