"""Base class for the time-domain simulation methods."""

from typing import Any, Optional, Tuple

import numpy as np

import sys
from pathlib import Path

# Add parent directory to path to import backend modules using pathlib
current_dir = Path(__file__).parent
backend_dir = current_dir.parent
sys.path.insert(0, str(backend_dir))

from dae_core import BlockResult, UnknownIndexMap, integrate_block, residual_series
from grid_model import GridModel, LoadSchedule, load_schedule, snap_disturbances, time_grid
from powerflow import InitialState, prepare_initial_state
from pydantic_models import Scenario
from trajectory import Trajectory


class BaseSolver:
    """
    Shared setup for every method: initial operating point, time grid and
    the load schedule with snapped disturbances.
    """

    label = "base"

    def __init__(self, grid: GridModel, scenario: Scenario, init: Optional[InitialState] = None):
        self.scenario = scenario
        self.init = init or prepare_initial_state(grid)
        self.grid = self.init.grid
        self.imap = self.init.imap
        self.h = scenario.h
        self.newton = scenario.newton
        self.times = time_grid(scenario.h, scenario.n_steps)
        disturbances = snap_disturbances(scenario.disturbances, scenario.h)
        self.loads = load_schedule(self.grid, disturbances, self.times)

    def integrate(self, imap: UnknownIndexMap, x0: np.ndarray, loads: LoadSchedule,
                  external: Optional[np.ndarray] = None) -> BlockResult:
        """Backward Euler + Newton over the rows of loads for one bus set."""
        return integrate_block(self.grid, imap, x0, loads, self.h, self.newton, external)

    def residual_rows(self, x_rows: np.ndarray, loads: Optional[LoadSchedule] = None) -> np.ndarray:
        """Whole-grid step residual norm per row; loads defaults to the full horizon."""
        return residual_series(self.grid, self.imap, x_rows, loads or self.loads, self.h)

    def to_trajectory(self, x_rows: np.ndarray) -> Trajectory:
        return Trajectory.from_unknowns(self.grid, self.imap, x_rows, self.loads)

    def run(self) -> Tuple[Trajectory, Any]:
        """Simulate the whole horizon; returns the trajectory and method statistics."""
        raise NotImplementedError  # Override in subclasses
