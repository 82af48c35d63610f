"""Direct Integration: one whole-grid Newton solve per Backward Euler step."""

import time
from typing import Optional, Tuple

import sys
from pathlib import Path

current_dir = Path(__file__).parent
backend_dir = current_dir.parent
sys.path.insert(0, str(backend_dir))

from config import VERBOSE
from cross_platform_utils import status
from grid_model import GridModel
from powerflow import InitialState
from pydantic_models import DiStats, Scenario
from solvers.base_solver import BaseSolver
from trajectory import Trajectory


class DirectIntegrationSolver(BaseSolver):
    """Sequential reference method."""

    label = "DI"

    def run(self) -> Tuple[Trajectory, DiStats]:
        start = time.perf_counter()
        block = self.integrate(self.imap, self.init.x0, self.loads)
        elapsed = time.perf_counter() - start

        if VERBOSE:
            status("⏱️", f"DI: {len(block.newton_iters)} steps in {elapsed:.3f} s")
        return self.to_trajectory(block.x), DiStats(total_solve_time=elapsed, newton_iters=block.newton_iters)


def simulate_di(grid: GridModel, scenario: Scenario, init: Optional[InitialState] = None) -> Tuple[Trajectory, DiStats]:
    return DirectIntegrationSolver(grid, scenario, init).run()
