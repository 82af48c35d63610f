"""Time-indexed simulation results."""

from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd

from config import GRID_TOL
from dae_core import UnknownIndexMap, bus_voltages, network_losses_series, recover_outputs
from errors import GridMismatch, UnknownGenerator
from grid_model import GridModel, LoadSchedule


@dataclass
class Trajectory:
    """
    States and algebraic values at every grid time.

    delta/omega columns follow `dynamic_ids` (machines at generator buses);
    pe/qe columns follow `generator_ids` (every machine, slack included);
    v/theta columns follow `bus_ids`. `x` keeps the raw unknown rows.
    """
    times: np.ndarray
    x: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    pe: np.ndarray
    qe: np.ndarray
    dynamic_ids: List[int]
    generator_ids: List[int]
    bus_ids: List[int]
    slack_generator: int
    slack_angle: float
    omega_s: float

    @classmethod
    def from_unknowns(cls, grid: GridModel, imap: UnknownIndexMap, x_rows: np.ndarray,
                      loads: LoadSchedule) -> "Trajectory":
        x_rows = np.asarray(x_rows, dtype=float)
        v_rows = np.empty((len(x_rows), grid.n_bus))
        theta_rows = np.empty_like(v_rows)
        pe_rows = np.empty((len(x_rows), len(grid.generators)))
        qe_rows = np.empty_like(pe_rows)
        for k, x in enumerate(x_rows):
            v_rows[k], theta_rows[k] = bus_voltages(grid, imap, x)
            pe_rows[k], qe_rows[k] = recover_outputs(grid, v_rows[k], theta_rows[k], loads.p[k], loads.q[k])

        slack = grid.slack_bus
        slack_gen = grid.generator_at(slack.id)
        return cls(
            times=np.asarray(loads.times, dtype=float),
            x=x_rows,
            delta=x_rows[:, imap.delta_loc],
            omega=x_rows[:, imap.omega_loc],
            v=v_rows,
            theta=theta_rows,
            pe=pe_rows,
            qe=qe_rows,
            dynamic_ids=[gen.id for gen in grid.dynamic_generators],
            generator_ids=[gen.id for gen in grid.generators],
            bus_ids=[bus.id for bus in grid.buses],
            slack_generator=slack_gen.id if slack_gen is not None else -1,
            slack_angle=slack.delta0,
            omega_s=grid.omega_s,
        )

    @property
    def n_times(self) -> int:
        return len(self.times)

    def _generator_column(self, ids: List[int], generator: int) -> int:
        if generator not in ids:
            raise UnknownGenerator(generator)
        return ids.index(generator)

    def series(self, selector: str) -> np.ndarray:
        """Column by name: delta_<gen>, omega_<gen>, pe_<gen>, qe_<gen>, v_<bus>, theta_<bus>."""
        name, _, number = selector.rpartition("_")
        if not number.isdigit():
            raise ValueError(f"bad variable selector '{selector}'")
        number = int(number)

        if name in ("delta", "omega"):
            if number == self.slack_generator:
                value = self.slack_angle if name == "delta" else self.omega_s
                return np.full(self.n_times, value)
            column = self._generator_column(self.dynamic_ids, number)
            return (self.delta if name == "delta" else self.omega)[:, column]
        if name in ("pe", "qe"):
            column = self._generator_column(self.generator_ids, number)
            return (self.pe if name == "pe" else self.qe)[:, column]
        if name in ("v", "theta"):
            if number not in self.bus_ids:
                raise ValueError(f"unknown bus in selector '{selector}'")
            column = self.bus_ids.index(number)
            return (self.v if name == "v" else self.theta)[:, column]
        raise ValueError(f"bad variable selector '{selector}'")

    def check_same_grid(self, other: "Trajectory") -> None:
        if self.n_times != other.n_times or np.max(np.abs(self.times - other.times)) > GRID_TOL:
            raise GridMismatch("trajectories do not share a time grid")

    def losses(self, grid: GridModel) -> np.ndarray:
        return network_losses_series(grid, self.v, self.theta)

    def to_frame(self, omega_pu: bool = False) -> pd.DataFrame:
        """One row per time point: t, machine states, bus voltages, machine outputs."""
        columns = {"t": self.times}
        scale = 1.0 / self.omega_s if omega_pu else 1.0
        for k, gen_id in enumerate(self.dynamic_ids):
            columns[f"delta_{gen_id}"] = self.delta[:, k]
            columns[f"omega_{gen_id}"] = self.omega[:, k] * scale
        for k, bus_id in enumerate(self.bus_ids):
            columns[f"v_{bus_id}"] = self.v[:, k]
            columns[f"theta_{bus_id}"] = self.theta[:, k]
        for k, gen_id in enumerate(self.generator_ids):
            columns[f"pe_{gen_id}"] = self.pe[:, k]
            columns[f"qe_{gen_id}"] = self.qe[:, k]
        return pd.DataFrame(columns)
