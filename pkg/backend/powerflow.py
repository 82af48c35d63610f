"""Static AC power flow and the dynamic initial condition built from it."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from config import CSV_FLOAT_FORMAT, POWERFLOW_MAX_ITER, POWERFLOW_TOL
from cross_platform_utils import status
from dae_core import UnknownIndexMap, bus_injections, recover_outputs, state_from_buses
from errors import NotConverged
from grid_model import GridModel
from newton import newton_solve
from pydantic_models import BusKind, NewtonConfig, PowerFlowSolution


@dataclass
class InitialState:
    """Operating point at t=0: grid with Pm assigned, whole-grid unknowns and bus values."""
    grid: GridModel
    imap: UnknownIndexMap
    x0: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    pe: np.ndarray
    qe: np.ndarray


def solve_powerflow(grid: GridModel, tol: float = POWERFLOW_TOL, max_iter: int = POWERFLOW_MAX_ITER) -> PowerFlowSolution:
    """
    Newton power flow. Generator buses hold |V| = v0 and their scheduled
    net P, load buses hold P and Q, the slack holds v0/delta0.
    """
    y = grid.admittance().y
    kinds = [bus.kind for bus in grid.buses]
    pv_pq = np.array([k for k, kind in enumerate(kinds) if kind != BusKind.SLACK], dtype=int)
    pq = np.array([k for k, kind in enumerate(kinds) if kind == BusKind.LOAD], dtype=int)
    n_theta = len(pv_pq)

    p_gen = np.zeros(grid.n_bus)
    for gen in grid.generators:
        p_gen[grid.position(gen.bus)] += gen.p_sched
    p_spec = p_gen - grid.p_load
    q_spec = -grid.q_load

    v_start = grid.v0
    theta_start = np.zeros(grid.n_bus)
    slack = grid.position(grid.slack_bus.id)
    theta_start[slack] = grid.slack_bus.delta0

    def unpack(x):
        v = v_start.copy()
        theta = theta_start.copy()
        theta[pv_pq] = x[:n_theta]
        v[pq] = x[n_theta:]
        return v, theta

    def mismatch(x):
        v, theta = unpack(x)
        p, q = bus_injections(y, v, theta)
        return np.concatenate([p[pv_pq] - p_spec[pv_pq], q[pq] - q_spec[pq]])

    def jacobian(x):
        v, theta = unpack(x)
        vc = v * np.exp(1j * theta)
        current = y @ vc
        vn = np.exp(1j * theta)
        ds_dtheta = 1j * vc[:, None] * np.conj(np.diag(current) - y * vc[None, :])
        ds_dv = vc[:, None] * np.conj(y * vn[None, :]) + np.diag(np.conj(current) * vn)
        top = np.hstack([ds_dtheta[np.ix_(pv_pq, pv_pq)].real, ds_dv[np.ix_(pv_pq, pq)].real])
        bottom = np.hstack([ds_dtheta[np.ix_(pq, pv_pq)].imag, ds_dv[np.ix_(pq, pq)].imag])
        return np.vstack([top, bottom])

    x0 = np.concatenate([theta_start[pv_pq], v_start[pq]])
    result = newton_solve(mismatch, jacobian, x0, NewtonConfig(tol=tol, max_iter=max_iter, max_halvings=4))

    v, theta = unpack(result.x)
    pe, qe = recover_outputs(grid, v, theta, grid.p_load, grid.q_load)
    return PowerFlowSolution(
        v=v, delta=theta, pe=pe, qe=qe,
        converged=True, iterations=result.iterations, mismatch=result.norm,
    )


def init_dynamic_state(grid: GridModel, pf: PowerFlowSolution) -> InitialState:
    """Machines start at synchronous speed with Pm set to the solved Pe."""
    if not pf.converged:
        raise NotConverged("power flow did not converge; no initial point")

    generators = [
        gen.model_copy(update={"p_mech": float(pe)})
        for gen, pe in zip(grid.generators, pf.pe)
    ]
    grid = grid.with_generators(generators)
    imap = UnknownIndexMap.build(grid)
    omega = np.full(imap.n_gen, grid.omega_s)
    x0 = state_from_buses(imap, pf.v, pf.delta, omega)
    return InitialState(
        grid=grid, imap=imap, x0=x0,
        v=pf.v.copy(), theta=pf.delta.copy(), pe=pf.pe.copy(), qe=pf.qe.copy(),
    )


def network_losses(grid: GridModel, pf: PowerFlowSolution) -> float:
    """Total generation minus total load, i.e. active losses in the branches."""
    return float(np.sum(pf.pe) - np.sum(grid.p_load))


def powerflow_frame(grid: GridModel, pf: PowerFlowSolution) -> pd.DataFrame:
    pe = np.full(grid.n_bus, np.nan)
    qe = np.full(grid.n_bus, np.nan)
    for gen, p, q in zip(grid.generators, pf.pe, pf.qe):
        pe[grid.position(gen.bus)] = p
        qe[grid.position(gen.bus)] = q
    return pd.DataFrame({
        "bus": [bus.id for bus in grid.buses],
        "kind": [bus.kind.value for bus in grid.buses],
        "v": pf.v,
        "delta": pf.delta,
        "p_load": grid.p_load,
        "q_load": grid.q_load,
        "pe": pe,
        "qe": qe,
    })


def dump_operating_point(grid: GridModel, pf: PowerFlowSolution, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    powerflow_frame(grid, pf).to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    status("💾", f"Operating point written to {path} (losses {network_losses(grid, pf):.6f} pu)")
    return path


def prepare_initial_state(grid: GridModel, pf: Optional[PowerFlowSolution] = None) -> InitialState:
    """Power flow (unless given) followed by init_dynamic_state."""
    if pf is None:
        pf = solve_powerflow(grid)
        status("⚡", f"Power flow converged in {pf.iterations} iterations (mismatch {pf.mismatch:.2e})")
    return init_dynamic_state(grid, pf)
