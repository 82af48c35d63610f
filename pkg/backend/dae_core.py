"""
Discretized swing + network equations.

One Backward Euler step turns the classical-machine DAE into a square
nonlinear system over the unknowns of a bus set:

    generator bus m:  [delta_m, omega_m]   rows R_delta, R_omega
    load bus r:       [V_r, theta_r]       rows R_P, R_Q

Generator-bus magnitudes stay at v0 and the slack keeps v0/delta0.
The generator bus angle doubles as the rotor angle. Pe and Qe are not
unknowns; they come out of the bus injections afterwards.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import DimensionMismatch, MissingExternalValue, StepFailure, SolverError
from grid_model import GridModel, LoadSchedule
from newton import newton_solve
from pydantic_models import BusKind, NewtonConfig, Partition


def bus_injections(y: np.ndarray, v: np.ndarray, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Net injected (P, Q) at every bus, S = V * conj(Y V)."""
    vc = v * np.exp(1j * theta)
    s = vc * np.conj(y @ vc)
    return s.real, s.imag


@dataclass(frozen=True)
class UnknownIndexMap:
    """
    Layout of the unknown vector for a set of buses.

    Positions ending in _pos index bus arrays (0-based bus order);
    positions ending in _loc index the local unknown vector. full_idx maps
    local unknowns into the whole-grid vector, and the full_* arrays give
    the whole-grid layout used to unpack external values.
    """
    buses: Tuple[int, ...]
    gen_pos: np.ndarray
    load_pos: np.ndarray
    m_coeff: np.ndarray
    full_idx: np.ndarray
    full_gen_pos: np.ndarray
    full_load_pos: np.ndarray
    n_bus: int
    coupled_external: Tuple[int, ...] = field(default=())

    @classmethod
    def build(cls, grid: GridModel, buses: Optional[Sequence[int]] = None) -> "UnknownIndexMap":
        gens = grid.dynamic_generators
        loads = [bus.id for bus in grid.buses if bus.kind == BusKind.LOAD]
        full_gen_buses = [gen.bus for gen in gens]

        selected = set(bus.id for bus in grid.buses) if buses is None else set(buses)
        for bus_id in selected:
            grid.position(bus_id)

        gen_loc = [k for k, gen in enumerate(gens) if gen.bus in selected]
        load_loc = [k for k, bus_id in enumerate(loads) if bus_id in selected]
        n_gen = len(gens)
        full_idx = [2 * k + j for k in gen_loc for j in (0, 1)]
        full_idx += [2 * n_gen + 2 * k + j for k in load_loc for j in (0, 1)]

        y = grid.admittance().y
        internal = [grid.position(b) for b in sorted(selected)]
        slack = grid.position(grid.slack_bus.id)
        coupled = sorted({
            j + 1
            for i in internal
            for j in np.nonzero(y[i])[0]
            if (j + 1) not in selected and j != slack
        })

        return cls(
            buses=tuple(sorted(selected)),
            gen_pos=np.array([grid.position(gens[k].bus) for k in gen_loc], dtype=int),
            load_pos=np.array([grid.position(loads[k]) for k in load_loc], dtype=int),
            m_coeff=np.array([gens[k].m_coeff for k in gen_loc], dtype=float),
            full_idx=np.array(full_idx, dtype=int),
            full_gen_pos=np.array([grid.position(b) for b in full_gen_buses], dtype=int),
            full_load_pos=np.array([grid.position(b) for b in loads], dtype=int),
            n_bus=grid.n_bus,
            coupled_external=tuple(coupled),
        )

    @property
    def n_gen(self) -> int:
        return len(self.gen_pos)

    @property
    def n_unknowns(self) -> int:
        return 2 * (len(self.gen_pos) + len(self.load_pos))

    @property
    def is_full(self) -> bool:
        return len(self.buses) == self.n_bus

    @property
    def delta_loc(self) -> np.ndarray:
        return np.arange(0, 2 * self.n_gen, 2)

    @property
    def omega_loc(self) -> np.ndarray:
        return np.arange(1, 2 * self.n_gen, 2)

    @property
    def v_loc(self) -> np.ndarray:
        return np.arange(2 * self.n_gen, self.n_unknowns, 2)

    @property
    def theta_loc(self) -> np.ndarray:
        return np.arange(2 * self.n_gen + 1, self.n_unknowns, 2)

    @property
    def state_loc(self) -> np.ndarray:
        return np.arange(2 * self.n_gen)

    @property
    def algebraic_loc(self) -> np.ndarray:
        return np.arange(2 * self.n_gen, self.n_unknowns)

    def scatter(self, x: np.ndarray, v: np.ndarray, theta: np.ndarray) -> None:
        """Write local unknowns into bus magnitude/angle arrays in place."""
        theta[self.gen_pos] = x[self.delta_loc]
        v[self.load_pos] = x[self.v_loc]
        theta[self.load_pos] = x[self.theta_loc]

    def scatter_full(self, x_full: np.ndarray, v: np.ndarray, theta: np.ndarray) -> None:
        """Write a whole-grid unknown vector into bus arrays in place."""
        n_gen = len(self.full_gen_pos)
        theta[self.full_gen_pos] = x_full[0:2 * n_gen:2]
        v[self.full_load_pos] = x_full[2 * n_gen::2]
        theta[self.full_load_pos] = x_full[2 * n_gen + 1::2]


def bus_voltages(grid: GridModel, imap: UnknownIndexMap, x_full: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Bus magnitudes and angles for a whole-grid unknown vector, pins applied."""
    v = grid.v0
    theta = grid.delta0
    imap.scatter_full(np.asarray(x_full, dtype=float), v, theta)
    return v, theta


def state_from_buses(imap: UnknownIndexMap, v: np.ndarray, theta: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Pack bus values plus rotor speeds into the local unknown vector."""
    x = np.empty(imap.n_unknowns)
    x[imap.delta_loc] = theta[imap.gen_pos]
    x[imap.omega_loc] = omega
    x[imap.v_loc] = v[imap.load_pos]
    x[imap.theta_loc] = theta[imap.load_pos]
    return x


@dataclass
class StepResidualContext:
    """Everything one step of one bus set needs besides the unknowns at t+1."""
    imap: UnknownIndexMap
    y: np.ndarray
    h: float
    omega_s: float
    p_mech: np.ndarray
    delta_prev: np.ndarray
    omega_prev: np.ndarray
    p_load: np.ndarray
    q_load: np.ndarray
    v_base: np.ndarray
    theta_base: np.ndarray

    @classmethod
    def build(
        cls,
        grid: GridModel,
        imap: UnknownIndexMap,
        x_prev: np.ndarray,
        p_load: np.ndarray,
        q_load: np.ndarray,
        h: float,
        external: Optional[np.ndarray] = None,
    ) -> "StepResidualContext":
        """
        external is a whole-grid unknown vector at t+1 holding the frozen
        values of buses outside imap; entries inside imap are ignored.
        """
        if h <= 0:
            raise ValueError("step size must be positive")
        x_prev = np.asarray(x_prev, dtype=float)
        if x_prev.shape != (imap.n_unknowns,):
            raise DimensionMismatch(f"previous state length {x_prev.size} != {imap.n_unknowns}")

        v_base = grid.v0
        theta_base = grid.delta0
        if imap.coupled_external:
            if external is None:
                raise MissingExternalValue(imap.coupled_external)
            v_ext = np.full(grid.n_bus, np.nan)
            theta_ext = np.full(grid.n_bus, np.nan)
            imap.scatter_full(np.asarray(external, dtype=float), v_ext, theta_ext)
            missing = []
            for bus_id in imap.coupled_external:
                k = bus_id - 1
                kind = grid.buses[k].kind
                if not np.isfinite(theta_ext[k]) or (kind == BusKind.LOAD and not np.isfinite(v_ext[k])):
                    missing.append(bus_id)
            if missing:
                raise MissingExternalValue(missing)
            known = np.isfinite(theta_ext)
            theta_base[known] = theta_ext[known]
            known = np.isfinite(v_ext)
            v_base[known] = v_ext[known]

        gens = [gen for gen in grid.dynamic_generators if grid.position(gen.bus) in set(imap.gen_pos.tolist())]
        return cls(
            imap=imap,
            y=grid.admittance().y,
            h=float(h),
            omega_s=grid.omega_s,
            p_mech=np.array([gen.p_mech for gen in gens], dtype=float),
            delta_prev=x_prev[imap.delta_loc],
            omega_prev=x_prev[imap.omega_loc],
            p_load=np.asarray(p_load, dtype=float),
            q_load=np.asarray(q_load, dtype=float),
            v_base=v_base,
            theta_base=theta_base,
        )

    def bus_state(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        v = self.v_base.copy()
        theta = self.theta_base.copy()
        self.imap.scatter(x, v, theta)
        return v, theta


def _check_length(ctx: StepResidualContext, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (ctx.imap.n_unknowns,):
        raise DimensionMismatch(f"unknown vector length {x.size} != {ctx.imap.n_unknowns}")
    return x


def _residual(ctx: StepResidualContext, x: np.ndarray) -> np.ndarray:
    x = _check_length(ctx, x)
    imap = ctx.imap
    v, theta = ctx.bus_state(x)
    p, q = bus_injections(ctx.y, v, theta)

    r = np.empty_like(x)
    delta = x[imap.delta_loc]
    omega = x[imap.omega_loc]
    pe = ctx.p_load[imap.gen_pos] + p[imap.gen_pos]
    r[imap.delta_loc] = delta - ctx.delta_prev - ctx.h * (omega - ctx.omega_s)
    r[imap.omega_loc] = omega - ctx.omega_prev - (ctx.h / imap.m_coeff) * (ctx.p_mech - pe)
    r[imap.v_loc] = ctx.p_load[imap.load_pos] + p[imap.load_pos]
    r[imap.theta_loc] = ctx.q_load[imap.load_pos] + q[imap.load_pos]
    return r


def _jacobian(ctx: StepResidualContext, x: np.ndarray) -> np.ndarray:
    x = _check_length(ctx, x)
    imap = ctx.imap
    v, theta = ctx.bus_state(x)
    y = ctx.y

    vc = v * np.exp(1j * theta)
    current = y @ vc
    vn = np.exp(1j * theta)
    ds_dtheta = 1j * vc[:, None] * np.conj(np.diag(current) - y * vc[None, :])
    ds_dv = vc[:, None] * np.conj(y * vn[None, :]) + np.diag(np.conj(current) * vn)

    n = imap.n_unknowns
    ds = np.zeros((imap.n_bus, n), dtype=complex)
    ds[:, imap.delta_loc] = ds_dtheta[:, imap.gen_pos]
    ds[:, imap.v_loc] = ds_dv[:, imap.load_pos]
    ds[:, imap.theta_loc] = ds_dtheta[:, imap.load_pos]

    jac = np.zeros((n, n))
    dl, ol = imap.delta_loc, imap.omega_loc
    jac[dl, dl] = 1.0
    jac[dl, ol] = -ctx.h
    jac[ol, :] = (ctx.h / imap.m_coeff)[:, None] * ds[imap.gen_pos].real
    jac[ol, ol] += 1.0
    jac[imap.v_loc, :] = ds[imap.load_pos].real
    jac[imap.theta_loc, :] = ds[imap.load_pos].imag
    return jac


def residual_full(ctx: StepResidualContext, unknowns_next: np.ndarray) -> np.ndarray:
    """Step residual of the whole grid, rows in index-map order."""
    if not ctx.imap.is_full:
        raise DimensionMismatch("context was built for a subsystem, not the whole grid")
    return _residual(ctx, unknowns_next)


def jacobian_full(ctx: StepResidualContext, unknowns_next: np.ndarray) -> np.ndarray:
    if not ctx.imap.is_full:
        raise DimensionMismatch("context was built for a subsystem, not the whole grid")
    return _jacobian(ctx, unknowns_next)


def _check_subsystem(ctx: StepResidualContext, partition: Partition, subsystem_index: int) -> None:
    if tuple(sorted(partition.subsystems[subsystem_index])) != ctx.imap.buses:
        raise DimensionMismatch(f"context does not match subsystem {subsystem_index}")


def residual_subsystem(ctx: StepResidualContext, partition: Partition, subsystem_index: int,
                       internal_unknowns_next: np.ndarray) -> np.ndarray:
    """Step residual of one subsystem with buses outside it frozen at ctx's external values."""
    _check_subsystem(ctx, partition, subsystem_index)
    return _residual(ctx, internal_unknowns_next)


def jacobian_subsystem(ctx: StepResidualContext, partition: Partition, subsystem_index: int,
                       internal_unknowns_next: np.ndarray) -> np.ndarray:
    _check_subsystem(ctx, partition, subsystem_index)
    return _jacobian(ctx, internal_unknowns_next)


def recover_outputs(grid: GridModel, v: np.ndarray, theta: np.ndarray,
                    p_load: np.ndarray, q_load: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Pe and Qe of every machine (slack included) in grid.generators order."""
    p, q = bus_injections(grid.admittance().y, v, theta)
    pos = np.array([grid.position(gen.bus) for gen in grid.generators], dtype=int)
    return p_load[pos] + p[pos], q_load[pos] + q[pos]


def network_losses_series(grid: GridModel, v_rows: np.ndarray, theta_rows: np.ndarray) -> np.ndarray:
    """Active branch losses per time row (sum of all bus injections)."""
    y = grid.admittance().y
    return np.array([bus_injections(y, v, theta)[0].sum() for v, theta in zip(v_rows, theta_rows)])


@dataclass
class BlockResult:
    """Unknown rows at every block time plus inner Newton counts per step."""
    x: np.ndarray
    newton_iters: List[int]


def integrate_block(
    grid: GridModel,
    imap: UnknownIndexMap,
    x0: np.ndarray,
    loads: LoadSchedule,
    h: float,
    newton: Optional[NewtonConfig] = None,
    external: Optional[np.ndarray] = None,
) -> BlockResult:
    """
    Backward Euler over loads.times for the buses of imap.

    Row 0 is x0 untouched; each later row is a Newton solve warm-started
    from the row before. external, when given, holds one whole-grid
    unknown vector per time row.
    """
    n_times = len(loads.times)
    rows = np.empty((n_times, imap.n_unknowns))
    rows[0] = x0
    iters: List[int] = []

    for k in range(1, n_times):
        ctx = StepResidualContext.build(
            grid, imap, rows[k - 1], loads.p[k], loads.q[k], h,
            external=None if external is None else external[k],
        )
        try:
            result = newton_solve(
                lambda x: _residual(ctx, x),
                lambda x: _jacobian(ctx, x),
                rows[k - 1],
                newton,
            )
        except SolverError as exc:
            raise StepFailure(float(loads.times[k]), exc) from exc
        rows[k] = result.x
        iters.append(result.iterations)

    return BlockResult(x=rows, newton_iters=iters)


def residual_series(grid: GridModel, imap: UnknownIndexMap, x_rows: np.ndarray,
                    loads: LoadSchedule, h: float) -> np.ndarray:
    """
    Infinity norm of the whole-grid step residual at every row of x_rows.

    Row 0 is the initial point and reads 0; row k is checked as a Backward
    Euler step from row k-1 under the loads of row k.
    """
    if not imap.is_full:
        raise DimensionMismatch("residual series needs the whole-grid index map")
    x_rows = np.asarray(x_rows, dtype=float)
    if len(x_rows) != len(loads.times):
        raise DimensionMismatch(f"{len(x_rows)} rows for {len(loads.times)} time points")
    norms = np.zeros(len(x_rows))
    for k in range(1, len(x_rows)):
        ctx = StepResidualContext.build(grid, imap, x_rows[k - 1], loads.p[k], loads.q[k], h)
        norms[k] = np.max(np.abs(residual_full(ctx, x_rows[k])), initial=0.0)
    return norms
