"""Electrical network: buses, branches, generators, admittance matrix, partitions and load events."""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, PrivateAttr, model_validator

from config import (
    BASE_MVA, DEFAULT_NETWORK_FILE, OMEGA_S, PARTITION_PRESETS,
    SINGLETON_PRESET, TIME_SNAP_TOL,
)
from cross_platform_utils import CrossPlatformFileOperations, status
from errors import ConfigError, UnknownBusReference, UnknownGenerator, ZeroImpedance
from pydantic_models import (
    Branch, Bus, BusKind, Disturbance, DisturbanceAction, Generator,
    Partition, PartitionViolation,
)


@dataclass(frozen=True)
class AdmittanceMatrix:
    """Real and imaginary parts of the bus admittance matrix, in bus order."""
    g: np.ndarray
    b: np.ndarray

    @property
    def y(self) -> np.ndarray:
        return self.g + 1j * self.b


@dataclass(frozen=True)
class LoadSchedule:
    """Effective loads at every grid time, shape (n_times, n_bus)."""
    times: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def window(self, start: int, stop: int) -> "LoadSchedule":
        """Rows start..stop inclusive."""
        return LoadSchedule(self.times[start:stop + 1], self.p[start:stop + 1], self.q[start:stop + 1])


def build_ybus(buses: Sequence[Bus], branches: Sequence[Branch]) -> AdmittanceMatrix:
    """Assemble Y = G + jB from pi-model branches with the tap on the from side."""
    index = {bus.id: k for k, bus in enumerate(buses)}
    n = len(buses)
    y_bus = np.zeros((n, n), dtype=complex)

    for branch in branches:
        for end in (branch.from_bus, branch.to_bus):
            if end not in index:
                raise UnknownBusReference(end, f"branch {branch.from_bus}-{branch.to_bus}")
        if branch.r == 0.0 and branch.x == 0.0:
            raise ZeroImpedance(branch.from_bus, branch.to_bus)

        f = index[branch.from_bus]
        t = index[branch.to_bus]
        y = 1.0 / complex(branch.r, branch.x)
        half_charging = 1j * branch.b_charging / 2.0
        a = branch.tap

        y_bus[f, f] += y / (a * a) + half_charging
        y_bus[t, t] += y + half_charging
        y_bus[f, t] -= y / a
        y_bus[t, f] -= y / a

    return AdmittanceMatrix(g=y_bus.real.copy(), b=y_bus.imag.copy())


class GridModel(BaseModel):
    """Network data plus derived per-bus arrays. Treated as immutable once built."""

    name: str = Field(default="grid", description="Dataset name")
    source: str = Field(default="", description="Dataset provenance")
    base_mva: float = Field(default=BASE_MVA, gt=0, description="System MVA base")
    omega_s: float = Field(default=OMEGA_S, gt=0, description="Synchronous speed in rad/s")
    buses: List[Bus] = Field(description="Buses sorted by id")
    branches: List[Branch] = Field(default_factory=list, description="Lines and transformers")
    generators: List[Generator] = Field(default_factory=list, description="Machines")

    _admittance: Optional[AdmittanceMatrix] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_network(self):
        self.buses = sorted(self.buses, key=lambda bus: bus.id)
        ids = [bus.id for bus in self.buses]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError("bus ids must be unique and cover 1..N")
        slack = [bus.id for bus in self.buses if bus.kind == BusKind.SLACK]
        if len(slack) != 1:
            raise ValueError(f"exactly one slack bus required, found {len(slack)}")

        kinds = {bus.id: bus.kind for bus in self.buses}
        seen = set()
        for gen in self.generators:
            if gen.bus not in kinds:
                raise ValueError(f"generator {gen.id} sits on unknown bus {gen.bus}")
            if kinds[gen.bus] == BusKind.LOAD:
                raise ValueError(f"generator {gen.id} sits on load bus {gen.bus}")
            if gen.bus in seen:
                raise ValueError(f"more than one generator on bus {gen.bus}")
            seen.add(gen.bus)
        for bus in self.buses:
            if bus.kind == BusKind.GENERATOR and bus.id not in seen:
                raise ValueError(f"generator bus {bus.id} has no machine data")

        self.generators = [
            gen if gen.omega_s == self.omega_s else gen.model_copy(update={"omega_s": self.omega_s})
            for gen in self.generators
        ]
        return self

    # ---- lookups -------------------------------------------------------

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def position(self, bus_id: int) -> int:
        """0-based array position of a bus id."""
        if not 1 <= bus_id <= self.n_bus:
            raise UnknownBusReference(bus_id)
        return bus_id - 1

    @property
    def slack_bus(self) -> Bus:
        return next(bus for bus in self.buses if bus.kind == BusKind.SLACK)

    @property
    def dynamic_generators(self) -> List[Generator]:
        """Machines at generator-kind buses, in bus order (the slack machine is excluded)."""
        kinds = {bus.id: bus.kind for bus in self.buses}
        return sorted(
            (gen for gen in self.generators if kinds[gen.bus] == BusKind.GENERATOR),
            key=lambda gen: gen.bus,
        )

    def generator(self, generator_id: int) -> Generator:
        for gen in self.generators:
            if gen.id == generator_id:
                return gen
        raise UnknownGenerator(generator_id)

    def generator_at(self, bus_id: int) -> Optional[Generator]:
        return next((gen for gen in self.generators if gen.bus == bus_id), None)

    # ---- arrays --------------------------------------------------------

    @property
    def p_load(self) -> np.ndarray:
        return np.array([bus.p_load for bus in self.buses])

    @property
    def q_load(self) -> np.ndarray:
        return np.array([bus.q_load for bus in self.buses])

    @property
    def v0(self) -> np.ndarray:
        return np.array([bus.v0 for bus in self.buses])

    @property
    def delta0(self) -> np.ndarray:
        return np.array([bus.delta0 for bus in self.buses])

    def admittance(self) -> AdmittanceMatrix:
        if self._admittance is None:
            self._admittance = build_ybus(self.buses, self.branches)
        return self._admittance

    # ---- derived grids -------------------------------------------------

    def with_generators(self, generators: List[Generator]) -> "GridModel":
        grid = self.model_copy(update={"generators": generators})
        grid._admittance = self._admittance
        return grid

    def with_slack(self, bus_id: int) -> "GridModel":
        """Move the slack designation to another machine bus."""
        self.position(bus_id)
        if bus_id == self.slack_bus.id:
            return self
        if self.generator_at(bus_id) is None:
            raise ConfigError(f"slack override: bus {bus_id} has no generator")
        old_slack = self.slack_bus.id
        if self.generator_at(old_slack) is None:
            raise ConfigError(f"slack override: current slack bus {old_slack} has no generator to keep")
        buses = []
        for bus in self.buses:
            if bus.id == bus_id:
                bus = bus.model_copy(update={"kind": BusKind.SLACK})
            elif bus.id == old_slack:
                bus = bus.model_copy(update={"kind": BusKind.GENERATOR})
            buses.append(bus)
        return GridModel(
            name=self.name, source=self.source, base_mva=self.base_mva, omega_s=self.omega_s,
            buses=buses, branches=self.branches, generators=self.generators,
        )


# ---- load events -------------------------------------------------------------

def effective_load(buses: Sequence[Bus], disturbances: Sequence[Disturbance], t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Per-bus (P_L, Q_L) at time t with every active disturbance applied."""
    p = np.array([bus.p_load for bus in buses], dtype=float)
    q = np.array([bus.q_load for bus in buses], dtype=float)
    index = {bus.id: k for k, bus in enumerate(buses)}

    for disturbance in disturbances:
        k = index.get(disturbance.bus)
        if k is None or not disturbance.active_at(t):
            continue
        if disturbance.action == DisturbanceAction.DISCONNECT_LOAD:
            p[k] = 0.0
            q[k] = 0.0
        else:
            p[k] *= disturbance.factor
            q[k] *= disturbance.factor
    return p, q


def snap_disturbances(disturbances: Sequence[Disturbance], h: float) -> List[Disturbance]:
    """Move event times onto the step grid, warning about every moved time."""
    snapped = []
    for disturbance in disturbances:
        t_start = round(disturbance.t_start / h) * h
        t_end = round(disturbance.t_end / h) * h
        if t_end <= t_start:
            t_end = t_start + h
        moved = abs(t_start - disturbance.t_start) > TIME_SNAP_TOL or abs(t_end - disturbance.t_end) > TIME_SNAP_TOL
        if moved:
            status("⚠️", f"Disturbance at bus {disturbance.bus} moved to the step grid: "
                         f"[{disturbance.t_start}, {disturbance.t_end}) -> [{t_start:.6g}, {t_end:.6g})")
            disturbance = disturbance.model_copy(update={"t_start": t_start, "t_end": t_end})
        snapped.append(disturbance)
    return snapped


def time_grid(h: float, n_steps: int) -> np.ndarray:
    return np.arange(n_steps + 1) * h


def load_schedule(grid: GridModel, disturbances: Sequence[Disturbance], times: np.ndarray) -> LoadSchedule:
    """Evaluate effective_load at every grid time."""
    for disturbance in disturbances:
        grid.position(disturbance.bus)
    rows = [effective_load(grid.buses, disturbances, float(t)) for t in times]
    p = np.array([row[0] for row in rows])
    q = np.array([row[1] for row in rows])
    return LoadSchedule(times=np.asarray(times, dtype=float), p=p, q=q)


# ---- partitions ------------------------------------------------------------

def validate_partition(partition: Partition, buses: Sequence[Bus]) -> List[PartitionViolation]:
    """Every way the partition fails to be a disjoint cover of the buses; empty when ok."""
    known = [bus.id for bus in buses]
    known_set = set(known)
    owner: Dict[int, int] = {}
    violations = []

    for index, subsystem in enumerate(partition.subsystems):
        for bus_id in subsystem:
            if bus_id not in known_set:
                violations.append(PartitionViolation(kind="unknown", bus=bus_id, subsystem=index))
            elif bus_id in owner:
                violations.append(PartitionViolation(kind="duplicate", bus=bus_id, subsystem=index))
            else:
                owner[bus_id] = index

    for bus_id in known:
        if bus_id not in owner:
            violations.append(PartitionViolation(kind="missing", bus=bus_id))
    return violations


def partition_preset(name: str, grid: GridModel) -> Partition:
    """Named partition; "rest" in a preset means every bus not listed before it."""
    bus_ids = [bus.id for bus in grid.buses]
    if name == SINGLETON_PRESET:
        return Partition(subsystems=[[bus_id] for bus_id in bus_ids], name=name)
    if name not in PARTITION_PRESETS:
        raise ConfigError(f"unknown partition preset '{name}'")

    subsystems: List[List[int]] = []
    for entry in PARTITION_PRESETS[name]:
        if entry == "rest":
            listed = {bus_id for subsystem in subsystems for bus_id in subsystem}
            subsystems.append([bus_id for bus_id in bus_ids if bus_id not in listed])
        else:
            subsystems.append(list(entry))
    return Partition(subsystems=subsystems, name=name)


def load_partition(spec: Union[str, Path, List[List[int]], Partition], grid: GridModel) -> Partition:
    """Resolve a preset name, a JSON file of bus lists or inline bus lists."""
    if isinstance(spec, Partition):
        return spec
    if isinstance(spec, (list, tuple)):
        return Partition(subsystems=[list(subsystem) for subsystem in spec])
    name = str(spec)
    if name == SINGLETON_PRESET or name in PARTITION_PRESETS:
        return partition_preset(name, grid)
    path = Path(name)
    if path.suffix.lower() != ".json":
        raise ConfigError(f"unknown partition preset '{name}'")
    return Partition(subsystems=CrossPlatformFileOperations.read_json(path), name=path.stem)


# ---- readers ---------------------------------------------------------------

def load_grid(path: Optional[Union[str, Path]] = None, omega_s: Optional[float] = None) -> GridModel:
    """Read a network JSON document with buses, branches and generators arrays."""
    data = CrossPlatformFileOperations.read_json(path or DEFAULT_NETWORK_FILE)
    if omega_s is not None:
        data = {**data, "omega_s": omega_s}
    return GridModel(**data)


def load_disturbances(path: Union[str, Path]) -> List[Disturbance]:
    return [Disturbance(**item) for item in CrossPlatformFileOperations.read_json(path)]
