"""Shared fixtures: the bundled 39-bus case and two small hand-checkable grids."""

import sys
from pathlib import Path

# Same import layout as main.py; the root makes main importable for CLI tests
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))
sys.path.insert(0, str(project_root / "backend"))

import pytest

from bench.workflow import load_scenario
from config import PAPER_SCENARIO_FILE
from grid_model import GridModel, load_grid
from powerflow import init_dynamic_state, solve_powerflow
from pydantic_models import Scenario


def make_grid(buses, branches, generators, name="toy"):
    return GridModel(
        name=name,
        buses=[dict(zip(("id", "kind", "v0", "p_load", "q_load"), bus)) for bus in buses],
        branches=[dict(zip(("from_bus", "to_bus", "r", "x"), branch)) for branch in branches],
        generators=[dict(zip(("id", "bus", "h_inertia", "p_sched"), gen)) for gen in generators],
    )


@pytest.fixture(scope="session")
def ne39():
    return load_grid()


@pytest.fixture(scope="session")
def ne39_pf(ne39):
    return solve_powerflow(ne39)


@pytest.fixture(scope="session")
def ne39_init(ne39, ne39_pf):
    return init_dynamic_state(ne39, ne39_pf)


@pytest.fixture(scope="session")
def paper_scenario():
    return load_scenario(PAPER_SCENARIO_FILE)


@pytest.fixture
def smib():
    """Slack 1 - load 3 - machine 2, lossless, no shunts."""
    return make_grid(
        buses=[(1, "slack", 1.0, 0.0, 0.0), (2, "generator", 1.0, 0.0, 0.0), (3, "load", 1.0, 0.5, 0.1)],
        branches=[(1, 3, 0.0, 0.1), (3, 2, 0.0, 0.1)],
        generators=[(1, 1, 100.0, 0.0), (2, 2, 30.0, 0.3)],
    )


@pytest.fixture
def smib_scenario():
    return Scenario(
        name="smib",
        h=0.01,
        T=1.0,
        disturbances=[{"t_start": 0.05, "t_end": 1.0, "bus": 3, "action": "scale_load", "factor": 1.5}],
    )


@pytest.fixture
def two_islands():
    """Two load/machine pairs hanging off the slack; they share nothing but the slack."""
    return make_grid(
        buses=[
            (1, "slack", 1.0, 0.0, 0.0),
            (2, "generator", 1.0, 0.0, 0.0),
            (3, "load", 1.0, 0.4, 0.1),
            (4, "generator", 1.0, 0.0, 0.0),
            (5, "load", 1.0, 0.3, 0.05),
        ],
        branches=[(1, 3, 0.0, 0.1), (2, 3, 0.0, 0.1), (1, 5, 0.01, 0.1), (4, 5, 0.0, 0.1)],
        generators=[(1, 1, 50.0, 0.0), (2, 2, 3.0, 0.2), (3, 4, 4.0, 0.15)],
    )


@pytest.fixture
def islands_scenario():
    return Scenario(
        name="islands",
        h=0.05,
        T=1.0,
        disturbances=[
            {"t_start": 0.1, "t_end": 0.3, "bus": 3, "action": "scale_load", "factor": 1.5},
            {"t_start": 0.2, "t_end": 0.4, "bus": 5, "action": "disconnect_load"},
        ],
        partition=[[1, 2, 3], [4, 5]],
    )
