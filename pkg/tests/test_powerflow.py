import math

import numpy as np
import pandas as pd
import pytest

from conftest import make_grid
from dae_core import StepResidualContext, integrate_block, network_losses_series, residual_full
from errors import NotConverged
from grid_model import load_schedule, time_grid
from powerflow import dump_operating_point, init_dynamic_state, network_losses, solve_powerflow


def radial(p_load, q_load=0.0):
    return make_grid(
        buses=[(1, "slack", 1.0, 0.0, 0.0), (2, "load", 1.0, p_load, q_load)],
        branches=[(1, 2, 0.0, 0.1)],
        generators=[(1, 1, 5.0, 0.0)],
    )


def test_no_load_network():
    pf = solve_powerflow(radial(0.0))
    np.testing.assert_allclose(pf.v, [1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(pf.delta, [0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(pf.pe, [0.0], atol=1e-12)


def test_loaded_radial_matches_closed_form():
    # 10 V2 sin(theta2) = -0.5 and V2 = cos(theta2)
    theta = -0.5 * math.asin(0.1)
    pf = solve_powerflow(radial(0.5))
    assert pf.converged
    assert pf.delta[1] == pytest.approx(theta, abs=1e-9)
    assert pf.v[1] == pytest.approx(math.cos(theta), abs=1e-9)
    assert pf.pe[0] == pytest.approx(0.5, abs=1e-9)


def test_ne39_converges(ne39, ne39_pf):
    assert ne39_pf.converged
    assert ne39_pf.iterations <= 10
    assert ne39_pf.mismatch <= 1e-10
    assert np.all((ne39_pf.v >= 0.9) & (ne39_pf.v <= 1.15))
    assert ne39_pf.v[38] == ne39.buses[38].v0
    assert ne39_pf.delta[38] == ne39.buses[38].delta0


def test_ne39_generator_buses_hold_setpoints(ne39, ne39_pf):
    for gen in ne39.generators:
        k = gen.bus - 1
        assert ne39_pf.v[k] == ne39.buses[k].v0
    for gen, pe in zip(ne39.generators, ne39_pf.pe):
        if gen.bus != 39:
            assert pe == pytest.approx(gen.p_sched, abs=1e-9)


def test_init_no_load():
    grid = radial(0.0)
    init = init_dynamic_state(grid, solve_powerflow(grid))
    assert init.imap.n_gen == 0
    assert init.grid.generators[0].p_mech == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(init.x0, [1.0, 0.0], atol=1e-12)


def test_init_synchronous_speed_and_pm(ne39, ne39_pf, ne39_init):
    omega = ne39_init.x0[ne39_init.imap.omega_loc]
    np.testing.assert_array_equal(omega, np.full(9, ne39.omega_s))
    pm = np.array([g.p_mech for g in ne39_init.grid.generators])
    np.testing.assert_array_equal(pm, ne39_pf.pe)


def test_generation_covers_load_plus_losses(ne39, ne39_pf):
    losses = network_losses(ne39, ne39_pf)
    independent = network_losses_series(ne39, ne39_pf.v[None, :], ne39_pf.delta[None, :])[0]
    assert losses > 0.0
    assert losses == pytest.approx(independent, abs=1e-8)
    pm = sum(g.p_mech for g in init_dynamic_state(ne39, ne39_pf).grid.generators)
    assert pm == pytest.approx(ne39.p_load.sum() + losses, abs=1e-8)


def test_init_requires_converged_pf(ne39, ne39_pf):
    with pytest.raises(NotConverged):
        init_dynamic_state(ne39, ne39_pf.model_copy(update={"converged": False}))


def test_initial_point_is_fixed_point(ne39_init):
    grid, imap = ne39_init.grid, ne39_init.imap
    ctx = StepResidualContext.build(grid, imap, ne39_init.x0, grid.p_load, grid.q_load, 0.05)
    assert np.max(np.abs(residual_full(ctx, ne39_init.x0))) <= 1e-8


def test_one_step_keeps_equilibrium(ne39_init):
    grid = ne39_init.grid
    schedule = load_schedule(grid, [], time_grid(0.05, 1))
    block = integrate_block(grid, ne39_init.imap, ne39_init.x0, schedule, 0.05)
    assert np.max(np.abs(block.x[1] - ne39_init.x0)) <= 1e-8
    assert block.newton_iters[0] <= 1


def test_dump_operating_point(ne39, ne39_pf, tmp_path):
    path = dump_operating_point(ne39, ne39_pf, tmp_path / "init.csv")
    frame = pd.read_csv(path)
    assert len(frame) == 39
    assert frame["pe"].notna().sum() == 10
    assert frame.loc[frame["bus"] == 39, "kind"].item() == "slack"
