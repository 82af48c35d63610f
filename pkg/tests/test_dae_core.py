import numpy as np
import pytest

from dae_core import (
    StepResidualContext, UnknownIndexMap, bus_voltages, jacobian_full, jacobian_subsystem,
    network_losses_series, recover_outputs, residual_full, residual_series, residual_subsystem,
)
from errors import DimensionMismatch, MissingExternalValue
from grid_model import partition_preset
from powerflow import init_dynamic_state, solve_powerflow
from pydantic_models import Partition
from solvers.direct_integration import DirectIntegrationSolver
from solvers.windowing import scenario_for_horizon

H = 0.05


def full_context(init, x_prev=None, h=H):
    grid = init.grid
    x_prev = init.x0 if x_prev is None else x_prev
    return StepResidualContext.build(grid, init.imap, x_prev, grid.p_load, grid.q_load, h)


def sub_context(init, buses, external, h=H):
    grid = init.grid
    imap = UnknownIndexMap.build(grid, buses)
    x_prev = init.x0[imap.full_idx]
    return StepResidualContext.build(grid, imap, x_prev, grid.p_load, grid.q_load, h, external)


def central_difference(fn, x, step=1e-6):
    jac = np.empty((len(fn(x)), len(x)))
    for j in range(len(x)):
        dx = np.zeros_like(x)
        dx[j] = step
        jac[:, j] = (fn(x + dx) - fn(x - dx)) / (2.0 * step)
    return jac


def test_ne39_index_map(ne39_init):
    imap = ne39_init.imap
    assert imap.n_unknowns == 76
    assert imap.n_gen == 9
    locs = np.concatenate([imap.delta_loc, imap.omega_loc, imap.v_loc, imap.theta_loc])
    assert sorted(locs.tolist()) == list(range(76))
    np.testing.assert_array_equal(imap.full_idx, np.arange(76))
    assert 38 not in imap.load_pos and 38 not in imap.gen_pos
    assert set(imap.load_pos.tolist()).isdisjoint(imap.gen_pos.tolist())


def test_equilibrium_residual(ne39_init):
    ctx = full_context(ne39_init)
    assert np.max(np.abs(residual_full(ctx, ne39_init.x0))) <= 1e-8


def test_rotor_angle_row_at_synchronous_speed(ne39_init):
    imap = ne39_init.imap
    ctx = full_context(ne39_init)
    x = ne39_init.x0.copy()
    x[imap.delta_loc] += 0.01 * np.arange(1, 10)
    r = residual_full(ctx, x)
    np.testing.assert_allclose(r[imap.delta_loc], x[imap.delta_loc] - ne39_init.x0[imap.delta_loc], atol=1e-15)


def test_flat_point_lossless_load_rows(smib):
    init = init_dynamic_state(smib, solve_powerflow(smib))
    imap = init.imap
    ctx = full_context(init)
    flat = np.empty(imap.n_unknowns)
    flat[imap.delta_loc] = 0.0
    flat[imap.omega_loc] = smib.omega_s
    flat[imap.v_loc] = 1.0
    flat[imap.theta_loc] = 0.0
    r = residual_full(ctx, flat)
    assert r[imap.v_loc][0] == pytest.approx(0.5, abs=1e-12)
    assert r[imap.theta_loc][0] == pytest.approx(0.1, abs=1e-12)


def test_jacobian_matches_finite_differences(ne39_init):
    rng = np.random.default_rng(7)
    imap = ne39_init.imap
    ctx = full_context(ne39_init)
    scale = np.ones(imap.n_unknowns) * 0.02
    scale[imap.omega_loc] = 0.5
    for _ in range(100):
        x = ne39_init.x0 + scale * rng.uniform(-1.0, 1.0, imap.n_unknowns)
        analytic = jacobian_full(ctx, x)
        numeric = central_difference(lambda z: residual_full(ctx, z), x)
        assert np.max(np.abs(analytic - numeric)) / max(1.0, np.max(np.abs(analytic))) <= 1e-5


def test_single_machine_block(smib):
    init = init_dynamic_state(smib, solve_powerflow(smib))
    imap = init.imap
    jac = jacobian_full(full_context(init), init.x0)
    (d,), (w,) = imap.delta_loc, imap.omega_loc
    assert jac[d, d] == 1.0
    assert jac[d, w] == -H
    assert jac[w, w] == 1.0
    assert jac.shape == (imap.n_unknowns, imap.n_unknowns)


def test_single_subsystem_bit_identical(ne39_init):
    everything = Partition(subsystems=[list(range(1, 40))])
    ctx_full = full_context(ne39_init)
    ctx_sub = sub_context(ne39_init, everything.subsystems[0], ne39_init.x0)
    x = ne39_init.x0 + 1e-3
    np.testing.assert_array_equal(residual_subsystem(ctx_sub, everything, 0, x), residual_full(ctx_full, x))
    np.testing.assert_array_equal(jacobian_subsystem(ctx_sub, everything, 0, x), jacobian_full(ctx_full, x))


def test_subsystem_residuals_concatenate_to_full(ne39, ne39_init):
    partition = partition_preset("table2-3", ne39)
    rng = np.random.default_rng(3)
    x = ne39_init.x0 + 1e-2 * rng.standard_normal(76)
    full = residual_full(full_context(ne39_init), x)

    assembled = np.full(76, np.nan)
    for i, buses in enumerate(partition.subsystems):
        ctx = sub_context(ne39_init, buses, x)
        assembled[ctx.imap.full_idx] = residual_subsystem(ctx, partition, i, x[ctx.imap.full_idx])
    np.testing.assert_allclose(assembled, full, rtol=0, atol=1e-12)


def test_subsystem_jacobians_match_finite_differences(ne39, ne39_init):
    partition = partition_preset("table2-3", ne39)
    for i, buses in enumerate(partition.subsystems):
        ctx = sub_context(ne39_init, buses, ne39_init.x0)
        x = ne39_init.x0[ctx.imap.full_idx] + 1e-3
        analytic = jacobian_subsystem(ctx, partition, i, x)
        numeric = central_difference(lambda z: residual_subsystem(ctx, partition, i, z), x)
        assert analytic.shape == (ctx.imap.n_unknowns, ctx.imap.n_unknowns)
        assert np.max(np.abs(analytic - numeric)) / max(1.0, np.max(np.abs(analytic))) <= 1e-5


def test_second_subsystem_row_count(ne39, ne39_init):
    partition = partition_preset("table2-3", ne39)
    ctx = sub_context(ne39_init, partition.subsystems[1], ne39_init.x0)
    r = residual_subsystem(ctx, partition, 1, ne39_init.x0[ctx.imap.full_idx])
    assert len(r) == 2 * 2 + 2 * 2


def test_island_ignores_external_values(two_islands):
    init = init_dynamic_state(two_islands, solve_powerflow(two_islands))
    partition = Partition(subsystems=[[1, 2, 3], [4, 5]])
    imap = UnknownIndexMap.build(init.grid, [4, 5])
    assert imap.coupled_external == ()

    other = init.x0.copy()
    first_island = UnknownIndexMap.build(init.grid, [1, 2, 3]).full_idx
    other[first_island] += 0.3
    x = init.x0[imap.full_idx] + 1e-3
    r1 = residual_subsystem(sub_context(init, [4, 5], init.x0), partition, 1, x)
    r2 = residual_subsystem(sub_context(init, [4, 5], other), partition, 1, x)
    np.testing.assert_array_equal(r1, r2)


def test_missing_external_values(ne39, ne39_init):
    buses = partition_preset("table2-3", ne39).subsystems[1]
    with pytest.raises(MissingExternalValue):
        sub_context(ne39_init, buses, None)
    gaps = ne39_init.x0.copy()
    gaps[:] = np.nan
    with pytest.raises(MissingExternalValue):
        sub_context(ne39_init, buses, gaps)


def test_length_checks(ne39, ne39_init):
    ctx = full_context(ne39_init)
    with pytest.raises(DimensionMismatch):
        residual_full(ctx, np.zeros(75))
    with pytest.raises(DimensionMismatch):
        jacobian_full(ctx, np.zeros(77))
    partition = partition_preset("table2-3", ne39)
    with pytest.raises(DimensionMismatch):
        residual_subsystem(ctx, partition, 0, ne39_init.x0)


def test_outputs_at_equilibrium(ne39_pf, ne39_init):
    grid = ne39_init.grid
    v, theta = bus_voltages(grid, ne39_init.imap, ne39_init.x0)
    pe, qe = recover_outputs(grid, v, theta, grid.p_load, grid.q_load)
    np.testing.assert_allclose(pe, [g.p_mech for g in grid.generators], atol=1e-8)
    np.testing.assert_allclose(qe, ne39_pf.qe, atol=1e-12)


def test_lossless_outputs_balance_loads(smib):
    v = np.ones(3)
    theta = np.zeros(3)
    pe, _ = recover_outputs(smib, v, theta, smib.p_load, smib.q_load)
    np.testing.assert_allclose(pe, [0.0, 0.0], atol=1e-12)

    pf = solve_powerflow(smib)
    assert pf.pe.sum() - smib.p_load.sum() == pytest.approx(0.0, abs=1e-9)
    assert network_losses_series(smib, pf.v[None, :], pf.delta[None, :])[0] == pytest.approx(0.0, abs=1e-9)


@pytest.fixture(scope="module")
def disturbed_run(ne39, ne39_init, paper_scenario):
    solver = DirectIntegrationSolver(ne39, scenario_for_horizon(paper_scenario, 1.0), ne39_init)
    traj, _ = solver.run()
    return solver, traj


def test_losses_nonnegative_after_disturbance(disturbed_run):
    solver, traj = disturbed_run
    losses = traj.losses(solver.grid)
    assert losses.shape == (21,)
    assert np.all(losses >= 0.0)
    # load rows hold to Newton tolerance, so the balance closes to that level
    balance = traj.pe.sum(axis=1) - solver.loads.p.sum(axis=1)
    np.testing.assert_allclose(balance, losses, atol=1e-6)


def test_residual_series_on_stepped_rows(ne39_init, disturbed_run):
    solver, traj = disturbed_run
    norms = residual_series(solver.grid, ne39_init.imap, traj.x, solver.loads, solver.h)
    assert norms[0] == 0.0
    assert np.max(norms) <= 1e-8
    np.testing.assert_array_equal(solver.residual_rows(traj.x), norms)

    frozen = np.tile(ne39_init.x0, (len(traj.x), 1))
    assert np.max(residual_series(solver.grid, ne39_init.imap, frozen, solver.loads, solver.h)) > 1e-3


def test_residual_series_needs_whole_grid(ne39_init, disturbed_run):
    solver, traj = disturbed_run
    imap = UnknownIndexMap.build(ne39_init.grid, [1, 2, 25, 30, 37])
    with pytest.raises(DimensionMismatch):
        residual_series(solver.grid, imap, traj.x, solver.loads, solver.h)
    with pytest.raises(DimensionMismatch):
        residual_series(solver.grid, ne39_init.imap, traj.x[:5], solver.loads, solver.h)
