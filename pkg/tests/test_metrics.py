import numpy as np
import pandas as pd
import pytest

from errors import AllSamplesExcluded, GridMismatch, UnknownGenerator
from metrics import (
    absolute_error_series, error_table, percent_error_stats, relative_rotor_angle,
)
from trajectory import Trajectory

OMEGA_S = 2.0 * np.pi * 60.0


def make_trajectory(delta, omega=None, times=None, slack_angle=0.0):
    """One dynamic machine (id 2) on bus 2 plus the slack machine (id 1) on bus 1."""
    delta = np.asarray(delta, dtype=float)
    n = len(delta)
    omega = np.full(n, OMEGA_S) if omega is None else np.asarray(omega, dtype=float)
    times = np.arange(n) * 0.05 if times is None else np.asarray(times, dtype=float)
    pe = np.column_stack([np.full(n, 0.5), 0.3 + 0.1 * delta])
    return Trajectory(
        times=times,
        x=np.column_stack([delta, omega]),
        delta=delta[:, None],
        omega=omega[:, None],
        v=np.ones((n, 2)),
        theta=np.column_stack([np.full(n, slack_angle), delta]),
        pe=pe,
        qe=np.zeros((n, 2)),
        dynamic_ids=[2],
        generator_ids=[1, 2],
        bus_ids=[1, 2],
        slack_generator=1,
        slack_angle=slack_angle,
        omega_s=OMEGA_S,
    )


def test_series_selectors():
    traj = make_trajectory([0.1, 0.2, 0.3])
    np.testing.assert_array_equal(traj.series("delta_2"), [0.1, 0.2, 0.3])
    np.testing.assert_array_equal(traj.series("omega_1"), np.full(3, OMEGA_S))
    np.testing.assert_array_equal(traj.series("delta_1"), np.zeros(3))
    np.testing.assert_array_equal(traj.series("v_2"), np.ones(3))
    with pytest.raises(UnknownGenerator):
        traj.series("pe_9")
    with pytest.raises(ValueError):
        traj.series("speed")


def test_constant_one_percent_error():
    ref = make_trajectory([0.1, 0.2, 0.4])
    test = make_trajectory([0.101, 0.202, 0.404])
    stats = percent_error_stats(ref, test, "delta_2").variables["delta_2"]
    assert stats.min == pytest.approx(1.0)
    assert stats.max == pytest.approx(1.0)
    assert stats.average == pytest.approx(1.0)
    np.testing.assert_allclose(stats.absolute_error, [0.001, 0.002, 0.004], atol=1e-15)


def test_self_comparison_is_zero():
    traj = make_trajectory([0.3, 0.2, 0.1, 0.0])
    report = percent_error_stats(traj, traj, ["delta_2", "omega_2", "pe_2"], label="DI")
    assert report.label == "DI"
    for stats in report.variables.values():
        assert (stats.min, stats.max, stats.average) == (0.0, 0.0, 0.0)
        assert max(stats.absolute_error) == 0.0


def test_near_zero_reference_samples_excluded():
    ref = make_trajectory([0.0, 0.2, 0.4])
    test = make_trajectory([0.5, 0.22, 0.44])
    stats = percent_error_stats(ref, test, "delta_2").variables["delta_2"]
    assert (stats.included, stats.excluded) == (2, 1)
    assert stats.average == pytest.approx(10.0)
    assert stats.absolute_error[0] == pytest.approx(0.5)


def test_all_samples_excluded():
    ref = make_trajectory([0.0, 0.0])
    with pytest.raises(AllSamplesExcluded) as info:
        percent_error_stats(ref, make_trajectory([0.1, 0.1]), "delta_2")
    assert info.value.variable == "delta_2"


def test_different_grids_rejected():
    ref = make_trajectory([0.1, 0.2, 0.3])
    with pytest.raises(GridMismatch):
        percent_error_stats(ref, make_trajectory([0.1, 0.2]), "delta_2")
    with pytest.raises(GridMismatch):
        absolute_error_series(ref, make_trajectory([0.1, 0.2, 0.3], times=[0.0, 0.1, 0.2]), "delta_2")


def test_swapping_roles_flips_sign():
    a = make_trajectory([0.1, 0.2, 0.3])
    b = make_trajectory([0.1001, 0.2002, 0.2997])
    forward = percent_error_stats(a, b, "delta_2").variables["delta_2"]
    backward = percent_error_stats(b, a, "delta_2").variables["delta_2"]
    assert forward.max > 0 > forward.min
    assert np.sign(backward.min) == -np.sign(forward.max)
    assert absolute_error_series(a, b, "delta_2") == pytest.approx(absolute_error_series(b, a, "delta_2"))


def test_relative_rotor_angle():
    traj = make_trajectory([0.4, 0.5], slack_angle=0.1)
    np.testing.assert_allclose(relative_rotor_angle(traj, 2), [0.3, 0.4])
    np.testing.assert_allclose(relative_rotor_angle(traj, 1), [0.0, 0.0])
    with pytest.raises(UnknownGenerator):
        relative_rotor_angle(traj, 5)


def test_relative_angles_switch():
    ref = make_trajectory([0.3, 0.5], slack_angle=0.1)
    test = make_trajectory([0.302, 0.504], slack_angle=0.1)
    raw = percent_error_stats(ref, test, "delta_2").variables["delta_2"]
    relative = percent_error_stats(ref, test, "delta_2", relative_angles=True).variables["delta_2"]
    assert raw.average == pytest.approx((2.0 / 3.0 + 0.8) / 2.0)
    assert relative.average == pytest.approx(1.0)


def test_error_table_layout():
    ref = make_trajectory([0.1, 0.2])
    wr = percent_error_stats(ref, make_trajectory([0.101, 0.202]), ["delta_2", "omega_2"], label="WR")
    wrw = percent_error_stats(ref, make_trajectory([0.1, 0.2]), ["delta_2"], label="WRW")
    table = error_table([wr, wrw])
    assert list(table.index) == ["delta_2", "omega_2"]
    assert list(table.columns) == [
        "WR min", "WR max", "WR average", "WRW min", "WRW max", "WRW average",
    ]
    assert table.loc["delta_2", "WR average"] == pytest.approx(1.0)
    assert pd.isna(table.loc["omega_2", "WRW max"])


def test_trajectory_frame_columns():
    frame = make_trajectory([0.1, 0.2]).to_frame(omega_pu=True)
    assert list(frame.columns[:3]) == ["t", "delta_2", "omega_2"]
    np.testing.assert_allclose(frame["omega_2"], [1.0, 1.0])
    assert "pe_1" in frame.columns and "theta_2" in frame.columns
