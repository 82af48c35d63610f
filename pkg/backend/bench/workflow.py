"""Scenario runner and the reproduction bench."""

import time
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

import sys
from pathlib import Path

# Add paths for imports using pathlib
current_dir = Path(__file__).parent
backend_dir = current_dir.parent
sys.path.insert(0, str(backend_dir))

from bench.state import RunReport
from config import (
    BENCH_ERROR_PRESET, BENCH_GENERATORS, BENCH_HORIZONS, CSV_FLOAT_FORMAT,
    PAPER_SCENARIO_FILE, TABLE2_PRESETS,
)
from cross_platform_utils import CrossPlatformFileOperations, CrossPlatformPaths, status
from errors import SimulationError
from grid_model import GridModel, load_disturbances, load_grid, load_partition
from metrics import error_table, percent_error_stats
from powerflow import InitialState, prepare_initial_state
from pydantic_models import ErrorReport, Method, Partition, Scenario
from solvers.direct_integration import simulate_di
from solvers.waveform_relaxation import simulate_wr
from solvers.windowing import WindowedRelaxationSolver, sweep_horizon


def load_scenario(path: Union[str, Path], **overrides: Any) -> Scenario:
    """
    Read a scenario JSON. `disturbances` may name a separate schedule file
    and `network` a network file, both relative to the scenario.
    """
    path = Path(path)
    data = CrossPlatformFileOperations.read_json(path)
    if isinstance(data.get("disturbances"), str):
        schedule = CrossPlatformPaths.resolve(data["disturbances"], path.parent)
        data["disturbances"] = [d.model_dump() for d in load_disturbances(schedule)]
    if data.get("network"):
        data["network"] = str(CrossPlatformPaths.resolve(data["network"], path.parent))
    data.update({key: value for key, value in overrides.items() if value is not None})
    return Scenario(**data)


def grid_for_scenario(scenario: Scenario) -> GridModel:
    grid = load_grid(scenario.network, omega_s=scenario.omega_s)
    if scenario.slack_bus is not None:
        grid = grid.with_slack(scenario.slack_bus)
    return grid


def run_scenario(
    scenario: Scenario,
    grid: Optional[GridModel] = None,
    init: Optional[InitialState] = None,
    partition: Optional[Partition] = None,
) -> RunReport:
    """Simulate with the scenario's method and collect a RunReport."""
    grid = grid or grid_for_scenario(scenario)
    init = init or prepare_initial_state(grid)
    status("🚀", f"Running {scenario.name}: {scenario.method.value.upper()}, "
                 f"h={scenario.h:g} s, T={scenario.T:g} s")

    if scenario.method == Method.DI:
        trajectory, stats = simulate_di(grid, scenario, init)
        return RunReport(scenario=scenario, method=scenario.method, trajectory=trajectory, di_stats=stats)

    partition = partition or load_partition(scenario.partition, init.grid)
    if scenario.method == Method.WR:
        trajectory, stats = simulate_wr(grid, scenario, partition, init=init)
        return RunReport(scenario=scenario, method=scenario.method, trajectory=trajectory,
                         partition=partition, wr_stats=stats)

    solver = WindowedRelaxationSolver(grid, scenario, partition, init=init)
    trajectory, stats = solver.run()
    return RunReport(scenario=scenario, method=scenario.method, trajectory=trajectory,
                     partition=partition, wrw_stats=stats, window_stats=solver.window_stats)


def _variables(generators: Sequence[int]) -> List[str]:
    return [f"{name}_{g}" for name in ("delta", "omega", "pe") for g in generators]


def _failure(exc: Exception) -> str:
    return f"failed: {type(exc).__name__}"


def bench_paper(
    output_dir: Union[str, Path],
    scenario: Optional[Scenario] = None,
    presets: Sequence[str] = tuple(TABLE2_PRESETS),
    horizons: Sequence[float] = tuple(BENCH_HORIZONS),
    generators: Sequence[int] = tuple(BENCH_GENERATORS),
    relative_angles: bool = False,
    error_preset: str = BENCH_ERROR_PRESET,
) -> Dict[str, Any]:
    """
    DI once, then WR and WRW for every preset. Writes the solve-time table,
    the error statistics for the bench generators, the horizon sweep and a
    summary JSON. Errors and the sweep use error_preset. Only a DI failure
    propagates.
    """
    output_dir = CrossPlatformPaths.ensure_dir(output_dir)
    scenario = scenario or load_scenario(PAPER_SCENARIO_FILE)
    grid = grid_for_scenario(scenario)
    init = prepare_initial_state(grid)
    started = time.perf_counter()

    di = run_scenario(scenario.model_copy(update={"method": Method.DI}), grid, init)
    status("✅", f"DI reference: {di.solve_time:.3f} s")

    rows = []
    reports: Dict[str, RunReport] = {}
    for preset in presets:
        partition = load_partition(preset, init.grid)
        row: Dict[str, Any] = {"partition": preset, "p": partition.p, "di_time": di.solve_time}
        for method in (Method.WR, Method.WRW):
            key = method.value
            try:
                report = run_scenario(scenario.model_copy(update={"method": method}), grid, init, partition)
            except SimulationError as exc:
                status("❌", f"{preset} {key.upper()}: {exc}")
                row[f"{key}_time"] = _failure(exc)
                row[f"{key}_iterations"] = _failure(exc)
                continue
            reports[f"{preset}/{key}"] = report
            row[f"{key}_time"] = report.solve_time
            if method == Method.WR:
                row["wr_iterations"] = report.wr_stats.iterations
            else:
                row["wrw_iterations"] = sum(report.wrw_stats.iterations)
                row["wrw_window_time"] = report.wrw_stats.average_window_time
        rows.append(row)
        status("📊", f"{preset} done")

    solve_table = pd.DataFrame(rows)
    solve_table.to_csv(output_dir / "solve_times.csv", index=False, float_format="%.6g")

    error_reports: List[ErrorReport] = []
    for key, label in (("wr", "WR"), ("wrw", "WRW")):
        report = reports.get(f"{error_preset}/{key}")
        if report is None:
            continue
        error_reports.append(percent_error_stats(
            di.trajectory, report.trajectory, _variables(generators),
            relative_angles=relative_angles, label=label,
        ))
    errors = error_table(error_reports)
    errors.to_csv(output_dir / "percent_errors.csv", float_format=CSV_FLOAT_FORMAT)

    max_abs = {
        report.label: {name: max(stats.absolute_error) for name, stats in report.variables.items()}
        for report in error_reports
    }

    sweep = sweep_horizon(grid, scenario, load_partition(error_preset, init.grid), horizons, init)
    sweep.to_csv(output_dir / "horizon_sweep.csv", index=False, float_format="%.6g")

    wrw = reports.get(f"{error_preset}/wrw")
    summary = {
        "scenario": scenario.model_dump(mode="json"),
        "di_time": di.solve_time,
        "max_absolute_error": max_abs,
        "average_window_time": wrw.wrw_stats.average_window_time if wrw else None,
        "window_length": scenario.window_length,
        "bench_seconds": time.perf_counter() - started,
    }
    CrossPlatformFileOperations.write_json(output_dir / "bench_summary.json", summary)
    status("💾", f"Bench results written to {output_dir}")

    return {
        "solve_times": solve_table,
        "errors": errors,
        "error_reports": error_reports,
        "sweep": sweep,
        "summary": summary,
        "di": di,
        "reports": reports,
    }
