#!/usr/bin/env python3
"""Main entry point for the power-system waveform relaxation simulator."""

import argparse
import sys
from pathlib import Path

# Add backend to path for flat module imports
backend_path = Path(__file__).parent / "backend"
sys.path.insert(0, str(backend_path))

import orjson
from pydantic import ValidationError

from config import OUTPUT_DIR, PAPER_SCENARIO_FILE, SINGLETON_PRESET, TABLE2_PRESETS, BENCH_HORIZONS
from cross_platform_utils import CrossPlatformEmoji, status
from errors import ConfigError, SolverError
from grid_model import load_grid, load_partition, validate_partition
from helpers import print_bench_summary, print_run_summary
from powerflow import dump_operating_point, solve_powerflow
from pydantic_models import Scenario

EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_IO = 3


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    """Re-validate the scenario with command-line settings folded in."""
    data = scenario.model_dump()
    if getattr(args, "method", None):
        data["method"] = args.method
    if getattr(args, "partition", None):
        data["partition"] = args.partition
    if getattr(args, "window", None) is not None:
        data["t_win"] = args.window
    if getattr(args, "slack", None) is not None:
        data["slack_bus"] = args.slack
    if getattr(args, "network", None):
        data["network"] = args.network
    wr = dict(data["wr"])
    if getattr(args, "mode", None):
        wr["mode"] = args.mode
    if getattr(args, "eps", None) is not None:
        wr["eps"] = args.eps
    if getattr(args, "workers", None) is not None:
        wr["workers"] = args.workers
    data["wr"] = wr
    return Scenario(**data)


def _scenario(args) -> Scenario:
    from bench.workflow import load_scenario
    return _apply_overrides(load_scenario(args.scenario), args)


def cmd_run(args) -> int:
    from bench.workflow import run_scenario

    scenario = _scenario(args)
    report = run_scenario(scenario)
    out_dir = Path(args.out) / scenario.name / scenario.method.value
    report.save(out_dir, omega_pu=args.omega_pu)
    print_run_summary(report, str(out_dir))
    return 0


def cmd_bench(args) -> int:
    from bench.workflow import bench_paper

    scenario = _scenario(args)
    presets = list(TABLE2_PRESETS) + ([SINGLETON_PRESET] if args.include_singletons else [])
    results = bench_paper(args.out, scenario, presets=presets, relative_angles=args.relative_angles)
    print_bench_summary(results)
    return 0


def cmd_sweep(args) -> int:
    from bench.workflow import grid_for_scenario
    from config import CSV_FLOAT_FORMAT
    from solvers.windowing import sweep_horizon

    scenario = _scenario(args)
    grid = grid_for_scenario(scenario)
    table = sweep_horizon(grid, scenario, load_partition(scenario.partition, grid), args.horizons)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / "horizon_sweep.csv", index=False, float_format=CSV_FLOAT_FORMAT)
    print(table.to_string(index=False))
    return 0


def cmd_dump_init(args) -> int:
    grid = load_grid(args.network)
    if args.slack is not None:
        grid = grid.with_slack(args.slack)
    pf = solve_powerflow(grid)
    status("⚡", f"Power flow converged in {pf.iterations} iterations")
    dump_operating_point(grid, pf, Path(args.out) / "initial_point.csv")
    return 0


def cmd_validate(args) -> int:
    from bench.workflow import grid_for_scenario

    scenario = _scenario(args)
    grid = grid_for_scenario(scenario)
    grid.admittance()
    partition = load_partition(scenario.partition, grid)
    violations = validate_partition(partition, grid.buses)
    for violation in violations:
        print(f"{CrossPlatformEmoji.get('❌')} {violation}", file=sys.stderr)
    if violations:
        return EXIT_CONFIG
    status("✅", f"{scenario.name}: {grid.n_bus} buses, {len(grid.branches)} branches, "
                 f"{scenario.n_steps} steps, partition {partition.name} (p={partition.p})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wrsim",
        description="Direct integration and waveform relaxation of power-system dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p, method=True):
        p.add_argument("--scenario", default=str(PAPER_SCENARIO_FILE), help="Scenario JSON")
        p.add_argument("--network", help="Network JSON (bundled 39-bus when omitted)")
        p.add_argument("--partition", help="Preset name or partition JSON")
        p.add_argument("--mode", choices=["jacobi", "seidel"])
        p.add_argument("--window", type=float, help="WRW window length in seconds")
        p.add_argument("--eps", type=float, help="Waveform convergence threshold")
        p.add_argument("--workers", type=int, help="Concurrent Jacobi workers")
        p.add_argument("--slack", type=int, help="Slack bus override")
        p.add_argument("--out", default=str(OUTPUT_DIR), help="Output directory")
        if method:
            p.add_argument("--method", choices=["di", "wr", "wrw"])

    run = sub.add_parser("run", help="Simulate one scenario")
    scenario_flags(run)
    run.add_argument("--omega-pu", action="store_true", help="Write rotor speeds in per-unit")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench-paper", help="Solve-time, error and horizon tables on the 39-bus case")
    scenario_flags(bench, method=False)
    bench.add_argument("--relative-angles", action="store_true",
                       help="Percent errors of rotor angles measured from the slack angle")
    bench.add_argument("--include-singletons", action="store_true",
                       help="Add the one-bus-per-subsystem partition")
    bench.set_defaults(func=cmd_bench)

    sweep = sub.add_parser("sweep-horizon", help="Solve time of every method per horizon")
    scenario_flags(sweep, method=False)
    sweep.add_argument("--horizons", type=float, nargs="+", default=list(BENCH_HORIZONS))
    sweep.set_defaults(func=cmd_sweep)

    dump = sub.add_parser("dump-init", help="Write the power-flow operating point to CSV")
    dump.add_argument("--network", help="Network JSON (bundled 39-bus when omitted)")
    dump.add_argument("--slack", type=int, help="Slack bus override")
    dump.add_argument("--out", default=str(OUTPUT_DIR), help="Output directory")
    dump.set_defaults(func=cmd_dump_init)

    check = sub.add_parser("validate", help="Check scenario, network and partition")
    scenario_flags(check)
    check.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"{CrossPlatformEmoji.get('❌')} Configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"{CrossPlatformEmoji.get('❌')} Solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, orjson.JSONDecodeError) as exc:
        print(f"{CrossPlatformEmoji.get('❌')} I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
