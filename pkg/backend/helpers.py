"""Console summaries for runs and benches."""

from typing import Optional

import pandas as pd

from cross_platform_utils import CrossPlatformEmoji


def print_run_summary(report, out_dir: Optional[str] = None):
    """Print only the headline numbers of one run."""
    print(f"\n=== {report.method.value.upper()} RUN: {report.scenario.name} ===")
    traj = report.trajectory
    print(f"Grid: {traj.n_times} time points, h={report.scenario.h:g} s, T={report.scenario.T:g} s")

    if report.partition is not None:
        sizes = ", ".join(str(len(s)) for s in report.partition.subsystems)
        print(f"Partition: {report.partition.name} (p={report.partition.p}; sizes {sizes})")

    if report.di_stats is not None:
        stats = report.di_stats
        print(f"Newton: {sum(stats.newton_iters)} iterations over {len(stats.newton_iters)} steps")
        print(f"Solve time: {stats.total_solve_time:.4f} s")

    if report.wr_stats is not None:
        stats = report.wr_stats
        print(f"Sweeps: {stats.iterations}, final delta {stats.deltas[-1]:.3e}")
        print(f"Parallel time: {stats.parallel_time:.4f} s (serial sum {stats.total_time:.4f} s)")

    if report.wrw_stats is not None:
        stats = report.wrw_stats
        iterations = stats.iterations
        print(f"Windows: {len(stats.windows)}, sweeps per window {min(iterations)}-{max(iterations)}")
        print(f"Parallel time: {stats.parallel_time:.4f} s, "
              f"{stats.average_window_time * 1000:.2f} ms per window")

    if out_dir:
        print(f"{CrossPlatformEmoji.get('💾')} Artifacts: {out_dir}")


def print_error_table(table: pd.DataFrame):
    print("\n=== PERCENT ERROR AGAINST DI ===")
    if table.empty:
        print("(no converged relaxation runs)")
        return
    print(table.to_string(float_format=lambda v: f"{v:.4f}"))


def print_bench_summary(results: dict):
    """Solve-time table, horizon sweep and the per-window figure."""
    print("\n=== SOLVE TIME BY PARTITION ===")
    print(results["solve_times"].to_string(index=False))

    print_error_table(results["errors"])

    print("\n=== SOLVE TIME BY HORIZON ===")
    print(results["sweep"].to_string(index=False))

    summary = results["summary"]
    if summary.get("average_window_time") is not None:
        print(f"\n{CrossPlatformEmoji.get('⏱️')} WRW average per window: "
              f"{summary['average_window_time'] * 1000:.2f} ms "
              f"(window length {summary['window_length'] * 1000:.0f} ms)")
