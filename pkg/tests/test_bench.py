import orjson
import pandas as pd
import pytest

from bench.workflow import bench_paper, load_scenario, run_scenario
from main import main
from pydantic_models import Method, Scenario


def write_json(path, data):
    path.write_bytes(orjson.dumps(data))
    return path


@pytest.fixture
def islands_files(tmp_path, two_islands):
    network = write_json(tmp_path / "islands.json", two_islands.model_dump(mode="json"))
    partition = write_json(tmp_path / "split.json", [[1, 2, 3], [4, 5]])
    scenario = write_json(tmp_path / "islands_scenario.json", {
        "name": "islands",
        "network": str(network),
        "h": 0.05,
        "T": 1.0,
        "disturbances": [
            {"t_start": 0.1, "t_end": 0.3, "bus": 3, "action": "ScaleLoad", "factor": 1.5},
            {"t_start": 0.2, "t_end": 0.4, "bus": 5, "action": "DisconnectLoad"},
        ],
        "partition": str(partition),
        "t_win": 0.25,
    })
    return {"network": network, "partition": partition, "scenario": scenario}


def test_load_scenario_reads_schedule_file(tmp_path):
    write_json(tmp_path / "events.json", [{"t_start": 0.2, "t_end": 0.4, "bus": 29, "action": "DisconnectLoad"}])
    path = write_json(tmp_path / "s.json", {"h": 0.05, "T": 1.0, "disturbances": "events.json"})
    scenario = load_scenario(path, method="wr")
    assert scenario.method == Method.WR
    assert scenario.disturbances[0].bus == 29
    assert scenario.n_steps == 20


def test_paper_scenario_file(paper_scenario):
    assert (paper_scenario.h, paper_scenario.T, paper_scenario.n_steps) == (0.05, 20.0, 400)
    assert [d.bus for d in paper_scenario.disturbances] == [29, 25, 23]
    assert paper_scenario.window_length == 0.05


def test_di_run_report(ne39, ne39_init, paper_scenario, tmp_path):
    report = run_scenario(paper_scenario, ne39, ne39_init)
    assert report.trajectory.n_times == 401
    assert report.iterations == 400

    out = report.save(tmp_path / "di")
    for name in ("trajectory.csv", "stats.csv", "metadata.json", "timings.json"):
        assert (out / name).exists()
    frame = pd.read_csv(out / "trajectory.csv")
    assert len(frame) == 401
    assert frame["t"].iloc[-1] == pytest.approx(20.0)

    metadata = orjson.loads((out / "metadata.json").read_bytes())
    assert Scenario(**metadata["scenario"]) == paper_scenario
    assert metadata["rows"] == 401


def test_saved_outputs_are_deterministic(two_islands, islands_scenario, tmp_path):
    scenario = islands_scenario.model_copy(update={"method": Method.WR})
    first = run_scenario(scenario, two_islands).save(tmp_path / "a")
    second = run_scenario(scenario, two_islands).save(tmp_path / "b")
    for name in ("trajectory.csv", "stats.csv", "metadata.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert (first / "times.csv").exists()


def test_windowed_report_keeps_window_stats(two_islands, islands_scenario, tmp_path):
    scenario = islands_scenario.model_copy(update={"method": Method.WRW, "t_win": 0.25})
    report = run_scenario(scenario, two_islands)
    assert report.iterations == [2, 2, 2, 2]
    assert len(report.window_stats) == 4
    stats = pd.read_csv(report.save(tmp_path) / "stats.csv")
    assert list(stats["window"]) == [1, 2, 3, 4]
    assert (stats["final_delta"] == 0.0).all()


def test_bench_on_islands(islands_files, tmp_path):
    scenario = load_scenario(islands_files["scenario"])
    split = str(islands_files["partition"])
    results = bench_paper(
        tmp_path / "bench", scenario, presets=[split], horizons=[0.5, 1.0],
        generators=[2, 3], error_preset=split,
    )
    row = results["solve_times"].iloc[0]
    assert (row["p"], row["wr_iterations"], row["wrw_iterations"]) == (2, 2, 8)
    assert set(results["errors"].columns) == {
        "WR min", "WR max", "WR average", "WRW min", "WRW max", "WRW average",
    }
    assert results["errors"].abs().max().max() <= 1e-4
    assert list(results["sweep"]["T"]) == [0.5, 1.0]
    for name in ("solve_times.csv", "percent_errors.csv", "horizon_sweep.csv", "bench_summary.json"):
        assert (tmp_path / "bench" / name).exists()


def test_bench_marks_failed_cells(islands_files, tmp_path):
    scenario = load_scenario(islands_files["scenario"], wr={"k_max": 1})
    results = bench_paper(tmp_path / "bench", scenario, presets=["singletons"], horizons=[0.5],
                          generators=[2, 3], error_preset="singletons")
    row = results["solve_times"].iloc[0]
    assert row["wr_time"] == "failed: WrDivergence"
    assert row["wrw_time"] == "failed: WindowFailure"
    assert results["errors"].empty
    assert results["sweep"].loc[0, "wr_time"] == "failed: WrDivergence"
    assert isinstance(results["sweep"].loc[0, "di_time"], float)


# ---- command line ------------------------------------------------------------

def test_cli_rejects_non_integral_grid(tmp_path, capsys):
    path = write_json(tmp_path / "bad.json", {"h": 0.3, "T": 20.0})
    assert main(["run", "--scenario", str(path), "--out", str(tmp_path)]) == 1
    assert "T/h not integral" in capsys.readouterr().err


def test_cli_missing_file(tmp_path):
    assert main(["run", "--scenario", str(tmp_path / "nowhere.json"), "--out", str(tmp_path)]) == 3


def test_cli_run_writes_artifacts(islands_files, tmp_path):
    code = main(["run", "--scenario", str(islands_files["scenario"]), "--method", "wrw",
                 "--mode", "seidel", "--out", str(tmp_path), "--omega-pu"])
    assert code == 0
    out = tmp_path / "islands" / "wrw"
    frame = pd.read_csv(out / "trajectory.csv")
    assert len(frame) == 21
    assert frame["omega_2"].iloc[0] == pytest.approx(1.0)
    assert orjson.loads((out / "metadata.json").read_bytes())["windows"] == 4


def test_cli_solver_failure_exit_code(islands_files, tmp_path):
    path = write_json(tmp_path / "tight.json", {
        **orjson.loads(islands_files["scenario"].read_bytes()),
        "partition": [[1, 2], [3], [4, 5]],
        "wr": {"k_max": 1},
    })
    assert main(["run", "--scenario", str(path), "--method", "wr", "--out", str(tmp_path)]) == 2


def test_cli_dump_init(tmp_path):
    assert main(["dump-init", "--out", str(tmp_path)]) == 0
    frame = pd.read_csv(tmp_path / "initial_point.csv")
    assert len(frame) == 39


def test_cli_validate(islands_files, tmp_path, capsys):
    assert main(["validate", "--scenario", str(islands_files["scenario"])]) == 0
    bad = write_json(tmp_path / "overlap.json", [[1, 2, 3], [3, 4, 5]])
    assert main(["validate", "--scenario", str(islands_files["scenario"]), "--partition", str(bad)]) == 1
    assert "duplicate bus 3" in capsys.readouterr().err
