"""Configuration settings for the waveform relaxation simulator."""

import math
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Paths
BACKEND_DIR = Path(__file__).parent
DATA_DIR = BACKEND_DIR / "data"
SCENARIO_DIR = DATA_DIR / "scenarios"
DEFAULT_NETWORK_FILE = DATA_DIR / "ne39.json"
PAPER_SCENARIO_FILE = SCENARIO_DIR / "paper.json"
OUTPUT_DIR = Path(os.getenv("WRSIM_OUTPUT_DIR", "output"))

# Console
VERBOSE = os.getenv("WRSIM_VERBOSE", "").lower() in ["1", "true", "yes"]

# System Configuration
OMEGA_S = float(os.getenv("WRSIM_OMEGA_S", 2.0 * math.pi * 60.0))
BASE_MVA = 100.0

# Power flow
POWERFLOW_TOL = 1e-10
POWERFLOW_MAX_ITER = 50

# Newton-Raphson
NEWTON_TOL = 1e-8
NEWTON_MAX_ITER = 25
NEWTON_DAMPING = 1.0
NEWTON_MAX_HALVINGS = 4
PIVOT_THRESHOLD = 1e-14

# Waveform relaxation
WR_EPS = 1e-6
WR_K_MAX = 200
# Unset means one worker per subsystem
WR_WORKERS = int(os.environ["WRSIM_WORKERS"]) if os.getenv("WRSIM_WORKERS") else None
# A sweep delta above this that also grew since the last sweep ends the run
WR_DIVERGENCE_LIMIT = 1.0

# Time grid
TIME_SNAP_TOL = 1e-9
GRID_TOL = 1e-12

# Metrics
ZERO_REFERENCE_THRESHOLD = 1e-9

# Output
CSV_FLOAT_FORMAT = "%.17g"

# Partition presets (solve-time comparison rows). "rest" stands for every bus
# not listed in an earlier subsystem.
PARTITION_PRESETS = {
    "table2-2": [
        [1, 2, 9, 25, 30, 37],
        "rest",
    ],
    "table2-3": [
        [1, 2, 25, 30, 37],
        [22, 23, 35, 36],
        "rest",
    ],
    "table2-4": [
        [1, 2, 25, 30, 37, 39],
        [19, 20, 33, 34],
        [21, 22, 23, 24, 35, 36],
        "rest",
    ],
    "table2-5": [
        [38, 29, 28, 26, 27, 17, 15, 14, 16, 24],
        [39, 1, 2, 30, 25, 37],
        [18, 3, 4, 5, 6, 7, 8, 9, 31, 11, 12, 13, 10, 32],
        [19, 20, 33, 34],
        "rest",
    ],
    "table2-6": [
        [38, 29, 28, 26, 27, 17],
        [37, 25, 2, 30, 1, 39, 3, 18],
        [4, 5, 6, 7, 8, 9, 31, 11, 12, 10, 32, 13],
        [19, 20, 33, 34],
        [23, 24, 36],
        "rest",
    ],
    "table2-7": [
        [1, 2, 25, 30, 37, 39],
        [38, 29, 28, 26, 27],
        [36, 23, 24, 16, 21, 22, 35],
        [19, 20, 33, 34],
        [11, 12, 13, 10, 32],
        [6, 31, 4, 5, 7, 8, 9],
        "rest",
    ],
}
TABLE2_PRESETS = ["table2-2", "table2-3", "table2-4", "table2-5", "table2-6", "table2-7"]
SINGLETON_PRESET = "singletons"

# Bench defaults
BENCH_GENERATORS = [7, 8, 9]
BENCH_ERROR_PRESET = "table2-3"
BENCH_HORIZONS = [5.0, 10.0, 15.0, 20.0]
