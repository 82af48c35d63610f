"""Error statistics between trajectories."""

from typing import Iterable, List, Union

import numpy as np
import pandas as pd

from config import ZERO_REFERENCE_THRESHOLD
from errors import AllSamplesExcluded, UnknownGenerator
from pydantic_models import ErrorReport, VariableErrorStats
from trajectory import Trajectory


def relative_rotor_angle(traj: Trajectory, generator: int) -> np.ndarray:
    """Rotor angle of a machine measured from the constant slack angle."""
    if generator not in traj.generator_ids:
        raise UnknownGenerator(generator)
    return traj.series(f"delta_{generator}") - traj.slack_angle


def _values(traj: Trajectory, variable: str, relative_angles: bool) -> np.ndarray:
    values = traj.series(variable)
    if relative_angles and variable.startswith("delta_"):
        return values - traj.slack_angle
    return values


def absolute_error_series(ref_traj: Trajectory, test_traj: Trajectory, variable: str) -> np.ndarray:
    ref_traj.check_same_grid(test_traj)
    return np.abs(test_traj.series(variable) - ref_traj.series(variable))


def percent_error_stats(
    ref_traj: Trajectory,
    test_traj: Trajectory,
    variables: Union[str, Iterable[str]],
    relative_angles: bool = False,
    label: str = "",
) -> ErrorReport:
    """
    Signed percent error 100*(test - ref)/ref per time point.

    Samples whose reference is below the zero threshold in magnitude are
    left out of min/max/average and counted as excluded.
    """
    ref_traj.check_same_grid(test_traj)
    if isinstance(variables, str):
        variables = [variables]

    report = ErrorReport(label=label)
    for variable in variables:
        ref = _values(ref_traj, variable, relative_angles)
        test = _values(test_traj, variable, relative_angles)
        keep = np.abs(ref) >= ZERO_REFERENCE_THRESHOLD
        if not keep.any():
            raise AllSamplesExcluded(variable)

        error = 100.0 * (test[keep] - ref[keep]) / ref[keep]
        report.variables[variable] = VariableErrorStats(
            variable=variable,
            min=float(error.min()),
            max=float(error.max()),
            average=float(error.mean()),
            included=int(keep.sum()),
            excluded=int((~keep).sum()),
            absolute_error=np.abs(test - ref).tolist(),
        )
    return report


def error_table(reports: List[ErrorReport]) -> pd.DataFrame:
    """Rows are variables; min/max/average columns per method label."""
    variables: List[str] = []
    for report in reports:
        variables += [name for name in report.variables if name not in variables]

    table = pd.DataFrame(index=pd.Index(variables, name="variable"))
    for report in reports:
        for column in ("min", "max", "average"):
            table[f"{report.label} {column}"] = [
                getattr(report.variables[name], column) if name in report.variables else np.nan
                for name in variables
            ]
    return table
