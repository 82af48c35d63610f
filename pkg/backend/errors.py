"""Exception hierarchy for the simulator."""

from typing import Any, Optional


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(SimulationError):
    """Invalid input data or inconsistent configuration."""


class SolverError(SimulationError):
    """A numerical method failed to produce a solution."""


class UnknownBusReference(ConfigError):
    def __init__(self, bus: int, where: str = ""):
        self.bus = bus
        super().__init__(f"unknown bus {bus}" + (f" referenced by {where}" if where else ""))


class ZeroImpedance(ConfigError):
    def __init__(self, from_bus: int, to_bus: int):
        self.from_bus = from_bus
        self.to_bus = to_bus
        super().__init__(f"branch {from_bus}-{to_bus} has zero series impedance")


class UnknownGenerator(ConfigError):
    def __init__(self, generator: int):
        self.generator = generator
        super().__init__(f"unknown generator {generator}")


class PlanMismatch(ConfigError):
    """Horizon, step size and window length do not line up."""


class GridMismatch(ConfigError):
    """Two trajectories or waveform sets do not share a time grid."""


class DimensionMismatch(ConfigError):
    """Vector length does not match the unknown index map."""


class MissingExternalValue(ConfigError):
    def __init__(self, buses):
        self.buses = list(buses)
        super().__init__(f"no frozen external value for coupled buses {self.buses}")


class AllSamplesExcluded(ConfigError):
    def __init__(self, variable: str):
        self.variable = variable
        super().__init__(f"every reference sample of {variable} is near zero")


class NotConverged(ConfigError):
    """A power flow solution that did not converge was used as an initial point."""


class NonConvergence(SolverError):
    def __init__(self, max_iter: int, norm: float, iterate: Optional[Any] = None):
        self.max_iter = max_iter
        self.norm = norm
        self.iterate = iterate
        super().__init__(f"Newton did not converge in {max_iter} iterations (residual {norm:.3e})")


class SingularJacobian(SolverError):
    def __init__(self, pivot: float):
        self.pivot = pivot
        super().__init__(f"singular Jacobian (smallest pivot {pivot:.3e})")


class StepFailure(SolverError):
    def __init__(self, t: float, cause: Exception):
        self.t = t
        self.cause = cause
        super().__init__(f"step to t={t:.6g} s failed: {cause}")


class WrDivergence(SolverError):
    def __init__(self, k_max: int, delta: float, stats: Optional[Any] = None, reason: str = ""):
        self.k_max = k_max
        self.delta = delta
        self.stats = stats
        self.reason = reason
        message = f"waveform relaxation not converged after {k_max} iterations (delta {delta:.3e})"
        super().__init__(f"{message}: {reason}" if reason else message)


class WindowFailure(SolverError):
    def __init__(self, window: int, cause: Exception):
        self.window = window
        self.cause = cause
        super().__init__(f"window {window} failed: {cause}")
