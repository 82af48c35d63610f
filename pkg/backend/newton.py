"""Damped Newton-Raphson for square nonlinear systems."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from config import PIVOT_THRESHOLD
from errors import DimensionMismatch, NonConvergence, SingularJacobian
from pydantic_models import NewtonConfig

ResidualFn = Callable[[np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    norm: float


def _inf_norm(r: np.ndarray) -> float:
    return float(np.max(np.abs(r))) if r.size else 0.0


def newton_solve(
    residual_fn: ResidualFn,
    jacobian_fn: JacobianFn,
    x0: np.ndarray,
    config: Optional[NewtonConfig] = None,
) -> NewtonResult:
    """
    Solve R(x) = 0 starting from x0.

    Each iteration factors J with partial pivoting and takes x + a*dx,
    halving a (up to config.max_halvings times) while the residual norm
    does not decrease. Raises rather than returning an unconverged iterate.
    """
    config = config or NewtonConfig()
    x = np.array(x0, dtype=float, copy=True)
    if x.size == 0:
        return NewtonResult(x=x, iterations=0, norm=0.0)

    r = np.asarray(residual_fn(x), dtype=float)
    if r.shape != x.shape:
        raise DimensionMismatch(f"residual length {r.size} != unknown count {x.size}")
    norm = _inf_norm(r)

    for iteration in range(config.max_iter + 1):
        if norm <= config.tol:
            return NewtonResult(x=x, iterations=iteration, norm=norm)
        if iteration == config.max_iter:
            break

        lu, piv = lu_factor(jacobian_fn(x), check_finite=False)
        pivot = float(np.min(np.abs(np.diag(lu))))
        if not pivot >= PIVOT_THRESHOLD:
            raise SingularJacobian(pivot)
        dx = lu_solve((lu, piv), -r, check_finite=False)

        alpha = config.damping
        x_new = x + alpha * dx
        r_new = np.asarray(residual_fn(x_new), dtype=float)
        norm_new = _inf_norm(r_new)
        halvings = 0
        while not norm_new < norm and halvings < config.max_halvings:
            alpha *= 0.5
            halvings += 1
            x_new = x + alpha * dx
            r_new = np.asarray(residual_fn(x_new), dtype=float)
            norm_new = _inf_norm(r_new)

        x, r, norm = x_new, r_new, norm_new

    raise NonConvergence(config.max_iter, norm, x)
