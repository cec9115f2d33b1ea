"""Fixed-point power flow in normalized coordinates.

Iterates v <- 1 - Z_hat diag(conj(v))^-1 conj(S_L), the map whose contraction
the solvability certificate analyzes. Physical voltages are V_L = diag(E) v_L.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..network.model import NetworkModel

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500
DEFAULT_BLOWUP = 10.0
ZERO_CROSSING_TOL = 1e-12


class PowerFlowException(Exception):
    """Base exception for power-flow failures."""
    pass


class PowerFlowDivergence(PowerFlowException):
    """The fixed-point iteration did not converge.

    Attributes:
        iterations: Iterations performed before giving up
        last_update: Infinity norm of the last update
        reason: One of "blowup", "max_iter", "zero_crossing"
    """

    def __init__(self, message: str, iterations: int, last_update: float, reason: str):
        super().__init__(message)
        self.iterations = iterations
        self.last_update = last_update
        self.reason = reason


@dataclass(frozen=True, eq=False)
class PowerFlowResult:
    """Converged power-flow solution."""

    v: np.ndarray
    voltages: np.ndarray
    iterations: int
    residual: float

    def u(self, v_nominal: np.ndarray) -> np.ndarray:
        """Voltages relative to a nominal point, u_L = diag(v0)^-1 v_L."""
        return self.v / np.asarray(v_nominal)


def fixed_point_map(model: NetworkModel, s_load: np.ndarray, v: np.ndarray) -> np.ndarray:
    """One application of the normalized power-flow map."""
    return 1.0 - model.z_hat @ (np.conj(s_load) / np.conj(v))


def fixed_point_residual(model: NetworkModel, s_load: np.ndarray, v: np.ndarray) -> float:
    """Infinity norm of v - map(v)."""
    return float(np.max(np.abs(v - fixed_point_map(model, s_load, v))))


def solve_fixed_point(
    model: NetworkModel,
    s_load: np.ndarray,
    init: Optional[np.ndarray] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    blowup: float = DEFAULT_BLOWUP,
) -> PowerFlowResult:
    """Solve the power flow by Picard iteration.

    Args:
        model: Network model
        s_load: Complex power withdrawal per PQ node-phase (p.u.)
        init: Starting normalized voltage (defaults to all ones)
        tol: Stop once the update infinity norm falls below this value
        max_iter: Iteration cap
        blowup: Divergence threshold on |v|

    Returns:
        PowerFlowResult whose residual (the last update norm) is below tol

    Raises:
        ValueError: If tol is not positive or init has zero entries
        PowerFlowDivergence: On blow-up, zero crossing, or hitting max_iter
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    s_load = np.asarray(s_load, dtype=complex)
    if s_load.shape != (model.n_load,):
        raise ValueError(f"s_load has shape {s_load.shape}, expected ({model.n_load},)")

    v = np.ones(model.n_load, dtype=complex) if init is None else np.array(init, dtype=complex)
    if v.shape != (model.n_load,):
        raise ValueError(f"init has shape {v.shape}, expected ({model.n_load},)")
    if np.any(np.abs(v) < ZERO_CROSSING_TOL):
        raise ValueError("init must not contain zero entries")

    update = float("inf")
    for iteration in range(1, max_iter + 1):
        v_next = fixed_point_map(model, s_load, v)
        update = float(np.max(np.abs(v_next - v)))

        if not np.all(np.isfinite(v_next)) or np.max(np.abs(v_next)) > blowup:
            raise PowerFlowDivergence(
                f"Power flow blew up after {iteration} iterations (last update {update:.3e})",
                iterations=iteration, last_update=update, reason="blowup",
            )
        if np.min(np.abs(v_next)) < ZERO_CROSSING_TOL:
            raise PowerFlowDivergence(
                f"Iterate crossed zero after {iteration} iterations",
                iterations=iteration, last_update=update, reason="zero_crossing",
            )
        if update < tol:
            # v is a point whose map moves it by less than tol
            logger.debug(f"Power flow converged in {iteration} iterations (update {update:.3e})")
            return PowerFlowResult(
                v=v, voltages=model.physical(v), iterations=iteration, residual=update
            )
        v = v_next

    raise PowerFlowDivergence(
        f"Power flow did not converge in {max_iter} iterations (last update {update:.3e})",
        iterations=max_iter, last_update=update, reason="max_iter",
    )
