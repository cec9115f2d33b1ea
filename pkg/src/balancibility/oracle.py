"""Power-flow oracle: the unbalance actually reached at a scenario."""

import logging
from typing import Dict

import numpy as np

from ..network.loads import LoadState
from ..network.model import NetworkModel
from ..powerflow.solver import (
    DEFAULT_BLOWUP,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    PowerFlowResult,
    solve_fixed_point,
)
from ..unbalance.metrics import Metric, TripleLike, all_metrics

logger = logging.getLogger(__name__)


def solve_scenario(
    model: NetworkModel,
    loads: LoadState,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    blowup: float = DEFAULT_BLOWUP,
) -> PowerFlowResult:
    """Solve the power flow at the actual loading, starting from the nominal point."""
    return solve_fixed_point(
        model, loads.s_actual, init=loads.v_nominal, tol=tol, max_iter=max_iter, blowup=blowup
    )


def node_voltages(model: NetworkModel, result: PowerFlowResult, node: str) -> np.ndarray:
    """Physical a, b, c voltages of a three-phase node."""
    return result.voltages[list(model.three_phase_positions(node))]


def true_unbalance(voltages: TripleLike) -> Dict[Metric, float]:
    """Every unbalance metric at a power-flow solution."""
    return all_metrics(voltages)
