"""Smallest certifiable tolerance for a (metric, method) pair.

Every robust check loosens as eps grows, so the set of passing tolerances is an
interval (eps*, 1). The search first evaluates a coarse grid to confirm that
shape on the instance at hand, then bisects inside the bracketing grid cell.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..network.loads import LoadState
from ..network.model import NetworkModel
from ..robust.dispatch import evaluate
from ..robust.verdict import RobustVerdict, validate_request
from ..solvability.disks import DiskBundle, build_disks
from ..solvability.stress import DELTA_CLAMP, compute_stress

logger = logging.getLogger(__name__)

DEFAULT_EPS_LO = 1e-4
DEFAULT_EPS_HI = 1.0 - 1e-4
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 40
DEFAULT_GRID_POINTS = 9


class BalancibilityException(Exception):
    """Raised when a balancibility question cannot be answered for an instance."""
    pass


class Unbalanceable(BalancibilityException):
    """The method fails even at the largest tolerance searched."""

    def __init__(self, message: str, eps_hi: float, verdict: Optional[RobustVerdict] = None):
        super().__init__(message)
        self.eps_hi = eps_hi
        self.verdict = verdict


@dataclass(frozen=True)
class EpsilonSearch:
    """Result of a tolerance search.

    epsilon passes; epsilon - tol fails unless epsilon is the lower end.
    """

    metric: Any
    method: Any
    epsilon: float
    iterations: int
    grid: Tuple[Tuple[float, bool], ...]
    verdict: RobustVerdict


def search_disks(
    disks: DiskBundle,
    metric,
    method,
    tol: float = DEFAULT_TOL,
    eps_lo: float = DEFAULT_EPS_LO,
    eps_hi: float = DEFAULT_EPS_HI,
    max_iter: int = DEFAULT_MAX_ITER,
    grid_points: int = DEFAULT_GRID_POINTS,
    **robust_options,
) -> EpsilonSearch:
    """Bisect for the smallest passing eps over a fixed disk bundle.

    Args:
        disks: Disk bundle of the critical node
        metric: Metric to certify
        method: Certification method
        tol: Final bracket width
        eps_lo: Lower end of the search interval
        eps_hi: Upper end of the search interval
        max_iter: Bisection step cap
        grid_points: Points of the monotonicity pre-check, ends included
        **robust_options: Passed to robust.dispatch.evaluate

    Returns:
        EpsilonSearch

    Raises:
        ValueError: On an invalid interval or tolerance
        Unbalanceable: If the method fails at eps_hi
        BalancibilityException: If the grid shows a pass followed by a fail
    """
    metric, method = validate_request(metric, method)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not 0.0 < eps_lo < eps_hi < 1.0:
        raise ValueError(f"Need 0 < eps_lo < eps_hi < 1, got [{eps_lo}, {eps_hi}]")
    # bisection only needs pass/fail, not the exactness label or the tightest bound
    robust_options.setdefault("check_exactness", False)
    robust_options.setdefault("lgr_stop_at", 0.0)

    verdicts: Dict[float, RobustVerdict] = {}

    def check(eps: float) -> bool:
        if eps not in verdicts:
            verdicts[eps] = evaluate(disks, metric, method, eps, **robust_options)
        return verdicts[eps].passed

    grid = [float(x) for x in np.linspace(eps_lo, eps_hi, grid_points)]
    outcomes = [check(eps) for eps in grid]
    first_pass = next((i for i, ok in enumerate(outcomes) if ok), None)
    if first_pass is None:
        raise Unbalanceable(
            f"{metric.value}/{method.value} fails at eps={eps_hi:g} on node {disks.node}",
            eps_hi=eps_hi, verdict=verdicts[grid[-1]],
        )
    if not all(outcomes[first_pass:]):
        raise BalancibilityException(
            f"{metric.value}/{method.value} is not monotone in eps on node {disks.node}: "
            f"{[(round(e, 6), ok) for e, ok in zip(grid, outcomes)]}"
        )
    grid_record = tuple(zip(grid, outcomes))
    if first_pass == 0:
        return EpsilonSearch(metric, method, eps_lo, 0, grid_record, verdicts[eps_lo])

    lo, hi = grid[first_pass - 1], grid[first_pass]
    iterations = 0
    while hi - lo > tol and iterations < max_iter:
        mid = 0.5 * (lo + hi)
        if check(mid):
            hi = mid
        else:
            lo = mid
        iterations += 1
    if hi - lo > tol:
        logger.warning(f"Bisection stopped after {iterations} steps with bracket width {hi - lo:.2e}")

    logger.debug(f"{metric.value}/{method.value}: min eps {hi:.6g} after {iterations} bisection steps")
    return EpsilonSearch(metric, method, hi, iterations, grid_record, verdicts[hi])


def min_epsilon(
    model: NetworkModel,
    loads: LoadState,
    critical_node: str,
    metric,
    method,
    tol_eps: float = DEFAULT_TOL,
    eps_lo: float = DEFAULT_EPS_LO,
    eps_hi: float = DEFAULT_EPS_HI,
    max_iter: int = DEFAULT_MAX_ITER,
    grid_points: int = DEFAULT_GRID_POINTS,
    delta_clamp: float = DELTA_CLAMP,
    **robust_options,
) -> float:
    """Smallest tolerance at which a method certifies a critical node.

    Raises:
        BalancibilityException: If the solvability certificate fails
        Unbalanceable: If the method fails even at eps_hi
    """
    stress = compute_stress(model, loads, delta_clamp)
    if not stress.feasible:
        raise BalancibilityException("Solvability certificate fails; no tolerance can be certified")
    disks = build_disks(model, loads, stress, critical_node)
    result = search_disks(
        disks, metric, method,
        tol=tol_eps, eps_lo=eps_lo, eps_hi=eps_hi, max_iter=max_iter, grid_points=grid_points,
        **robust_options,
    )
    return result.epsilon
