"""Scenario sweeps over a family of load increments.

The nominal point is solved once and shared; each k varies only the actual
loading S_L = S0_L + sigma(k). Rows report the smallest certified tolerance
next to the true unbalance from the power flow at the exact S_L.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..network.loads import LoadState, with_actual
from ..network.model import PHASES, NetworkException, NetworkModel
from ..powerflow.solver import DEFAULT_MAX_ITER, DEFAULT_TOL, PowerFlowDivergence
from ..robust.verdict import CertificationException, Method, validate_request
from ..solvability.disks import build_disks
from ..solvability.stress import DELTA_CLAMP, SolvabilityException, compute_stress
from ..unbalance.metrics import Metric, UnbalanceException
from .oracle import node_voltages, solve_scenario, true_unbalance
from .search import BalancibilityException, search_disks

logger = logging.getLogger(__name__)

DEFAULT_PAIRS: Tuple[Tuple[Metric, Method], ...] = (
    (Metric.PVUR, Method.CLOSED),
    (Metric.LVUR, Method.LINE_BOUND),
    (Metric.VUF_N, Method.LGR),
)

Scenario = Callable[[int], np.ndarray]


@dataclass(frozen=True)
class SweepRow:
    """One (k, metric, method) line of a sweep table."""

    k: int
    metric: Metric
    method: Method
    min_eps: Optional[float]
    true_value: Optional[float]
    ratio: Optional[float]
    solvable: bool
    error: str = ""

    def as_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "metric": self.metric.value,
            "method": self.method.value,
            "min_eps": self.min_eps,
            "true_value": self.true_value,
            "ratio": self.ratio,
            "solvable": self.solvable,
            "error": self.error,
        }


def bus_increment(model: NetworkModel, bus: str, per_phase_kw: Sequence[complex]) -> Scenario:
    """Scenario k -> sigma(k) adding k times a per-phase kW increment at one bus.

    Args:
        model: Network model with a base_kva
        bus: Three-phase PQ bus receiving the increment
        per_phase_kw: Increment of phases a, b, c (kW, or complex kVA)

    Returns:
        Function of k returning sigma in p.u.
    """
    if not model.base_kva:
        raise NetworkException("Increments in kW need a network base_kva")
    increment = np.asarray(per_phase_kw, dtype=complex).reshape(-1)
    if increment.shape != (len(PHASES),):
        raise ValueError(f"Need one increment per phase, got {increment.size}")
    positions = list(model.three_phase_positions(bus))
    unit = np.zeros(model.n_load, dtype=complex)
    unit[positions] = increment / model.base_kva

    def scenario(k: int) -> np.ndarray:
        return k * unit

    return scenario


def _scenario_rows(
    model: NetworkModel,
    nominal: LoadState,
    scenario: Scenario,
    k: int,
    critical_node: str,
    pairs: Sequence[Tuple[Metric, Method]],
    delta_clamp: float,
    pf_tol: float,
    pf_max_iter: int,
    search_options: Dict[str, Any],
    robust_options: Dict[str, Any],
) -> List[SweepRow]:
    def failed(message: str, solvable: bool = False, truth: Optional[Dict[Metric, float]] = None):
        return [
            SweepRow(k, metric, method, None, (truth or {}).get(metric), None, solvable, message)
            for metric, method in pairs
        ]

    try:
        loads = with_actual(model, nominal, nominal.s_nominal + scenario(k))
        stress = compute_stress(model, loads, delta_clamp)
    except (NetworkException, SolvabilityException) as e:
        logger.warning(f"Sweep k={k}: {e}")
        return failed(str(e))

    truth = None
    try:
        result = solve_scenario(model, loads, tol=pf_tol, max_iter=pf_max_iter)
        truth = true_unbalance(node_voltages(model, result, critical_node))
    except (PowerFlowDivergence, UnbalanceException) as e:
        logger.warning(f"Sweep k={k}: no true unbalance ({e})")

    if not stress.feasible:
        return failed("", truth=truth)
    disks = build_disks(model, loads, stress, critical_node)

    rows = []
    for metric, method in pairs:
        true_value = truth.get(metric) if truth else None
        try:
            found = search_disks(disks, metric, method, **search_options, **robust_options)
        except (BalancibilityException, CertificationException, UnbalanceException) as e:
            logger.warning(f"Sweep k={k} {metric.value}/{method.value}: {e}")
            rows.append(SweepRow(k, metric, method, None, true_value, None, True, str(e)))
            continue
        ratio = found.epsilon / true_value if true_value else None
        rows.append(SweepRow(k, metric, method, found.epsilon, true_value, ratio, True))
    return rows


def sweep(
    model: NetworkModel,
    nominal: LoadState,
    scenario: Scenario,
    k_range: Iterable[int],
    critical_node: str,
    pairs: Sequence[Tuple[Any, Any]] = DEFAULT_PAIRS,
    threads: int = 1,
    delta_clamp: float = DELTA_CLAMP,
    pf_tol: float = DEFAULT_TOL,
    pf_max_iter: int = DEFAULT_MAX_ITER,
    search_options: Optional[Dict[str, Any]] = None,
    **robust_options,
) -> List[SweepRow]:
    """Run a scenario family and tabulate min eps against the true unbalance.

    Args:
        model: Network model
        nominal: Nominal load state (its actual loading is ignored)
        scenario: k -> sigma(k), e.g. from bus_increment
        k_range: Scenario indices
        critical_node: Three-phase bus to certify
        pairs: (metric, method) pairs to search
        threads: Scenarios evaluated concurrently
        search_options: Keyword arguments for the eps search
        **robust_options: Passed to robust.dispatch.evaluate

    Returns:
        Rows sorted by k, then by the order of pairs. Per-scenario failures are
        recorded in the row's error field.
    """
    pairs = [validate_request(metric, method) for metric, method in pairs]
    ks = sorted(set(int(k) for k in k_range))
    model.three_phase_positions(critical_node)
    options = dict(search_options or {})

    def run(k: int) -> List[SweepRow]:
        return _scenario_rows(
            model, nominal, scenario, k, critical_node, pairs,
            delta_clamp, pf_tol, pf_max_iter, options, robust_options,
        )

    if threads <= 1 or len(ks) <= 1:
        results = [run(k) for k in ks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, ks))

    order = {pair: i for i, pair in enumerate(pairs)}
    rows = [row for chunk in results for row in chunk]
    rows.sort(key=lambda row: (row.k, order[(row.metric, row.method)]))
    logger.info(f"Sweep over k={ks[0]}..{ks[-1]} produced {len(rows)} rows" if ks else "Empty sweep")
    return rows
