"""The full balancibility condition.

A loading is balancible at a critical node when the solvability certificate
holds and every requested robust balance check passes over the node's disks.
Several nodes and several (metric, method, eps) requirements can be combined
in one call.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from ..network.loads import LoadState
from ..network.model import NetworkModel
from ..powerflow.solver import DEFAULT_MAX_ITER, DEFAULT_TOL, PowerFlowDivergence
from ..robust.dispatch import evaluate
from ..robust.verdict import Method, RobustVerdict, check_epsilon, validate_request
from ..solvability.disks import DiskBundle, build_disks
from ..solvability.stress import DELTA_CLAMP, StressSummary, compute_stress
from ..unbalance.metrics import Metric
from .oracle import node_voltages, solve_scenario, true_unbalance
from .search import BalancibilityException, search_disks

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BalanceRequest:
    """One robust balance requirement."""

    metric: Metric
    method: Method
    epsilon: float

    def __post_init__(self):
        metric, method = validate_request(self.metric, self.method)
        object.__setattr__(self, "metric", metric)
        object.__setattr__(self, "method", method)
        object.__setattr__(self, "epsilon", check_epsilon(self.epsilon))

    @classmethod
    def parse(cls, text: str) -> "BalanceRequest":
        """Parse "metric:method:eps", e.g. "vuf-n:lgr:0.02"."""
        parts = [p.strip() for p in text.split(":")]
        if len(parts) != 3:
            raise ValueError(f"Request '{text}' must look like metric:method:eps")
        return cls(parts[0], parts[1], float(parts[2]))

    def __str__(self) -> str:
        return f"{self.metric.value}:{self.method.value}:{self.epsilon:g}"


@dataclass(frozen=True)
class NodeCertificate:
    """Verdicts for one critical node."""

    node: str
    disks: DiskBundle
    verdicts: Tuple[Tuple[BalanceRequest, RobustVerdict], ...]
    min_eps: Dict[Tuple[Metric, Method], Optional[float]] = field(default_factory=dict)
    true_unbalance: Optional[Dict[Metric, float]] = None

    @property
    def passed(self) -> bool:
        return all(verdict.passed for _, verdict in self.verdicts)


@dataclass(frozen=True)
class BalanceCertificate:
    """Outcome of the balancibility condition for one scenario."""

    scenario: str
    solvable: bool
    stress: StressSummary
    nodes: Tuple[NodeCertificate, ...] = ()

    @property
    def balanced(self) -> bool:
        return self.solvable and bool(self.nodes) and all(node.passed for node in self.nodes)

    def node(self, node: str) -> NodeCertificate:
        for certificate in self.nodes:
            if certificate.node == str(node):
                return certificate
        raise KeyError(node)


def _as_requests(requests: Iterable[Any]) -> List[BalanceRequest]:
    parsed = []
    for request in requests:
        if isinstance(request, BalanceRequest):
            parsed.append(request)
        elif isinstance(request, str):
            parsed.append(BalanceRequest.parse(request))
        else:
            parsed.append(BalanceRequest(*request))
    if not parsed:
        raise ValueError("At least one balance request is required")
    return parsed


def certify(
    model: NetworkModel,
    loads: LoadState,
    critical_nodes: Sequence[str],
    requests: Iterable[Any],
    scenario: str = "scenario",
    compute_true: bool = False,
    search_min_eps: bool = False,
    delta_clamp: float = DELTA_CLAMP,
    pf_tol: float = DEFAULT_TOL,
    pf_max_iter: int = DEFAULT_MAX_ITER,
    search_options: Optional[Mapping[str, Any]] = None,
    **robust_options,
) -> BalanceCertificate:
    """Evaluate the balancibility condition.

    Args:
        model: Network model
        loads: Nominal point and actual loading
        critical_nodes: Three-phase buses to certify
        requests: BalanceRequest objects, "metric:method:eps" strings or tuples
        scenario: Label carried into the certificate
        compute_true: Also solve the power flow and record the true unbalance
        search_min_eps: Also search the smallest passing eps per (metric, method)
        search_options: Keyword arguments for the eps search
        **robust_options: Passed to robust.dispatch.evaluate

    Returns:
        BalanceCertificate; an unsolvable instance carries no node results

    Raises:
        ValueError: On malformed requests
        NetworkException: If a critical node is unknown or not three-phase
    """
    requests = _as_requests(requests)
    if not critical_nodes:
        raise ValueError("At least one critical node is required")

    stress = compute_stress(model, loads, delta_clamp)
    if not stress.feasible:
        logger.info(f"Scenario {scenario}: solvability certificate fails, skipping balance checks")
        return BalanceCertificate(scenario=scenario, solvable=False, stress=stress)

    result = None
    if compute_true:
        try:
            result = solve_scenario(model, loads, tol=pf_tol, max_iter=pf_max_iter)
        except PowerFlowDivergence as e:
            raise BalancibilityException(f"Power flow diverged on a certified scenario: {e}") from e

    nodes = []
    for node in critical_nodes:
        disks = build_disks(model, loads, stress, node)
        verdicts = tuple((req, evaluate(disks, req.metric, req.method, req.epsilon, **robust_options))
                         for req in requests)

        min_eps: Dict[Tuple[Metric, Method], Optional[float]] = {}
        if search_min_eps:
            for req in requests:
                key = (req.metric, req.method)
                if key in min_eps:
                    continue
                try:
                    min_eps[key] = search_disks(
                        disks, req.metric, req.method, **dict(search_options or {}), **robust_options
                    ).epsilon
                except BalancibilityException as e:
                    logger.warning(f"Node {node}: no tolerance found for {req.metric.value}/{req.method.value}: {e}")
                    min_eps[key] = None

        truth = true_unbalance(node_voltages(model, result, node)) if result is not None else None
        certificate = NodeCertificate(
            node=str(node), disks=disks, verdicts=verdicts, min_eps=min_eps, true_unbalance=truth
        )
        for req, verdict in verdicts:
            logger.info(
                f"Node {node} {req}: {'pass' if verdict.passed else 'FAIL'} "
                f"({verdict.exactness.value}, worst {verdict.worst:.6g})"
            )
        nodes.append(certificate)

    return BalanceCertificate(scenario=scenario, solvable=True, stress=stress, nodes=tuple(nodes))
