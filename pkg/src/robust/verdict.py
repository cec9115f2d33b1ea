"""Verdict types shared by every robust certification method."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..unbalance.metrics import Metric


class CertificationException(Exception):
    """Raised when a robust check is undefined for its input."""
    pass


class Method(str, Enum):
    """How a metric is certified over a disk bundle."""

    CLOSED = "closed"
    LINE_BOUND = "line-bound"
    MAG_BOUND = "mag-bound"
    BOUND = "bound"
    POLYTOPE = "polytope"
    LGR = "lgr"


class Exactness(str, Enum):
    EXACT = "exact"
    SAFE = "safe-approximation"
    STRONG_DUALITY = "strong-duality-certified"


class Direction(str, Enum):
    """Inequality each certified worst-case value must satisfy."""

    NON_NEGATIVE = ">=0"
    NON_POSITIVE = "<=0"


VALID_METHODS: Dict[Metric, Tuple[Method, ...]] = {
    Metric.PVUR: (Method.CLOSED,),
    Metric.PVUR_MAXMIN: (Method.CLOSED,),
    Metric.LVUR: (Method.LINE_BOUND, Method.MAG_BOUND),
    Metric.VUF_N: (Method.BOUND, Method.POLYTOPE, Method.LGR),
    Metric.VUF_0: (Method.BOUND, Method.POLYTOPE, Method.LGR),
}


def check_epsilon(eps: float) -> float:
    """Validate a tolerance in the open interval (0, 1)."""
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return eps


def validate_request(metric, method) -> Tuple[Metric, Method]:
    """Normalize a (metric, method) pair and reject combinations that do not exist.

    Raises:
        ValueError: On unknown names or an unsupported combination
    """
    metric = Metric(metric)
    method = Method(method)
    if method not in VALID_METHODS[metric]:
        allowed = ", ".join(m.value for m in VALID_METHODS[metric])
        raise ValueError(f"Method '{method.value}' does not apply to {metric.value} (use one of: {allowed})")
    return metric, method


@dataclass(frozen=True)
class RobustVerdict:
    """Outcome of one robust balance check.

    passed is derived from worst_values and direction, never set independently.
    """

    metric: Metric
    method: Method
    epsilon: float
    passed: bool
    worst_values: Tuple[float, ...]
    exactness: Exactness
    direction: Direction
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_values(
        cls,
        metric: Metric,
        method: Method,
        epsilon: float,
        values: Sequence[float],
        direction: Direction,
        exactness: Exactness,
        diagnostics: Optional[Dict[str, Any]] = None,
    ) -> "RobustVerdict":
        values = tuple(float(v) for v in np.atleast_1d(values))
        if direction is Direction.NON_NEGATIVE:
            passed = all(v >= 0.0 for v in values)
        else:
            passed = all(v <= 0.0 for v in values)
        return cls(
            metric=Metric(metric),
            method=Method(method),
            epsilon=float(epsilon),
            passed=passed,
            worst_values=values,
            exactness=exactness,
            direction=direction,
            diagnostics=dict(diagnostics or {}),
        )

    @property
    def worst(self) -> float:
        """The binding value: smallest for >= 0 rows, largest for <= 0 ones."""
        if self.direction is Direction.NON_NEGATIVE:
            return min(self.worst_values)
        return max(self.worst_values)
