"""Single entry point mapping a (metric, method) request to its robust check."""

import logging
from typing import Optional

from ..solvability.disks import DiskBundle
from ..unbalance.metrics import Metric, PvurVariant, SequenceKind
from .dual import (
    DEFAULT_DELTA,
    DEFAULT_NM_MAX_ITER,
    DEFAULT_PG_MAX_ITER,
    DEFAULT_PG_TOL,
    DEFAULT_PSD_TOL,
    DEFAULT_RESTARTS,
    vuf_lgr,
)
from .magnitude import robust_lvur_linebound, robust_lvur_magbound, robust_pvur
from .verdict import Method, RobustVerdict, validate_request
from .vuf import vuf_bound, vuf_polytope

logger = logging.getLogger(__name__)

DEFAULT_POLYTOPE_M = 32


def evaluate(
    disks: DiskBundle,
    metric,
    method,
    eps: float,
    m: int = DEFAULT_POLYTOPE_M,
    lgr_delta: float = DEFAULT_DELTA,
    lgr_restarts: int = DEFAULT_RESTARTS,
    lgr_max_iter: int = DEFAULT_NM_MAX_ITER,
    lgr_stop_at: Optional[float] = None,
    psd_tol: float = DEFAULT_PSD_TOL,
    check_exactness: bool = True,
    pg_tol: float = DEFAULT_PG_TOL,
    pg_max_iter: int = DEFAULT_PG_MAX_ITER,
) -> RobustVerdict:
    """Run one robust balance check.

    Args:
        disks: Disk bundle of the critical node
        metric: Metric or its name (pvur, pvur-maxmin, lvur, vuf-n, vuf-0)
        method: Method or its name
        eps: Tolerance in (0, 1)
        m: Polygon parameter for the polytope method
        check_exactness: Label LGR verdicts with the strong-duality checks
        lgr_stop_at: Let the LGR search end at the first bound at or below this
            value (0.0 keeps pass/fail exact while skipping the full minimization)

    Returns:
        RobustVerdict

    Raises:
        ValueError: If the method does not apply to the metric
    """
    metric, method = validate_request(metric, method)

    if metric is Metric.PVUR:
        verdict = robust_pvur(disks, eps, PvurVariant.AVG_DEVIATION)
    elif metric is Metric.PVUR_MAXMIN:
        verdict = robust_pvur(disks, eps, PvurVariant.MAX_MINUS_MIN)
    elif metric is Metric.LVUR:
        if method is Method.LINE_BOUND:
            verdict = robust_lvur_linebound(disks, eps)
        else:
            verdict = robust_lvur_magbound(disks, eps)
    else:
        which = SequenceKind.NEGATIVE if metric is Metric.VUF_N else SequenceKind.ZERO
        if method is Method.BOUND:
            verdict = vuf_bound(disks, eps, which)
        elif method is Method.POLYTOPE:
            verdict = vuf_polytope(disks, eps, m, which)[3]
        else:
            verdict = vuf_lgr(
                disks, eps, which,
                delta=lgr_delta,
                restarts=lgr_restarts,
                max_iter=lgr_max_iter,
                stop_at=lgr_stop_at,
                psd_tol=psd_tol,
                check_exactness=check_exactness,
                pg_tol=pg_tol,
                pg_max_iter=pg_max_iter,
            )[2]

    logger.debug(
        f"{metric.value}/{method.value} at eps={eps:g}: "
        f"{'pass' if verdict.passed else 'fail'} (worst {verdict.worst:.6g})"
    )
    return verdict
