"""Robust VUF checks by bounding and by polygon approximation.

The robust VUF requirement is max J(V) <= 0 over the disks, where
J(V) = V^T (A_x - eps^2 A_p) V. J is strictly convex along every single phase
(eps < 1), so the maximum over a product of convex polygons is attained at a
combination of their vertices. Circumscribed polygons give a safe value F_e,
inscribed ones (vertices on the circles) a lower value F_i.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from ..solvability.disks import DiskBundle
from ..unbalance.forms import build_quadratic_forms
from ..unbalance.metrics import ALPHA, Metric, SequenceKind
from .verdict import Direction, Exactness, Method, RobustVerdict, check_epsilon

logger = logging.getLogger(__name__)


def vuf_metric(which: SequenceKind) -> Metric:
    return Metric.VUF_N if SequenceKind(which) is SequenceKind.NEGATIVE else Metric.VUF_0


def vuf_bound(disks: DiskBundle, eps: float, which: SequenceKind = SequenceKind.NEGATIVE) -> RobustVerdict:
    """Safe VUF check from separate bounds on numerator and positive sequence.

    Passes iff (|numerator(C)| + sum r)^2 <= eps^2 max(|3 V_p(C)| - sum r, 0)^2.
    The single worst value is the left side minus the right side.
    """
    eps = check_epsilon(eps)
    which = SequenceKind(which)
    c = disks.centers
    total_radius = float(disks.radii.sum())
    if which is SequenceKind.NEGATIVE:
        numerator = abs(c[0] + ALPHA ** 2 * c[1] + ALPHA * c[2])
    else:
        numerator = abs(c[0] + c[1] + c[2])
    positive = abs(c[0] + ALPHA * c[1] + ALPHA ** 2 * c[2])

    upper = (numerator + total_radius) ** 2
    lower = max(positive - total_radius, 0.0) ** 2
    value = upper - eps ** 2 * lower
    return RobustVerdict.from_values(
        vuf_metric(which), Method.BOUND, eps, [value], Direction.NON_POSITIVE, Exactness.SAFE,
        {"numerator_upper": upper, "positive_lower": lower},
    )


# ==================== Polygon approximation ====================

class PolygonMode(str, Enum):
    CIRCUMSCRIBED = "circumscribed"
    INSCRIBED = "inscribed"


@dataclass(frozen=True, eq=False)
class CrpVertices:
    """Regular 2m-gon vertices per phase, each an array of shape (2m, 2)."""

    points: Tuple[np.ndarray, np.ndarray, np.ndarray]
    m: int
    mode: PolygonMode


def polygon_angles(m: int) -> np.ndarray:
    k = np.arange(1, 2 * m + 1)
    return (2 * k - 1) * np.pi / (2 * m)


def build_crp(disks: DiskBundle, m: int, mode: PolygonMode = PolygonMode.CIRCUMSCRIBED) -> CrpVertices:
    """Vertices of the regular 2m-gon around (or inside) each disk.

    Circumscribed vertices sit at distance r / cos(pi/2m) from the center,
    inscribed ones at distance r.

    Raises:
        ValueError: If m < 2
    """
    if int(m) != m or m < 2:
        raise ValueError(f"m must be an integer >= 2, got {m}")
    m = int(m)
    mode = PolygonMode(mode)
    phi = polygon_angles(m)
    directions = np.column_stack([np.cos(phi), np.sin(phi)])
    scale = 1.0 / math.cos(math.pi / (2 * m)) if mode is PolygonMode.CIRCUMSCRIBED else 1.0

    points = []
    for center, radius in zip(disks.centers, disks.radii):
        vertices = np.array([center.real, center.imag]) + radius * scale * directions
        vertices.setflags(write=False)
        points.append(vertices)
    return CrpVertices(points=tuple(points), m=m, mode=mode)


def vertex_maximum(matrix: np.ndarray, points) -> Tuple[float, np.ndarray]:
    """Max of x^T M x over all combinations of one point per phase.

    Args:
        matrix: Symmetric 6x6 matrix
        points: Three arrays of shape (K_p, 2)

    Returns:
        (maximum, maximizing 6-vector)
    """
    pa, pb, pc = (np.asarray(p, dtype=float) for p in points)
    blocks = {(i, j): matrix[2 * i:2 * i + 2, 2 * j:2 * j + 2] for i in range(3) for j in range(3)}

    def diagonal(p, i):
        return np.einsum("ki,ij,kj->k", p, blocks[(i, i)], p)

    def cross(p, q, i, j):
        return 2.0 * p @ blocks[(i, j)] @ q.T

    values = (
        diagonal(pa, 0)[:, None, None]
        + diagonal(pb, 1)[None, :, None]
        + diagonal(pc, 2)[None, None, :]
        + cross(pa, pb, 0, 1)[:, :, None]
        + cross(pa, pc, 0, 2)[:, None, :]
        + cross(pb, pc, 1, 2)[None, :, :]
    )
    i, j, k = np.unravel_index(int(np.argmax(values)), values.shape)
    return float(values[i, j, k]), np.concatenate([pa[i], pb[j], pc[k]])


def _distinct(points: np.ndarray, radius: float) -> np.ndarray:
    # a zero-radius polygon is a single point
    return points[:1] if radius == 0 else points


def lipschitz_constant(disks: DiskBundle, eps: float, which: SequenceKind = SequenceKind.NEGATIVE) -> float:
    """Lipschitz constant of J on the product of disks with radii sqrt(2) r.

    That compact set holds every circumscribed polygon with m >= 2.
    """
    matrix = build_quadratic_forms().objective(which, eps)
    max_norm = math.sqrt(float(np.sum((disks.center_magnitudes + math.sqrt(2.0) * disks.radii) ** 2)))
    return 2.0 * float(np.linalg.norm(matrix, 2)) * max_norm


def gap_bound(disks: DiskBundle, eps: float, m: int, which: SequenceKind = SequenceKind.NEGATIVE) -> float:
    """Upper bound on F_e(m) - F_i(m)."""
    factor = 1.0 / math.cos(math.pi / (2 * m)) - 1.0
    return factor * lipschitz_constant(disks, eps, which) * float(np.linalg.norm(disks.radii))


def vuf_polytope(
    disks: DiskBundle, eps: float, m: int, which: SequenceKind = SequenceKind.NEGATIVE
) -> Tuple[float, float, float, RobustVerdict]:
    """Polygon approximation of the robust VUF check.

    Args:
        disks: Disk bundle of the critical node
        eps: Tolerance in (0, 1)
        m: Polygons have 2m sides (m >= 2)
        which: Negative- or zero-sequence VUF

    Returns:
        (F_e, F_i, gap_bound, verdict) with F_i <= true max <= F_e; the verdict
        passes iff F_e <= 0
    """
    eps = check_epsilon(eps)
    which = SequenceKind(which)
    matrix = build_quadratic_forms().objective(which, eps)

    outer = build_crp(disks, m, PolygonMode.CIRCUMSCRIBED)
    inner = build_crp(disks, m, PolygonMode.INSCRIBED)
    f_e, argmax_e = vertex_maximum(matrix, [_distinct(p, r) for p, r in zip(outer.points, disks.radii)])
    f_i, _ = vertex_maximum(matrix, [_distinct(p, r) for p, r in zip(inner.points, disks.radii)])
    bound = gap_bound(disks, eps, m, which)
    logger.debug(f"Polygon m={m}: F_e={f_e:.6g} F_i={f_i:.6g} gap bound={bound:.3g}")

    verdict = RobustVerdict.from_values(
        vuf_metric(which), Method.POLYTOPE, eps, [f_e], Direction.NON_POSITIVE, Exactness.SAFE,
        {"m": m, "f_inner": f_i, "gap_bound": bound, "argmax": argmax_e.tolist()},
    )
    return f_e, f_i, bound, verdict
