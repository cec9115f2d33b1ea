"""Monte Carlo oracles over disk bundles.

The VUF maximum over a product of disks is attained on the product of the
boundary circles, so the oracle draws one uniform angle per phase. Its value is
a lower estimate of the true maximum: useful for validation, never as a
certificate.

Samples are drawn in fixed-size batches, each from its own child of
SeedSequence(seed). The partition depends only on (n, batch_size), so results
are identical for any number of worker threads.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from ..solvability.disks import DiskBundle
from ..unbalance.forms import build_quadratic_forms, quadratic_values
from ..unbalance.metrics import Metric, PvurVariant, SequenceKind, lvur_rows, pvur_rows
from .magnitude import LINE_PAIRS
from .verdict import check_epsilon

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 65536


@dataclass(frozen=True, eq=False)
class SampleEstimate:
    """Largest sampled objective and where it was found."""

    value: float
    argmax: np.ndarray
    samples: int
    seed: int


def _batches(n: int, batch_size: int) -> List[int]:
    full, rest = divmod(n, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def _draw(disks: DiskBundle, rng: np.random.Generator, size: int, region: str) -> np.ndarray:
    """Points of shape (size, 6); degenerate phases stay at their center."""
    points = np.empty((size, 6))
    for p in range(3):
        center = disks.centers[p]
        radius = disks.radii[p]
        theta = rng.uniform(0.0, 2.0 * np.pi, size)
        if region == "disk":
            # sqrt keeps the density uniform over the area
            radius = radius * np.sqrt(rng.uniform(0.0, 1.0, size))
        points[:, 2 * p] = center.real + radius * np.cos(theta)
        points[:, 2 * p + 1] = center.imag + radius * np.sin(theta)
    return points


def _run_batches(
    n: int,
    seed: int,
    batch_size: int,
    threads: int,
    work: Callable[[np.random.Generator, int], Tuple],
) -> List[Tuple]:
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    sizes = _batches(n, batch_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(np.random.default_rng(child), size) for child, size in zip(children, sizes)]

    if threads <= 1 or len(jobs) == 1:
        return [work(rng, size) for rng, size in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map keeps batch order regardless of completion order
        return list(pool.map(lambda job: work(*job), jobs))


def sample_maximizer(
    disks: DiskBundle,
    eps: float,
    which: SequenceKind = SequenceKind.NEGATIVE,
    n: int = 500000,
    seed: int = 7,
    batch_size: int = DEFAULT_BATCH_SIZE,
    threads: int = 1,
) -> SampleEstimate:
    """Largest J over n random boundary triples, with the maximizing point."""
    eps = check_epsilon(eps)
    matrix = build_quadratic_forms().objective(which, eps)

    def work(rng, size):
        points = _draw(disks, rng, size, "boundary")
        values = quadratic_values(matrix, points)
        best = int(np.argmax(values))
        return float(values[best]), points[best]

    results = _run_batches(n, seed, batch_size, threads, work)
    # first batch wins ties, so the argmax is schedule independent too
    best = max(range(len(results)), key=lambda i: (results[i][0], -i))
    value, argmax = results[best]
    logger.debug(f"Sampled {n} boundary triples (seed {seed}): max J = {value:.6g}")
    return SampleEstimate(value=value, argmax=argmax, samples=n, seed=seed)


def sample_oracle(
    disks: DiskBundle,
    eps: float,
    which: SequenceKind = SequenceKind.NEGATIVE,
    n: int = 500000,
    seed: int = 7,
    batch_size: int = DEFAULT_BATCH_SIZE,
    threads: int = 1,
) -> float:
    """Sampled lower estimate F_sample of max J over the disks."""
    return sample_maximizer(disks, eps, which, n, seed, batch_size, threads).value


def sample_row_minima(
    disks: DiskBundle,
    eps: float,
    metric: Metric,
    n: int = 1000000,
    seed: int = 7,
    region: str = "boundary",
    batch_size: int = DEFAULT_BATCH_SIZE,
    threads: int = 1,
) -> np.ndarray:
    """Smallest sampled value of each PVUR/LVUR linear row over the disks.

    Args:
        region: "boundary" samples the circles, "disk" the full closed disks

    Returns:
        Array of six row minima
    """
    eps = check_epsilon(eps)
    metric = Metric(metric)
    if region not in ("boundary", "disk"):
        raise ValueError(f"region must be 'boundary' or 'disk', got {region}")
    if metric is Metric.PVUR:
        rows = pvur_rows(eps)
    elif metric is Metric.PVUR_MAXMIN:
        rows = pvur_rows(eps, PvurVariant.MAX_MINUS_MIN)
    elif metric is Metric.LVUR:
        rows = lvur_rows(eps)
    else:
        raise ValueError(f"{metric.value} has no linear row form")

    def work(rng, size):
        points = _draw(disks, rng, size, region)
        phases = points[:, 0::2] + 1j * points[:, 1::2]
        if metric is Metric.LVUR:
            magnitudes = np.column_stack([np.abs(phases[:, p] - phases[:, q]) for p, q in LINE_PAIRS])
        else:
            magnitudes = np.abs(phases)
        return (np.min(magnitudes @ rows.T, axis=0),)

    results = _run_batches(n, seed, batch_size, threads, work)
    return np.min(np.array([r[0] for r in results]), axis=0)
