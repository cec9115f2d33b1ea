"""Pointwise voltage-unbalance metrics.

PVUR and LVUR are ratios of the largest deviation from the average magnitude
(line-to-ground and line-to-line respectively); VUF is the ratio of negative- or
zero-sequence to positive-sequence magnitude, with alpha = 1 at 120 degrees.

Each metric also has a linear form in the magnitudes: PVUR <= eps holds iff all
six rows of pvur_rows(eps) @ |V| are non-negative, and likewise for LVUR with
line-to-line magnitudes.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Sequence, Union

import numpy as np

ALPHA = np.exp(2j * np.pi / 3)


class UnbalanceException(Exception):
    """Raised when a metric is undefined for its input."""
    pass


class Metric(str, Enum):
    """Voltage-balance metrics that can be certified."""

    PVUR = "pvur"
    PVUR_MAXMIN = "pvur-maxmin"
    LVUR = "lvur"
    VUF_N = "vuf-n"
    VUF_0 = "vuf-0"


class PvurVariant(str, Enum):
    AVG_DEVIATION = "avg-deviation"
    MAX_MINUS_MIN = "max-minus-min"


class SequenceKind(str, Enum):
    """Which sequence the VUF numerator uses."""

    NEGATIVE = "negative"
    ZERO = "zero"


@dataclass(frozen=True)
class VoltageTriple:
    """Phase voltages a, b, c (complex p.u.)."""

    a: complex
    b: complex
    c: complex

    @classmethod
    def from_complex(cls, values: Sequence[complex]) -> "VoltageTriple":
        a, b, c = (complex(v) for v in values)
        return cls(a, b, c)

    @classmethod
    def from_real(cls, values: Sequence[float]) -> "VoltageTriple":
        """From the (a_re, a_im, b_re, b_im, c_re, c_im) ordering."""
        x = np.asarray(values, dtype=float).reshape(3, 2)
        return cls.from_complex(x[:, 0] + 1j * x[:, 1])

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=complex)

    @property
    def real(self) -> np.ndarray:
        v = self.as_array()
        return np.column_stack([v.real, v.imag]).reshape(6)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.as_array())


@dataclass(frozen=True)
class SequenceComponents:
    positive: complex
    negative: complex
    zero: complex


TripleLike = Union[VoltageTriple, Sequence[complex]]


def _triple(values: TripleLike) -> VoltageTriple:
    if isinstance(values, VoltageTriple):
        return values
    return VoltageTriple.from_complex(values)


def sequence_components(triple: TripleLike) -> SequenceComponents:
    """Symmetrical components of a phase-voltage triple."""
    t = _triple(triple)
    return SequenceComponents(
        positive=(t.a + ALPHA * t.b + ALPHA ** 2 * t.c) / 3,
        negative=(t.a + ALPHA ** 2 * t.b + ALPHA * t.c) / 3,
        zero=(t.a + t.b + t.c) / 3,
    )


def line_to_line(triple: TripleLike) -> np.ndarray:
    """Line-to-line magnitudes (|Vab|, |Vbc|, |Vca|)."""
    t = _triple(triple)
    return np.abs(np.array([t.a - t.b, t.b - t.c, t.c - t.a]))


def _magnitudes(values: Sequence[float]) -> np.ndarray:
    m = np.asarray(values, dtype=float).reshape(-1)
    if m.shape != (3,):
        raise ValueError(f"Expected three magnitudes, got {m.shape[0]}")
    if np.any(m < 0):
        raise ValueError(f"Magnitudes must be non-negative, got {m}")
    if m.sum() <= 0:
        raise UnbalanceException("Unbalance rate undefined for all-zero magnitudes")
    return m


def pvur(magnitudes: Sequence[float], variant: PvurVariant = PvurVariant.AVG_DEVIATION) -> float:
    """Phase voltage unbalance rate.

    Args:
        magnitudes: |Va|, |Vb|, |Vc|
        variant: Largest deviation from the average, or max minus min

    Returns:
        Deviation divided by the average magnitude

    Raises:
        UnbalanceException: If every magnitude is zero
    """
    m = _magnitudes(magnitudes)
    avg = m.mean()
    if PvurVariant(variant) is PvurVariant.MAX_MINUS_MIN:
        return float((m.max() - m.min()) / avg)
    return float(np.max(np.abs(m - avg)) / avg)


def lvur(line_magnitudes: Sequence[float]) -> float:
    """Line voltage unbalance rate from |Vab|, |Vbc|, |Vca|.

    The deviation is taken from the line-to-line average.
    """
    return pvur(line_magnitudes, PvurVariant.AVG_DEVIATION)


def vuf(triple: TripleLike, which: SequenceKind = SequenceKind.NEGATIVE) -> float:
    """Voltage unbalance factor |V_n|/|V_p| or |V_0|/|V_p|.

    Raises:
        UnbalanceException: If the positive-sequence component vanishes
    """
    seq = sequence_components(triple)
    scale = max(1.0, float(np.max(np.abs(_triple(triple).as_array()))))
    if abs(seq.positive) <= 1e-12 * scale:
        raise UnbalanceException("VUF undefined: zero positive-sequence voltage")
    numerator = seq.negative if SequenceKind(which) is SequenceKind.NEGATIVE else seq.zero
    return float(abs(numerator) / abs(seq.positive))


def pvur_rows(eps: float, variant: PvurVariant = PvurVariant.AVG_DEVIATION) -> np.ndarray:
    """Coefficient rows R with PVUR <= eps iff R @ |V| >= 0.

    Avg-deviation rows encode |3|V_p| - sum| <= eps * sum; max-minus-min rows
    encode 3(|V_p| - |V_q|) <= eps * sum for every ordered pair p != q.
    """
    if PvurVariant(variant) is PvurVariant.MAX_MINUS_MIN:
        rows = []
        for p in range(3):
            for q in range(3):
                if p != q:
                    row = np.full(3, eps)
                    row[p] -= 3.0
                    row[q] += 3.0
                    rows.append(row)
        return np.array(rows)
    upper = np.full((3, 3), eps - 1.0) + 3.0 * np.eye(3)
    lower = np.full((3, 3), eps + 1.0) - 3.0 * np.eye(3)
    return np.vstack([upper, lower])


def lvur_rows(eps: float) -> np.ndarray:
    """Rows for LVUR <= eps acting on (|Vab|, |Vbc|, |Vca|)."""
    return pvur_rows(eps, PvurVariant.AVG_DEVIATION)


def metric_value(triple: TripleLike, metric: Metric) -> float:
    """Evaluate one metric at a voltage triple."""
    t = _triple(triple)
    metric = Metric(metric)
    if metric is Metric.PVUR:
        return pvur(t.magnitudes)
    if metric is Metric.PVUR_MAXMIN:
        return pvur(t.magnitudes, PvurVariant.MAX_MINUS_MIN)
    if metric is Metric.LVUR:
        return lvur(line_to_line(t))
    if metric is Metric.VUF_N:
        return vuf(t, SequenceKind.NEGATIVE)
    return vuf(t, SequenceKind.ZERO)


def all_metrics(triple: TripleLike) -> Dict[Metric, float]:
    """Every metric at a voltage triple."""
    return {metric: metric_value(triple, metric) for metric in Metric}
