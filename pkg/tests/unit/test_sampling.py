"""Tests for src/robust/sampling.py"""

import numpy as np
import pytest

from src.robust.sampling import _batches, sample_maximizer, sample_oracle, sample_row_minima
from src.unbalance.forms import build_quadratic_forms
from src.unbalance.metrics import Metric, SequenceKind


class TestSampleOracle:
    """Tests for sample_oracle and sample_maximizer."""

    def test_deterministic(self, test1_disks):
        """Same seed, same estimate."""
        assert sample_oracle(test1_disks, 0.3, n=5000, seed=1) == sample_oracle(test1_disks, 0.3, n=5000, seed=1)

    def test_thread_count_irrelevant(self, test1_disks):
        """Batches are seeded independently of the worker count."""
        one = sample_maximizer(test1_disks, 0.3, n=10000, batch_size=1000, threads=1)
        four = sample_maximizer(test1_disks, 0.3, n=10000, batch_size=1000, threads=4)
        assert one.value == four.value
        assert np.array_equal(one.argmax, four.argmax)

    def test_argmax_on_circles(self, test1_disks):
        estimate = sample_maximizer(test1_disks, 0.3, n=2000)
        phases = estimate.argmax[0::2] + 1j * estimate.argmax[1::2]
        assert np.allclose(np.abs(phases - test1_disks.centers), 0.6)

    def test_value_matches_argmax(self, test2_disks):
        estimate = sample_maximizer(test2_disks, 0.1, SequenceKind.ZERO, n=2000)
        matrix = build_quadratic_forms().objective(SequenceKind.ZERO, 0.1)
        assert estimate.argmax @ matrix @ estimate.argmax == pytest.approx(estimate.value)

    def test_point_disks(self, balanced_point_disks):
        """Zero radii always sample J(C)."""
        assert sample_oracle(balanced_point_disks, 0.2, n=100, seed=9) == pytest.approx(-9 * 0.04)

    def test_bad_n(self, test1_disks):
        with pytest.raises(ValueError):
            sample_oracle(test1_disks, 0.3, n=0)

    def test_batches(self):
        assert _batches(10, 4) == [4, 4, 2]
        assert _batches(8, 4) == [4, 4]


class TestSampleRowMinima:
    """Tests for sample_row_minima."""

    def test_shape(self, test1_disks):
        assert sample_row_minima(test1_disks, 0.3, Metric.PVUR, n=1000).shape == (6,)

    def test_disk_region_differs(self, test1_disks):
        """Interior samples are drawn from a different distribution."""
        boundary = sample_row_minima(test1_disks, 0.3, Metric.LVUR, n=1000, region="boundary")
        inside = sample_row_minima(test1_disks, 0.3, Metric.LVUR, n=1000, region="disk")
        assert not np.array_equal(boundary, inside)

    def test_bad_region(self, test1_disks):
        with pytest.raises(ValueError):
            sample_row_minima(test1_disks, 0.3, Metric.PVUR, n=10, region="annulus")

    def test_vuf_has_no_rows(self, test1_disks):
        with pytest.raises(ValueError):
            sample_row_minima(test1_disks, 0.3, Metric.VUF_N, n=10)
