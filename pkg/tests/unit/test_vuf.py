"""Tests for src/robust/vuf.py"""

import math

import numpy as np
import pytest

from src.robust.sampling import sample_oracle
from src.robust.verdict import Direction, Method
from src.robust.vuf import (
    PolygonMode,
    build_crp,
    gap_bound,
    lipschitz_constant,
    polygon_angles,
    vertex_maximum,
    vuf_bound,
    vuf_polytope,
)
from src.solvability.disks import DiskBundle
from src.unbalance.forms import build_quadratic_forms
from src.unbalance.metrics import Metric, SequenceKind

M_VALUES = [2, 4, 8, 16, 32]


@pytest.fixture
def unit_disks():
    return DiskBundle(node="unit", centers=[0, 0, 0], radii=[1, 1, 1])


class TestVufBound:
    """Tests for vuf_bound."""

    def test_balanced_point(self, balanced_point_disks):
        """No numerator at the balanced triple: value is -eps^2 |3 V_p|^2."""
        verdict = vuf_bound(balanced_point_disks, 0.1)
        assert verdict.worst == pytest.approx(-0.01 * 9)
        assert verdict.passed
        assert verdict.direction is Direction.NON_POSITIVE

    def test_threshold(self, test1_disks):
        """Passes iff eps >= 1.8 / 4.2."""
        assert vuf_bound(test1_disks, 0.43).passed
        assert not vuf_bound(test1_disks, 0.42).passed

    def test_zero_sequence(self, test1_disks):
        verdict = vuf_bound(test1_disks, 0.5, SequenceKind.ZERO)
        assert verdict.metric is Metric.VUF_0
        assert verdict.method is Method.BOUND


class TestCrp:
    """Tests for the regular-polygon construction."""

    def test_m2_square(self, unit_disks):
        """m = 2 around a unit disk is the square with vertices (+-1, +-1)."""
        crp = build_crp(unit_disks, 2)
        assert crp.points[0].shape == (4, 2)
        assert {tuple(np.round(v, 12)) for v in crp.points[0]} == {(1, 1), (-1, 1), (-1, -1), (1, -1)}

    def test_inscribed_on_circle(self, test1_disks):
        crp = build_crp(test1_disks, 8, PolygonMode.INSCRIBED)
        for center, points in zip(test1_disks.centers, crp.points):
            distance = np.hypot(points[:, 0] - center.real, points[:, 1] - center.imag)
            assert np.allclose(distance, 0.6)

    def test_angles(self):
        assert np.allclose(polygon_angles(2), [np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4])

    @pytest.mark.parametrize("m", [1, 0, 2.5])
    def test_invalid_m(self, unit_disks, m):
        with pytest.raises(ValueError):
            build_crp(unit_disks, m)

    def test_vertices_read_only(self, unit_disks):
        with pytest.raises(ValueError):
            build_crp(unit_disks, 2).points[0][0, 0] = 5.0


class TestVertexMaximum:
    """Tests for vertex_maximum."""

    def test_matches_brute_force(self, test1_disks):
        matrix = build_quadratic_forms().objective(SequenceKind.NEGATIVE, 0.3)
        points = build_crp(test1_disks, 2).points
        best = max(
            np.concatenate([a, b, c]) @ matrix @ np.concatenate([a, b, c])
            for a in points[0] for b in points[1] for c in points[2]
        )
        value, argmax = vertex_maximum(matrix, points)
        assert value == pytest.approx(best)
        assert argmax @ matrix @ argmax == pytest.approx(value)


class TestVufPolytope:
    """Tests for vuf_polytope and the gap bound."""

    @pytest.mark.parametrize("m", M_VALUES)
    def test_bracket_and_gap(self, test1_disks, m):
        """F_i <= F_e and their difference respects the gap bound."""
        f_e, f_i, bound, verdict = vuf_polytope(test1_disks, 0.3, m)
        assert f_i <= f_e
        assert f_e - f_i <= bound + 1e-12
        assert verdict.worst == f_e
        assert verdict.diagnostics["m"] == m

    def test_circumscribed_nested(self, test1_disks):
        """Doubling m refines the circumscribed polygon, so F_e never grows."""
        values = [vuf_polytope(test1_disks, 0.3, m)[0] for m in M_VALUES]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))

    def test_point_disks(self, balanced_point_disks):
        """Zero radii reduce the polygon to J(C)."""
        f_e, f_i, bound, _ = vuf_polytope(balanced_point_disks, 0.2, 4)
        assert f_e == pytest.approx(-9 * 0.04)
        assert f_i == pytest.approx(f_e)
        assert bound == 0.0

    def test_sample_inside_bracket(self, test2_disks):
        f_e, _, _, _ = vuf_polytope(test2_disks, 0.1, 16)
        assert sample_oracle(test2_disks, 0.1, n=20000) <= f_e

    def test_gap_bound_formula(self, test1_disks):
        expected = (1 / math.cos(math.pi / 8) - 1) * lipschitz_constant(test1_disks, 0.3) * np.linalg.norm([0.6] * 3)
        assert gap_bound(test1_disks, 0.3, 4) == pytest.approx(expected)
