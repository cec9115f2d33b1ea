"""Tests for src/robust/dual.py"""

import math

import pytest

from src.robust.dual import DualityCheck, lgr_dual_value, suff1_check, suff2_check, vuf_lgr
from src.robust.sampling import sample_oracle
from src.robust.verdict import Exactness, Method
from src.solvability.disks import DiskBundle, build_disks
from src.solvability.stress import compute_stress
from src.unbalance.metrics import SequenceKind


@pytest.fixture
def zero_sequence_disks():
    """Identical centers carry no positive or negative sequence."""
    return DiskBundle(node="zero", centers=[0.5 + 0.2j] * 3, radii=[0.05, 0.1, 0.02])


class TestVufLgr:
    """Tests for vuf_lgr and lgr_dual_value."""

    def test_point_problem(self, balanced_point_disks):
        """With every radius zero the bound is J(C)."""
        gamma, mu, verdict = vuf_lgr(balanced_point_disks, 0.2)
        assert gamma == pytest.approx(-9 * 0.04)
        assert mu.tolist() == [0.0, 0.0, 0.0]
        assert verdict.passed
        assert verdict.diagnostics["fixed_phases"] == [0, 1, 2]

    def test_safe_on_test1(self, test1_disks):
        """gamma is never below a sampled value."""
        gamma, _, verdict = vuf_lgr(test1_disks, 0.3)
        assert gamma >= sample_oracle(test1_disks, 0.3, n=20000) - 1e-9
        assert verdict.method is Method.LGR

    def test_exact_on_test2(self, test2_disks):
        """Small disks: the bound meets the sampled maximum."""
        gamma, _, verdict = vuf_lgr(test2_disks, 0.1)
        sampled = sample_oracle(test2_disks, 0.1, n=200000)
        assert gamma >= sampled - 1e-9
        assert gamma - sampled <= 1e-2 * max(1.0, abs(sampled))
        assert verdict.exactness is Exactness.STRONG_DUALITY
        assert verdict.diagnostics["psd_min_eig"] >= -1e-8

    def test_fails_when_centers_violate(self, test2_disks):
        """J(C) = 1 - 49 eps^2 > 0 at eps = 0.1, so the check fails."""
        gamma, _, verdict = vuf_lgr(test2_disks, 0.1)
        assert gamma >= 0.51 - 1e-9
        assert not verdict.passed

    def test_dual_value_at_optimum(self, test2_disks):
        gamma, mu, _ = vuf_lgr(test2_disks, 0.1)
        assert lgr_dual_value(test2_disks, 0.1, mu) == pytest.approx(gamma)

    def test_dual_value_outside_domain(self, test1_disks):
        """mu = 0 leaves Q(mu) indefinite."""
        assert lgr_dual_value(test1_disks, 0.3, [0.0, 0.0, 0.0]) == math.inf

    def test_fixed_phase_multiplier(self):
        """A zero-radius phase keeps a zero multiplier."""
        disks = DiskBundle(node="x", centers=[3.0, -1 - math.sqrt(3) * 1j, -1 + math.sqrt(3) * 1j],
                           radii=[0.0, 0.1, 0.1])
        _, mu, verdict = vuf_lgr(disks, 0.1)
        assert mu[0] == 0.0
        assert verdict.diagnostics["fixed_phases"] == [0]

    def test_skip_exactness(self, test2_disks):
        _, _, verdict = vuf_lgr(test2_disks, 0.1, check_exactness=False)
        assert verdict.exactness is Exactness.SAFE

    def test_zero_sequence_kind(self, test1_disks):
        _, _, verdict = vuf_lgr(test1_disks, 0.3, SequenceKind.ZERO)
        assert verdict.metric.value == "vuf-0"

    @pytest.mark.parametrize("eps", [0.1, 0.3, 0.6])
    def test_short_simplex_runs_polished(self, test1_disks, eps):
        """A small Nelder-Mead cap leaves the rest to the barrier polish."""
        full, _, _ = vuf_lgr(test1_disks, eps, check_exactness=False)
        short, _, verdict = vuf_lgr(test1_disks, eps, check_exactness=False, max_iter=20)
        assert short == pytest.approx(full, rel=1e-7, abs=1e-7)
        assert verdict.diagnostics["converged"] is True

    @pytest.mark.parametrize("eps", [0.375, 0.75, 0.875, 0.9999])
    def test_converged_on_feeder_disks(self, five_bus, increment_loads, eps):
        """Large tolerances on the feeder report a converged minimization."""
        loads = increment_loads(5)
        disks = build_disks(five_bus, loads, compute_stress(five_bus, loads), "4")
        _, _, verdict = vuf_lgr(disks, eps, check_exactness=False)
        assert verdict.diagnostics["converged"] is True
        assert verdict.diagnostics["stopped_early"] is False

    def test_stop_at_decides_pass(self, test2_disks):
        """|3V_n| <= 1.3 and |3V_p| >= 6.7 on the disks, so eps = 0.3 passes."""
        gamma, mu, verdict = vuf_lgr(test2_disks, 0.3, check_exactness=False, stop_at=0.0)
        assert verdict.passed
        assert gamma <= 0.0
        assert verdict.diagnostics["stopped_early"] is True
        assert lgr_dual_value(test2_disks, 0.3, mu) == pytest.approx(gamma)

    def test_stop_at_unreached(self, test2_disks):
        """A threshold below the minimum leaves the bound untouched."""
        full, _, _ = vuf_lgr(test2_disks, 0.1, check_exactness=False)
        gamma, _, verdict = vuf_lgr(test2_disks, 0.1, check_exactness=False, stop_at=-1e6)
        assert gamma == pytest.approx(full)
        assert verdict.diagnostics["stopped_early"] is False


class TestStrongDualityChecks:
    """Tests for suff1_check and suff2_check."""

    def test_suff1_test2(self, test2_disks):
        check = suff1_check(test2_disks, 0.1)
        assert check.holds is True
        assert all(check.interval)
        assert bool(check)

    def test_suff1_test1(self, test1_disks):
        """Large disks overlap the interval box."""
        check = suff1_check(test1_disks, 0.3)
        assert check.holds is False
        assert not bool(check)
        assert check.minima == ()

    def test_suff1_iteration_cap(self, test2_disks):
        """Hitting the cap is indeterminate, never a pass."""
        check = suff1_check(test2_disks, 0.1, tol=0.0, max_iter=1)
        assert check.holds in (None, True)
        assert isinstance(check, DualityCheck)

    def test_suff2_balanced_centers(self, test1_disks):
        """Positive-sequence centers are not in the null space."""
        assert not suff2_check(test1_disks, 0.3)

    def test_suff2_zero_sequence(self, zero_sequence_disks):
        assert suff2_check(zero_sequence_disks, 0.3)
        assert not suff2_check(zero_sequence_disks, 0.3, SequenceKind.ZERO)

    def test_suff2_labels_verdict(self, zero_sequence_disks):
        _, _, verdict = vuf_lgr(zero_sequence_disks, 0.3)
        assert verdict.exactness is Exactness.STRONG_DUALITY
        assert verdict.diagnostics["strong_duality"] == "nullspace"
