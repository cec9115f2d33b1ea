"""Tests for src/balancibility/search.py"""

import pytest

from src.balancibility.oracle import node_voltages, solve_scenario, true_unbalance
from src.balancibility.search import (
    BalancibilityException,
    EpsilonSearch,
    Unbalanceable,
    min_epsilon,
    search_disks,
)
from src.network.loads import with_actual
from src.unbalance.metrics import Metric


class TestSearchDisks:
    """Tests for search_disks."""

    def test_pvur_threshold(self, test1_disks):
        """The worst PVUR over test1 is 4/9; the result sits just above it."""
        result = search_disks(test1_disks, "pvur", "closed", tol=1e-4)
        assert isinstance(result, EpsilonSearch)
        assert 4 / 9 <= result.epsilon <= 4 / 9 + 1e-4
        assert result.verdict.passed
        assert result.iterations > 0

    def test_vuf_bound_threshold(self, test1_disks):
        result = search_disks(test1_disks, "vuf-n", "bound", tol=1e-5)
        assert 1.8 / 4.2 <= result.epsilon <= 1.8 / 4.2 + 1e-5

    def test_lower_end_passes(self, balanced_point_disks):
        """A balanced point passes the very first grid point."""
        result = search_disks(balanced_point_disks, "pvur", "closed")
        assert result.epsilon == 1e-4
        assert result.iterations == 0

    def test_unbalanceable(self, balanced_point_disks):
        """Magnitude bounds never certify LVUR at a point."""
        with pytest.raises(Unbalanceable) as exc:
            search_disks(balanced_point_disks, "lvur", "mag-bound")
        assert exc.value.eps_hi == pytest.approx(1 - 1e-4)
        assert not exc.value.verdict.passed

    def test_non_monotone(self, test1_disks, mocker):
        """A pass followed by a fail on the grid is reported, not bisected."""
        def fake(disks, metric, method, eps, **kwargs):
            return mocker.MagicMock(passed=eps < 0.3 or eps > 0.6)

        mocker.patch('src.balancibility.search.evaluate', side_effect=fake)
        with pytest.raises(BalancibilityException, match="not monotone"):
            search_disks(test1_disks, "pvur", "closed")

    def test_skips_exactness_checks(self, test1_disks, mocker):
        """Bisection asks only for pass/fail."""
        mock_eval = mocker.patch('src.balancibility.search.evaluate', return_value=mocker.MagicMock(passed=True))
        search_disks(test1_disks, "vuf-n", "lgr")
        assert mock_eval.call_args.kwargs["check_exactness"] is False
        assert mock_eval.call_args.kwargs["lgr_stop_at"] == 0.0

    def test_early_stop_keeps_threshold(self, test2_disks):
        """Stopping LGR at the first non-positive bound does not move the result."""
        stopped = search_disks(test2_disks, "vuf-n", "lgr", tol=1e-4)
        full = search_disks(test2_disks, "vuf-n", "lgr", tol=1e-4, lgr_stop_at=None)
        assert stopped.epsilon == pytest.approx(full.epsilon, abs=3e-4)
        assert stopped.verdict.passed

    @pytest.mark.parametrize("kwargs", [{"tol": 0}, {"eps_lo": 0.5, "eps_hi": 0.4}, {"eps_hi": 1.0}])
    def test_bad_interval(self, test1_disks, kwargs):
        with pytest.raises(ValueError):
            search_disks(test1_disks, "pvur", "closed", **kwargs)

    def test_invalid_pair(self, test1_disks):
        with pytest.raises(ValueError):
            search_disks(test1_disks, "pvur", "lgr")


class TestMinEpsilon:
    """Tests for min_epsilon on the bundled feeder."""

    @pytest.mark.parametrize("metric,method", [("pvur", "closed"), ("lvur", "line-bound"), ("vuf-n", "lgr")])
    def test_above_true_unbalance(self, five_bus, increment_loads, metric, method):
        """The certified tolerance never undercuts the power-flow value."""
        loads = increment_loads(4)
        eps = min_epsilon(five_bus, loads, "4", metric, method, tol_eps=1e-5)
        truth = true_unbalance(node_voltages(five_bus, solve_scenario(five_bus, loads), "4"))
        assert eps >= truth[Metric(metric)]

    def test_unsolvable(self, five_bus, five_bus_loads):
        heavy = with_actual(five_bus, five_bus_loads, five_bus_loads.s_nominal * 80)
        with pytest.raises(BalancibilityException, match="Solvability"):
            min_epsilon(five_bus, heavy, "4", "pvur", "closed")
