"""Tests for src/solvability/stress.py and src/solvability/disks.py"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.network.loads import make_load_state, with_actual
from src.network.model import NetworkException
from src.powerflow.solver import solve_fixed_point
from src.solvability.disks import DiskBundle, build_disks, entry_disks
from src.solvability.stress import SolvabilityException, certificate_radius, compute_stress


class TestCertificateRadius:
    """Tests for certificate_radius."""

    def test_no_load(self):
        """All-zero stress: feasible with radius zero."""
        delta, feasible, r = certificate_radius(0.0, 0.0, 0.0)
        assert feasible
        assert r == 0.0
        assert delta == 1.0

    def test_closed_form(self):
        """r matches sqrt((1 - gamma - sqrt(delta)) / (2 xi^2))."""
        eta, xi = 0.05, 0.2
        gamma = 2 * (xi + eta) - eta ** 2 - xi ** 2
        delta, feasible, r = certificate_radius(eta, xi, gamma)
        assert feasible
        assert delta == pytest.approx((1 - gamma) ** 2 - 4 * xi ** 2 * eta ** 2)
        assert r == pytest.approx(math.sqrt((1 - gamma - math.sqrt(delta)) / (2 * xi ** 2)))

    def test_strict_inequality(self):
        """gamma + 2 xi eta = 1 exactly is infeasible."""
        _, feasible, r = certificate_radius(0.0, 0.5, 1.0)
        assert not feasible
        assert r is None

    def test_spread_inequality(self):
        """xi - eta > 1 is infeasible even with small gamma."""
        _, feasible, _ = certificate_radius(0.0, 1.5, -10.0)
        assert not feasible

    def test_tiny_negative_delta_clamped(self):
        """A discriminant within the clamp window counts as zero."""
        # a negative eta reaches the rounding window directly
        delta, feasible, r = certificate_radius(-0.5, 0.5, 0.5 + 1e-15, delta_clamp=1e-14)
        assert feasible
        assert delta == 0.0
        assert r == pytest.approx(1.0)

    def test_material_negative_delta(self):
        """A clearly negative discriminant on a feasible certificate is an error."""
        with pytest.raises(SolvabilityException):
            certificate_radius(-0.5, 0.5, 1.0)


class TestComputeStress:
    """Tests for compute_stress."""

    def test_scalar_values(self, scalar_network):
        """Scalar case: eta = z conj(sigma)/|v0|^2 and xi = |z| |S|/|v0|^2."""
        model = scalar_network(y=10.0 + 0.0j)
        loads = make_load_state(model, [0.5 + 0.0j], [0.6 + 0.1j])
        stress = compute_stress(model, loads)
        v0 = loads.v_nominal[0]
        z_tilde = 0.1 / abs(v0) ** 2
        assert stress.eta[0] == pytest.approx(z_tilde * np.conj(0.1 + 0.1j))
        assert stress.xi[0] == pytest.approx(z_tilde * abs(0.6 + 0.1j))

    def test_gamma_identity(self, five_bus, five_bus_loads):
        """gamma = 2 (xi + Re eta) - |eta|^2 - xi^2 per entry."""
        stress = compute_stress(five_bus, five_bus_loads)
        expected = 2 * (stress.xi + stress.eta.real) - np.abs(stress.eta) ** 2 - stress.xi ** 2
        assert np.allclose(stress.gamma, expected)

    def test_nominal_loading_zero_radius(self, five_bus, five_bus_loads):
        """sigma = 0 gives eta = 0 and r = 0."""
        stress = compute_stress(five_bus, five_bus_loads)
        assert stress.feasible
        assert stress.eta_max == 0.0
        assert stress.radius == pytest.approx(0.0, abs=1e-12)

    def test_heavy_load_infeasible(self, five_bus, five_bus_loads):
        """Scaling the loads far enough breaks the certificate."""
        heavy = with_actual(five_bus, five_bus_loads, five_bus_loads.s_nominal * 80)
        stress = compute_stress(five_bus, heavy)
        assert not stress.feasible
        assert stress.radius is None
        assert stress.margin <= 0 or stress.spread_margin < 0

    def test_rows(self, five_bus, five_bus_loads):
        """rows() lists every PQ node-phase."""
        rows = compute_stress(five_bus, five_bus_loads).rows(five_bus)
        assert len(rows) == five_bus.n_load
        assert rows[0][:2] == ("2", "a")

    def test_worked_scalar_example(self, scalar_network):
        """Z_tilde = 0.1 with S0 = 0 and S = sigma = 0.5."""
        model = scalar_network(y=10.0 + 0.0j)
        loads = make_load_state(model, [0.0 + 0.0j], [0.5 + 0.0j])
        stress = compute_stress(model, loads)
        assert stress.eta_max == pytest.approx(0.05)
        assert stress.xi_max == pytest.approx(0.05)
        assert stress.gamma_max == pytest.approx(0.195)
        assert stress.gamma_max + 2 * stress.xi_max * stress.eta_max == pytest.approx(0.2)
        assert stress.feasible
        assert stress.delta == pytest.approx(0.648)
        expected = math.sqrt((1 - 0.195 - math.sqrt(0.648)) / (2 * 0.05 ** 2))
        assert stress.radius == pytest.approx(expected, rel=1e-6)
        assert stress.radius == pytest.approx(0.05573, abs=1e-5)


class TestStressMonotonicity:
    """Load growth and load shrinkage on the bundled feeder."""

    @settings(max_examples=25, deadline=None)
    @given(growth=st.lists(st.floats(min_value=0.0, max_value=2.0), min_size=12, max_size=12))
    def test_xi_grows_with_load(self, five_bus, five_bus_loads, growth):
        """Scaling |S_L| up entrywise never lowers any xi."""
        factors = 1.0 + np.resize(np.array(growth), five_bus.n_load)
        small = compute_stress(five_bus, five_bus_loads)
        large = compute_stress(five_bus, with_actual(five_bus, five_bus_loads, five_bus_loads.s_nominal * factors))
        assert np.all(large.xi >= small.xi - 1e-15)

    @settings(max_examples=15, deadline=None)
    @given(c=st.floats(min_value=0.1, max_value=0.5))
    def test_radii_shrink_toward_nominal(self, five_bus, five_bus_loads, c):
        """S_L = S0 (1 + c t) with t falling to 0 shrinks every radius to zero."""
        radii = []
        for t in (1.0, 0.75, 0.5, 0.25, 0.0):
            loads = with_actual(five_bus, five_bus_loads, five_bus_loads.s_nominal * (1.0 + c * t))
            stress = compute_stress(five_bus, loads)
            assert stress.feasible
            radii.append(build_disks(five_bus, loads, stress, "4").radii)
        for previous, current in zip(radii, radii[1:]):
            assert np.all(current <= previous + 1e-15)
        assert np.allclose(radii[-1], 0.0, atol=1e-12)


class TestDiskBundle:
    """Tests for the DiskBundle type."""

    def test_read_only(self, test1_disks):
        """Centers and radii cannot be modified."""
        with pytest.raises(ValueError):
            test1_disks.radii[0] = 1.0

    def test_negative_radius(self):
        """Negative radii are rejected."""
        with pytest.raises(ValueError):
            DiskBundle(node="x", centers=[1, 1, 1], radii=[0.1, -0.1, 0.1])

    def test_wrong_shape(self):
        """Exactly three disks."""
        with pytest.raises(ValueError):
            DiskBundle(node="x", centers=[1, 1], radii=[0.1, 0.1])

    def test_real_centers_order(self, test1_disks):
        """Real layout is (a_re, a_im, b_re, b_im, c_re, c_im)."""
        assert np.allclose(test1_disks.real_centers, [2, 0, -1, -math.sqrt(3), -1, math.sqrt(3)])

    def test_from_document(self):
        """JSON-shaped input builds a bundle."""
        bundle = DiskBundle.from_document({"node": "7", "centers": [[1, 0], [0, 1], [-1, 0]], "radii": [0, 0.1, 0.2]})
        assert bundle.node == "7"
        assert bundle.centers[1] == 1j
        assert bundle.degenerate.tolist() == [True, False, False]

    def test_from_document_missing_key(self):
        """Missing radii are reported by name."""
        with pytest.raises(ValueError, match="radii"):
            DiskBundle.from_document({"centers": [[1, 0], [0, 1], [-1, 0]]})

    def test_contains(self, test1_disks):
        """Points on the boundary are inside, points beyond are not."""
        inside = test1_disks.centers + 0.6 * np.exp(1j * np.array([0.1, 2.0, 4.0]))
        assert test1_disks.contains(inside)
        assert not test1_disks.contains(test1_disks.centers + np.array([0.61, 0, 0]))


class TestBuildDisks:
    """Tests for build_disks and entry_disks."""

    def test_nominal_point_degenerate(self, five_bus, five_bus_loads):
        """At sigma = 0 the disks collapse onto E v0."""
        stress = compute_stress(five_bus, five_bus_loads)
        bundle = build_disks(five_bus, five_bus_loads, stress, "4")
        positions = list(five_bus.three_phase_positions("4"))
        assert np.allclose(bundle.radii, 0.0, atol=1e-12)
        assert np.allclose(bundle.centers, (five_bus.e * five_bus_loads.v_nominal)[positions])

    def test_contains_power_flow_solution(self, five_bus, five_bus_loads):
        """The solution at the actual loading lies in every entry disk."""
        s = five_bus_loads.s_nominal.copy()
        s[five_bus.position("5", "a")] += 0.03
        s[five_bus.position("4", "b")] += 0.01 + 0.005j
        loads = with_actual(five_bus, five_bus_loads, s)
        stress = compute_stress(five_bus, loads)
        assert stress.feasible
        disks = entry_disks(five_bus, loads, stress)
        solution = solve_fixed_point(five_bus, s, init=loads.v_nominal, tol=1e-13)
        distance = np.abs(solution.voltages - disks.centers)
        assert np.all(distance <= disks.radii * (1 + 1e-9) + 1e-12)

    def test_infeasible_raises(self, five_bus, five_bus_loads):
        """No disks without a certificate."""
        heavy = with_actual(five_bus, five_bus_loads, five_bus_loads.s_nominal * 80)
        stress = compute_stress(five_bus, heavy)
        with pytest.raises(SolvabilityException):
            build_disks(five_bus, heavy, stress, "4")

    def test_unknown_node(self, five_bus, five_bus_loads):
        """The critical node must be a three-phase PQ bus."""
        stress = compute_stress(five_bus, five_bus_loads)
        with pytest.raises(NetworkException):
            build_disks(five_bus, five_bus_loads, stress, "1")


class TestContainmentProperty:
    """Randomized containment of the power-flow solution."""

    @settings(max_examples=25, deadline=None)
    @given(
        scale=st.floats(min_value=0.05, max_value=1.0),
        phase=st.integers(min_value=0, max_value=2),
        reactive=st.floats(min_value=-0.5, max_value=0.5),
    )
    def test_solution_inside_disks(self, five_bus, five_bus_loads, scale, phase, reactive):
        """Any certified loading keeps the solution inside its disks."""
        s = five_bus_loads.s_nominal.copy()
        s[five_bus.position("5", "abc"[phase])] += scale * 0.1 * (1 + 1j * reactive)
        loads = with_actual(five_bus, five_bus_loads, s)
        stress = compute_stress(five_bus, loads)
        if not stress.feasible:
            return
        bundle = build_disks(five_bus, loads, stress, "4")
        solution = solve_fixed_point(five_bus, s, init=loads.v_nominal, tol=1e-13)
        v4 = solution.voltages[list(five_bus.three_phase_positions("4"))]
        assert bundle.contains(v4, rel_tol=1e-9)
