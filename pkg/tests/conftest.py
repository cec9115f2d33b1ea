"""Shared fixtures for Balancibility tests."""

import math

import numpy as np
import pytest

from src.network.loads import loads_from_document, with_actual
from src.network.model import build_network, case_path, load_case, read_json
from src.solvability.disks import DiskBundle
from src.unbalance.metrics import ALPHA
from src.utils.settings import get_settings

SQRT3 = math.sqrt(3.0)

BALANCED = np.array([1.0 + 0.0j, ALPHA ** 2, ALPHA])


@pytest.fixture
def fresh_settings():
    """Settings are cached per process; tests that touch env vars need a fresh read."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def test1_disks():
    """Three equal disks around an unbalanced triple, radius 0.6."""
    return DiskBundle.from_points([[2.0, 0.0], [-1.0, -SQRT3], [-1.0, SQRT3]], [0.6, 0.6, 0.6], node="test1")


@pytest.fixture
def test2_disks():
    """Small disks (radius 0.1) where the Lagrangian bound is exact."""
    return DiskBundle.from_points([[3.0, 0.0], [-1.0, -SQRT3], [-1.0, SQRT3]], [0.1, 0.1, 0.1], node="test2")


@pytest.fixture
def balanced_point_disks():
    """Zero-radius disks at the balanced unit triple."""
    return DiskBundle(node="balanced", centers=BALANCED, radii=[0.0, 0.0, 0.0])


@pytest.fixture(scope="session")
def five_bus():
    """The bundled five-bus feeder."""
    return load_case("five_bus")


@pytest.fixture(scope="session")
def five_bus_loads(five_bus):
    """Nominal loads of the bundled feeder, actual = nominal."""
    return loads_from_document(five_bus, read_json(case_path("five_bus_loads")))


@pytest.fixture(scope="session")
def increment_loads(five_bus, five_bus_loads):
    """Factory: nominal feeder plus k times (10, -5, -5) kW at bus 5."""
    def build(k: float):
        s = five_bus_loads.s_nominal.copy()
        positions = list(five_bus.three_phase_positions("5"))
        s[positions] += k * np.array([10.0, -5.0, -5.0]) / five_bus.base_kva
        return with_actual(five_bus, five_bus_loads, s)
    return build


def scalar_network_document(y: complex = 10.0 + 0.0j, slack: complex = 1.0 + 0.0j):
    """Slack plus one single-phase PQ bus joined by admittance y (so Z_hat = 1/y)."""
    return {
        "name": "scalar",
        "base_kva": 100.0,
        "buses": [
            {"id": "1", "phases": ["a"], "kind": "slack", "voltage": [[slack.real, slack.imag]]},
            {"id": "2", "phases": ["a"], "kind": "pq"},
        ],
        "lines": [{"from": "1", "to": "2", "y_block": [[[y.real, y.imag]]]}],
    }


@pytest.fixture
def scalar_network():
    """Factory for single-entry networks."""
    def build(y: complex = 10.0 + 0.0j, slack: complex = 1.0 + 0.0j):
        return build_network(scalar_network_document(y, slack))
    return build


def three_phase_feeder_document(z_self=(0.02, 0.06), z_mutual=(0.006, 0.025)):
    """Slack bus 1 feeding three-phase bus 2 through one coupled line."""
    self_pair = list(z_self)
    mutual = list(z_mutual)
    return {
        "name": "two-bus",
        "base_kva": 1000.0,
        "buses": [
            {"id": "1", "kind": "slack"},
            {"id": "2", "kind": "pq"},
        ],
        "lines": [{
            "from": "1", "to": "2",
            "z_block": [
                [self_pair, mutual, mutual],
                [mutual, self_pair, mutual],
                [mutual, mutual, self_pair],
            ],
        }],
    }


@pytest.fixture
def two_bus():
    return build_network(three_phase_feeder_document())
