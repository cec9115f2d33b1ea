"""Stress measures and the existence/uniqueness certificate.

For a nominal point (v0, S0) and actual loading S = S0 + sigma, with
Z_tilde = diag(v0)^-1 Z_hat diag(conj(v0))^-1:

    eta_ip   = (Z_tilde conj(sigma))_ip
    xi_ip    = sum_j |Z_tilde_ip,j| |S_j|
    gamma_ip = 2 (xi_ip + Re eta_ip) - |eta_ip|^2 - xi_ip^2

Aggregates are maxima over node-phases (|eta| for eta). The power flow has a
unique solution near the nominal point when gamma + 2 xi eta < 1 and
xi - eta <= 1, and that solution lies within radius r of it in the u-coordinates.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..network.loads import LoadState
from ..network.model import NetworkModel, format_label

logger = logging.getLogger(__name__)

DELTA_CLAMP = 1e-14


class SolvabilityException(Exception):
    """Raised when disks are requested for an uncertified or unsuitable instance."""
    pass


@dataclass(frozen=True, eq=False)
class StressSummary:
    """Per-entry and aggregate stress measures with the certificate outcome."""

    z_tilde: np.ndarray
    eta: np.ndarray
    xi: np.ndarray
    gamma: np.ndarray
    eta_max: float
    xi_max: float
    gamma_max: float
    delta: float
    feasible: bool
    radius: Optional[float]

    @property
    def margin(self) -> float:
        """Slack in the strict inequality gamma + 2 xi eta < 1."""
        return 1.0 - (self.gamma_max + 2.0 * self.xi_max * self.eta_max)

    @property
    def spread_margin(self) -> float:
        """Slack in xi - eta <= 1."""
        return 1.0 - (self.xi_max - self.eta_max)

    def rows(self, model: NetworkModel) -> List[Tuple[str, str, complex, float, float]]:
        """Per node-phase (bus, phase, eta, xi, gamma) rows."""
        return [
            (bus, phase, complex(self.eta[k]), float(self.xi[k]), float(self.gamma[k]))
            for k, (bus, phase) in enumerate(model.load_labels)
        ]


def certificate_radius(
    eta: float, xi: float, gamma: float, delta_clamp: float = DELTA_CLAMP
) -> Tuple[float, bool, Optional[float]]:
    """Evaluate the certificate from aggregate stress values.

    Args:
        eta: Aggregate |eta|
        xi: Aggregate xi
        gamma: Aggregate gamma
        delta_clamp: Negative discriminants within this window count as zero

    Returns:
        (delta, feasible, r) where r is None when infeasible

    Raises:
        SolvabilityException: If the discriminant is materially negative
            although both inequalities hold
    """
    delta = (1.0 - gamma) ** 2 - 4.0 * xi ** 2 * eta ** 2
    feasible = (gamma + 2.0 * xi * eta < 1.0) and (xi - eta <= 1.0)
    if not feasible:
        return delta, False, None

    if delta < 0:
        if delta < -delta_clamp:
            raise SolvabilityException(f"Discriminant {delta:.3e} is negative for a feasible certificate")
        delta = 0.0

    if xi == 0:
        return delta, True, 0.0
    # rationalized sqrt((1 - gamma - sqrt(delta)) / (2 xi^2)); exactly zero at eta = 0
    denominator = 1.0 - gamma + math.sqrt(delta)
    if denominator <= 0:
        raise SolvabilityException(f"Degenerate certificate: 1 - gamma + sqrt(delta) = {denominator:.3e}")
    r_squared = 2.0 * eta ** 2 / denominator
    return delta, True, math.sqrt(r_squared)


def compute_stress(
    model: NetworkModel, loads: LoadState, delta_clamp: float = DELTA_CLAMP
) -> StressSummary:
    """Compute stress measures and evaluate the solvability certificate.

    Args:
        model: Network model
        loads: Load state indexed like the model's PQ entries

    Returns:
        StressSummary; feasible tests gamma + 2 xi eta < 1 strictly and
        xi - eta <= 1 non-strictly
    """
    v0 = loads.v_nominal
    z_tilde = (1.0 / v0)[:, None] * model.z_hat * (1.0 / np.conj(v0))[None, :]

    eta = z_tilde @ np.conj(loads.sigma)
    xi = np.abs(z_tilde) @ np.abs(loads.s_actual)
    gamma = 2.0 * (xi + eta.real) - np.abs(eta) ** 2 - xi ** 2

    eta_max = float(np.max(np.abs(eta)))
    xi_max = float(np.max(xi))
    gamma_max = float(np.max(gamma))
    delta, feasible, radius = certificate_radius(eta_max, xi_max, gamma_max, delta_clamp)

    for array in (z_tilde, eta, xi, gamma):
        array.setflags(write=False)

    if feasible:
        logger.debug(
            f"Certificate holds: eta={eta_max:.4g} xi={xi_max:.4g} gamma={gamma_max:.4g} r={radius:.4g}"
        )
    else:
        worst = format_label(model.load_labels[int(np.argmax(gamma))])
        logger.info(
            f"Certificate fails: gamma+2*xi*eta={gamma_max + 2 * xi_max * eta_max:.4g}, "
            f"xi-eta={xi_max - eta_max:.4g} (largest gamma at {worst})"
        )

    return StressSummary(
        z_tilde=z_tilde,
        eta=eta,
        xi=xi,
        gamma=gamma,
        eta_max=eta_max,
        xi_max=xi_max,
        gamma_max=gamma_max,
        delta=delta,
        feasible=feasible,
        radius=radius,
    )
