"""Voltage disks around the certified power-flow solution.

Every PQ node-phase voltage lies in a closed disk with center
C = (1 - eta) E v0 and radius r |E v0| xi. A DiskBundle holds the three disks
of one critical node in the order a, b, c and is the input of every robust
balance check.
"""

import logging
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from ..network.loads import LoadState
from ..network.model import NetworkModel
from .stress import SolvabilityException, StressSummary

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DiskBundle:
    """Per-phase complex centers and radii for one node."""

    node: str
    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        centers = np.array(self.centers, dtype=complex).reshape(-1)
        radii = np.array(self.radii, dtype=float).reshape(-1)
        if centers.shape != (3,) or radii.shape != (3,):
            raise ValueError("A disk bundle needs exactly three centers and three radii")
        if np.any(radii < 0) or not np.all(np.isfinite(radii)):
            raise ValueError(f"Disk radii must be finite and non-negative, got {radii}")
        centers.setflags(write=False)
        radii.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)

    @property
    def degenerate(self) -> np.ndarray:
        """Phases whose disk is a single point."""
        return self.radii == 0

    @property
    def real_centers(self) -> np.ndarray:
        """Centers as (a_re, a_im, b_re, b_im, c_re, c_im)."""
        return np.column_stack([self.centers.real, self.centers.imag]).reshape(6)

    @property
    def center_magnitudes(self) -> np.ndarray:
        return np.abs(self.centers)

    @classmethod
    def from_points(cls, centers: Sequence[Sequence[float]], radii: Sequence[float], node: str = "raw") -> "DiskBundle":
        """Build from planar [re, im] centers."""
        points = np.asarray(centers, dtype=float)
        if points.shape != (3, 2):
            raise ValueError("centers must be three [re, im] pairs")
        return cls(node=node, centers=points[:, 0] + 1j * points[:, 1], radii=radii)

    @classmethod
    def from_document(cls, document: Mapping[str, Any]) -> "DiskBundle":
        """Build from {"node": ..., "centers": [[re, im] x3], "radii": [r x3]}."""
        try:
            return cls.from_points(
                document["centers"], document["radii"], node=str(document.get("node", "raw"))
            )
        except KeyError as e:
            raise ValueError(f"Disk document is missing '{e.args[0]}'") from e

    def contains(self, voltages: Sequence[complex], rel_tol: float = 1e-9) -> bool:
        """Whether a voltage triple lies in all three disks."""
        distance = np.abs(np.asarray(voltages, dtype=complex) - self.centers)
        return bool(np.all(distance <= self.radii * (1.0 + rel_tol) + 1e-15))


@dataclass(frozen=True, eq=False)
class EntryDisks:
    """Disks for every PQ node-phase, in model order."""

    centers: np.ndarray
    radii: np.ndarray


def _require_feasible(stress: StressSummary) -> float:
    if not stress.feasible or stress.radius is None:
        raise SolvabilityException("Solvability certificate does not hold; no disks can be built")
    return stress.radius


def entry_disks(model: NetworkModel, loads: LoadState, stress: StressSummary) -> EntryDisks:
    """Disks for all PQ node-phases.

    Raises:
        SolvabilityException: If the certificate does not hold
    """
    r = _require_feasible(stress)
    base = model.e * loads.v_nominal
    centers = (1.0 - stress.eta) * base
    radii = r * np.abs(base) * stress.xi
    return EntryDisks(centers=centers, radii=radii)


def build_disks(
    model: NetworkModel,
    loads: LoadState,
    stress: StressSummary,
    critical_node: str,
) -> DiskBundle:
    """Build the disk bundle of a three-phase critical node.

    Args:
        model: Network model
        loads: Load state the stress was computed from
        stress: Feasible stress summary
        critical_node: Bus id exposing phases a, b, c

    Returns:
        DiskBundle; phases with xi = 0 have zero radius

    Raises:
        SolvabilityException: If the certificate does not hold
        NetworkException: If the node is unknown or lacks a phase
    """
    _require_feasible(stress)
    positions = list(model.three_phase_positions(critical_node))
    disks = entry_disks(model, loads, stress)
    bundle = DiskBundle(
        node=str(critical_node),
        centers=disks.centers[positions],
        radii=disks.radii[positions],
    )
    if np.any(bundle.degenerate):
        logger.debug(f"Node {critical_node}: degenerate phases {np.flatnonzero(bundle.degenerate).tolist()}")
    logger.info(f"Disks at node {critical_node}: radii {np.array2string(bundle.radii, precision=4)}")
    return bundle
