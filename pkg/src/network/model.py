"""Network model assembly and no-load normalization.

Builds the partitioned admittance matrix of a three-phase feeder from a network
document and computes the no-load voltage E = -Y_LL^-1 Y_LG V_G together with
the normalized impedance Z_hat = diag(E)^-1 Y_LL^-1 diag(conj(E))^-1.

Entries are ordered slack phases first, then PQ (bus, phase) entries in
document order. Missing phases on laterals are simply absent from the index.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from .schema import NetworkDocument

logger = logging.getLogger(__name__)

ALPHA = np.exp(2j * np.pi / 3)
PHASES = ("a", "b", "c")

# Balanced 1 p.u. slack: a at 0, b at -120, c at +120 degrees
DEFAULT_SLACK_VOLTAGE = {"a": 1.0 + 0.0j, "b": ALPHA ** 2, "c": ALPHA}

CASES_DIR = Path(__file__).resolve().parent / "cases"

RESIDUAL_TOL = 1e-10
CONDITION_LIMIT = 1e12
ZERO_ENTRY_TOL = 1e-12

Label = Tuple[str, str]


class NetworkException(Exception):
    """Raised when a network document cannot be turned into a valid model."""
    pass


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def parse_label(label: str) -> Label:
    """Split a "bus.phase" label into its parts."""
    bus, sep, phase = label.rpartition(".")
    if not sep or not bus or phase not in PHASES:
        raise NetworkException(f"Malformed node-phase label '{label}' (expected 'bus.phase')")
    return bus, phase


def format_label(label: Label) -> str:
    return f"{label[0]}.{label[1]}"


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """Immutable partitioned network with its no-load normalization.

    Arrays are read-only, so one model can be shared across threads.
    """

    name: str
    bus_phases: Dict[str, Tuple[str, ...]]
    slack_bus: str
    slack_labels: Tuple[Label, ...]
    load_labels: Tuple[Label, ...]
    v_slack: np.ndarray
    y_gg: np.ndarray
    y_gl: np.ndarray
    y_lg: np.ndarray
    y_ll: np.ndarray
    y_ll_inv: np.ndarray
    e: np.ndarray
    z_hat: np.ndarray
    base_kva: Optional[float] = None
    _positions: Dict[Label, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_positions", {label: k for k, label in enumerate(self.load_labels)}
        )

    @property
    def n_load(self) -> int:
        return len(self.load_labels)

    @property
    def load_buses(self) -> List[str]:
        seen = []
        for bus, _ in self.load_labels:
            if bus not in seen:
                seen.append(bus)
        return seen

    def position(self, bus: str, phase: str) -> int:
        """Index of a PQ (bus, phase) entry in the load vectors."""
        try:
            return self._positions[(str(bus), phase)]
        except KeyError:
            raise NetworkException(f"Unknown PQ node-phase {bus}.{phase}") from None

    def phase_positions(self, bus: str) -> Dict[str, int]:
        """Map each phase present at a PQ bus to its load-vector index."""
        bus = str(bus)
        if bus not in self.bus_phases or bus == self.slack_bus:
            raise NetworkException(f"Unknown PQ bus '{bus}'")
        return {phase: self._positions[(bus, phase)] for phase in self.bus_phases[bus]}

    def three_phase_positions(self, bus: str) -> Tuple[int, int, int]:
        """Indices of phases a, b, c at a bus that must expose all three."""
        positions = self.phase_positions(bus)
        missing = [p for p in PHASES if p not in positions]
        if missing:
            raise NetworkException(f"Bus {bus} is missing phase(s) {', '.join(missing)}")
        return tuple(positions[p] for p in PHASES)

    def vector_from_mapping(self, values: Mapping[str, complex]) -> np.ndarray:
        """Build a load-indexed complex vector from a {"bus.phase": value} mapping."""
        vector = np.zeros(self.n_load, dtype=complex)
        for label, value in values.items():
            bus, phase = parse_label(label)
            vector[self.position(bus, phase)] = value
        return vector

    def physical(self, v: np.ndarray) -> np.ndarray:
        """Physical voltages V_L = diag(E) v_L from normalized ones."""
        return self.e * np.asarray(v)


# ==================== Assembly ====================

def _block(pairs) -> np.ndarray:
    array = np.asarray(pairs, dtype=float)
    return array[..., 0] + 1j * array[..., 1]


def _primitive_admittance(line) -> np.ndarray:
    if line.y_block is not None:
        return _block(line.y_block)
    z = _block(line.z_block)
    try:
        return np.linalg.inv(z)
    except np.linalg.LinAlgError as e:
        raise NetworkException(
            f"Singular impedance block on line {line.from_bus}-{line.to_bus}"
        ) from e


def _assemble_from_lines(doc: NetworkDocument, index: Dict[Label, int]) -> np.ndarray:
    n = len(index)
    y = np.zeros((n, n), dtype=complex)
    phases_of = {bus.id: list(bus.phases) for bus in doc.buses}

    for line in doc.lines:
        for end in (line.from_bus, line.to_bus):
            if end not in phases_of:
                raise NetworkException(f"Line {line.from_bus}-{line.to_bus} has dangling endpoint '{end}'")
        phases = line.phases or [
            p for p in PHASES
            if p in phases_of[line.from_bus] and p in phases_of[line.to_bus]
        ]
        for end in (line.from_bus, line.to_bus):
            absent = [p for p in phases if p not in phases_of[end]]
            if absent:
                raise NetworkException(
                    f"Line {line.from_bus}-{line.to_bus} uses phase(s) {absent} absent at bus {end}"
                )
        y_line = _primitive_admittance(line)
        if y_line.shape != (len(phases), len(phases)):
            raise NetworkException(
                f"Line {line.from_bus}-{line.to_bus}: block is {y_line.shape}, expected {len(phases)}x{len(phases)}"
            )
        i = [index[(line.from_bus, p)] for p in phases]
        j = [index[(line.to_bus, p)] for p in phases]
        y[np.ix_(i, i)] += y_line
        y[np.ix_(j, j)] += y_line
        y[np.ix_(i, j)] -= y_line
        y[np.ix_(j, i)] -= y_line

    for shunt in doc.shunts:
        if shunt.bus not in phases_of:
            raise NetworkException(f"Shunt at unknown bus '{shunt.bus}'")
        phases = shunt.phases or phases_of[shunt.bus]
        y_shunt = _block(shunt.y_block)
        if y_shunt.shape != (len(phases), len(phases)):
            raise NetworkException(f"Shunt at bus {shunt.bus}: block does not match its phases")
        k = [index[(shunt.bus, p)] for p in phases]
        y[np.ix_(k, k)] += y_shunt

    return y


def _assemble_from_matrix(doc: NetworkDocument, index: Dict[Label, int]) -> np.ndarray:
    labels = [parse_label(label) for label in doc.y_matrix.index]
    unknown = [format_label(label) for label in labels if label not in index]
    if unknown:
        raise NetworkException(f"y_matrix labels not declared by any bus: {unknown}")
    if len(labels) != len(index):
        missing = [format_label(label) for label in index if label not in labels]
        raise NetworkException(f"y_matrix is missing node-phases: {missing}")
    order = [index[label] for label in labels]
    y = np.zeros((len(index), len(index)), dtype=complex)
    y[np.ix_(order, order)] = _block(doc.y_matrix.entries)
    return y


def build_network(description: Union[NetworkDocument, Mapping[str, Any]]) -> NetworkModel:
    """Build and validate a network model from a document.

    Args:
        description: Parsed JSON mapping or an already validated NetworkDocument

    Returns:
        NetworkModel with partitioned admittance, E and Z_hat

    Raises:
        NetworkException: On schema errors, dangling lines, singular Y_LL,
            zero no-load voltages or a failed reconstruction check
    """
    if isinstance(description, NetworkDocument):
        doc = description
    else:
        try:
            doc = NetworkDocument.model_validate(description)
        except ValidationError as e:
            raise NetworkException(f"Invalid network document: {e}") from e

    slack = next(bus for bus in doc.buses if bus.kind == "slack")
    slack_labels = tuple((slack.id, p) for p in slack.phases)
    load_labels = tuple(
        (bus.id, p) for bus in doc.buses if bus.kind == "pq" for p in bus.phases
    )
    if not load_labels:
        raise NetworkException("Network has no PQ node-phases")

    index = {label: k for k, label in enumerate(slack_labels + load_labels)}
    if doc.y_matrix is not None:
        y = _assemble_from_matrix(doc, index)
    else:
        y = _assemble_from_lines(doc, index)

    if slack.voltage is not None:
        v_slack = _block(slack.voltage)
    else:
        v_slack = np.array([DEFAULT_SLACK_VOLTAGE[p] for p in slack.phases])

    g = len(slack_labels)
    y_gg, y_gl = y[:g, :g], y[:g, g:]
    y_lg, y_ll = y[g:, :g], y[g:, g:]

    cond = np.linalg.cond(y_ll)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise NetworkException(f"Y_LL is singular or ill-conditioned (cond={cond:.3e})")
    try:
        y_ll_inv = np.linalg.inv(y_ll)
    except np.linalg.LinAlgError as e:
        raise NetworkException("Y_LL is singular") from e

    e = -np.linalg.solve(y_ll, y_lg @ v_slack)
    scale = max(1.0, float(np.max(np.abs(v_slack))))
    if np.min(np.abs(e)) <= ZERO_ENTRY_TOL * scale:
        k = int(np.argmin(np.abs(e)))
        raise NetworkException(
            f"No-load voltage is zero at {format_label(load_labels[k])}; "
            f"is that node connected to the slack?"
        )

    residual = float(np.max(np.abs(e + y_ll_inv @ (y_lg @ v_slack))))
    if residual > RESIDUAL_TOL * scale:
        raise NetworkException(f"No-load voltage reconstruction residual {residual:.3e} too large")

    z_hat = (1.0 / e)[:, None] * y_ll_inv * (1.0 / np.conj(e))[None, :]
    z_check = float(np.max(np.abs(e[:, None] * z_hat * np.conj(e)[None, :] - y_ll_inv)))
    if z_check > RESIDUAL_TOL * max(1.0, float(np.max(np.abs(y_ll_inv)))):
        raise NetworkException(f"Normalized impedance reconstruction residual {z_check:.3e} too large")

    model = NetworkModel(
        name=doc.name,
        bus_phases={bus.id: tuple(bus.phases) for bus in doc.buses},
        slack_bus=slack.id,
        slack_labels=slack_labels,
        load_labels=load_labels,
        v_slack=_readonly(v_slack),
        y_gg=_readonly(y_gg),
        y_gl=_readonly(y_gl),
        y_lg=_readonly(y_lg),
        y_ll=_readonly(y_ll),
        y_ll_inv=_readonly(y_ll_inv),
        e=_readonly(e),
        z_hat=_readonly(z_hat),
        base_kva=doc.base_kva,
    )
    logger.info(f"Built network '{model.name}' with {model.n_load} PQ node-phases (cond(Y_LL)={cond:.2e})")
    return model


def read_json(path: Union[str, Path]) -> Any:
    """Read a JSON document, wrapping I/O and syntax errors."""
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise NetworkException(f"File not found: {path}") from e
    except json.JSONDecodeError as e:
        raise NetworkException(f"Malformed JSON in {path}: {e}") from e


def load_network(path: Union[str, Path]) -> NetworkModel:
    """Build a network model from a JSON file."""
    return build_network(read_json(path))


def case_path(name: str) -> Path:
    path = CASES_DIR / f"{name}.json"
    if not path.exists():
        available = sorted(p.stem for p in CASES_DIR.glob("*.json"))
        raise NetworkException(f"Unknown bundled case '{name}'. Available: {available}")
    return path


def load_case(name: str = "five_bus") -> NetworkModel:
    """Build one of the bundled network cases."""
    return load_network(case_path(name))
