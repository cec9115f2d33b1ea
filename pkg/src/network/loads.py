"""Load states: nominal point, actual loading, and their increment."""

import logging
from dataclasses import dataclass
from typing import Any, Mapping, Union

import numpy as np
from pydantic import ValidationError

from ..powerflow.solver import PowerFlowDivergence, fixed_point_residual, solve_fixed_point
from .model import NetworkException, NetworkModel, parse_label
from .schema import LoadDocument

logger = logging.getLogger(__name__)

NOMINAL_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LoadState:
    """Nominal and actual withdrawals with the nominal normalized voltage.

    sigma is S_L - S0_L exactly; v_nominal solves the power flow at S0_L.
    """

    s_nominal: np.ndarray
    s_actual: np.ndarray
    sigma: np.ndarray
    v_nominal: np.ndarray
    nominal_residual: float


def _as_vector(model: NetworkModel, values, name: str) -> np.ndarray:
    vector = np.array(values, dtype=complex)
    if vector.shape != (model.n_load,):
        raise NetworkException(
            f"{name} has {vector.size} entries but the model has {model.n_load} PQ node-phases"
        )
    vector.setflags(write=False)
    return vector


def make_load_state(
    model: NetworkModel,
    s_nominal,
    s_actual,
    v_nominal=None,
    tol: float = 1e-10,
    max_iter: int = 500,
    residual_tol: float = NOMINAL_RESIDUAL_TOL,
) -> LoadState:
    """Assemble a LoadState, solving for the nominal voltage if needed.

    Args:
        model: Network model the vectors are indexed by
        s_nominal: Nominal withdrawal S0_L per PQ node-phase (p.u.)
        s_actual: Actual withdrawal S_L (p.u.)
        v_nominal: Nominal normalized voltage; solved from S0_L when omitted
        tol: Power-flow tolerance for the nominal solve
        max_iter: Power-flow iteration cap for the nominal solve
        residual_tol: Accepted fixed-point residual of (v_nominal, S0_L)

    Returns:
        LoadState

    Raises:
        NetworkException: On inconsistent indexing, zero nominal voltage,
            a nominal residual above residual_tol, or a divergent nominal solve
    """
    s_nominal = _as_vector(model, s_nominal, "S0_L")
    s_actual = _as_vector(model, s_actual, "S_L")

    if v_nominal is None:
        if not np.any(s_nominal):
            v_nominal = np.ones(model.n_load, dtype=complex)
        else:
            try:
                v_nominal = solve_fixed_point(model, s_nominal, tol=tol, max_iter=max_iter).v
            except PowerFlowDivergence as e:
                raise NetworkException(f"Nominal power flow diverged: {e}") from e
    v_nominal = _as_vector(model, v_nominal, "v0_L")
    if np.any(np.abs(v_nominal) == 0):
        raise NetworkException("Nominal voltage has zero entries")

    residual = fixed_point_residual(model, s_nominal, v_nominal)
    if residual > residual_tol:
        raise NetworkException(f"Nominal point residual {residual:.3e} exceeds {residual_tol:.1e}")

    sigma = s_actual - s_nominal
    sigma.setflags(write=False)
    return LoadState(
        s_nominal=s_nominal,
        s_actual=s_actual,
        sigma=sigma,
        v_nominal=v_nominal,
        nominal_residual=residual,
    )


def with_actual(model: NetworkModel, loads: LoadState, s_actual) -> LoadState:
    """Same nominal point, different actual loading."""
    return make_load_state(model, loads.s_nominal, s_actual, v_nominal=loads.v_nominal)


def _power_vector(model: NetworkModel, values: Mapping[str, Any], unit: str) -> np.ndarray:
    scale = 1.0
    if unit == "kw":
        if not model.base_kva:
            raise NetworkException("Loads are in kW but the network document declares no base_kva")
        scale = 1.0 / model.base_kva
    vector = np.zeros(model.n_load, dtype=complex)
    for label, (p, q) in values.items():
        bus, phase = parse_label(label)
        vector[model.position(bus, phase)] = complex(p, q) * scale
    return vector


def loads_from_document(
    model: NetworkModel,
    document: Union[LoadDocument, Mapping[str, Any]],
    **solver_options,
) -> LoadState:
    """Build a LoadState from a loads JSON document.

    A document without "actual" is taken to be at its nominal point.
    """
    if isinstance(document, LoadDocument):
        doc = document
    else:
        try:
            doc = LoadDocument.model_validate(document)
        except ValidationError as e:
            raise NetworkException(f"Invalid load document: {e}") from e

    s_nominal = _power_vector(model, doc.nominal, doc.unit)
    s_actual = s_nominal if doc.actual is None else _power_vector(model, doc.actual, doc.unit)
    v_nominal = None
    if doc.v_nominal is not None:
        v_nominal = model.vector_from_mapping(
            {label: complex(re, im) for label, (re, im) in doc.v_nominal.items()}
        )
    return make_load_state(model, s_nominal, s_actual, v_nominal=v_nominal, **solver_options)
