"""Pydantic schemas for network and load documents.

A network document is JSON with explicit (bus, phase) labels. Complex numbers
are written as two-element [re, im] lists; admittance/impedance blocks are
square lists of such pairs ordered like the phase list they belong to.
"""

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Phase = Literal["a", "b", "c"]
ComplexPair = Tuple[float, float]
ComplexBlock = List[List[ComplexPair]]


def _check_square(block: Optional[ComplexBlock], size: int, what: str) -> None:
    if block is None:
        return
    if len(block) != size or any(len(row) != size for row in block):
        raise ValueError(f"{what} must be {size}x{size} to match its phases")


def _check_phases(phases: List[str]) -> List[str]:
    if not phases:
        raise ValueError("phase list must not be empty")
    if len(set(phases)) != len(phases):
        raise ValueError(f"duplicate phases in {phases}")
    return phases


class BusSpec(BaseModel):
    """A bus and the phases it exposes."""

    id: str
    phases: List[Phase] = Field(default_factory=lambda: ["a", "b", "c"])
    kind: Literal["slack", "pq"] = "pq"
    voltage: Optional[List[ComplexPair]] = None

    @field_validator("phases")
    @classmethod
    def unique_phases(cls, v):
        return _check_phases(v)

    @model_validator(mode="after")
    def voltage_matches_phases(self):
        if self.voltage is not None:
            if self.kind != "slack":
                raise ValueError(f"bus {self.id}: only the slack bus takes a voltage")
            if len(self.voltage) != len(self.phases):
                raise ValueError(f"bus {self.id}: voltage needs one entry per phase")
        return self


class LineSpec(BaseModel):
    """A line (or any two-port) given by its series admittance or impedance block."""

    model_config = ConfigDict(populate_by_name=True)

    from_bus: str = Field(alias="from")
    to_bus: str = Field(alias="to")
    phases: Optional[List[Phase]] = None
    y_block: Optional[ComplexBlock] = None
    z_block: Optional[ComplexBlock] = None

    @model_validator(mode="after")
    def one_block(self):
        if (self.y_block is None) == (self.z_block is None):
            raise ValueError(f"line {self.from_bus}-{self.to_bus}: give exactly one of y_block, z_block")
        if self.phases is not None:
            _check_phases(self.phases)
        return self


class ShuntSpec(BaseModel):
    """A shunt admittance block to ground at one bus."""

    bus: str
    phases: Optional[List[Phase]] = None
    y_block: ComplexBlock


class YMatrixSpec(BaseModel):
    """An explicit admittance matrix with "bus.phase" index labels."""

    index: List[str]
    entries: List[List[ComplexPair]]

    @model_validator(mode="after")
    def square(self):
        n = len(self.index)
        if len(set(self.index)) != n:
            raise ValueError("y_matrix index labels must be unique")
        _check_square(self.entries, n, "y_matrix entries")
        return self


class NetworkDocument(BaseModel):
    """Top-level network description."""

    name: str = "network"
    base_kva: Optional[float] = Field(None, gt=0)
    buses: List[BusSpec]
    lines: List[LineSpec] = Field(default_factory=list)
    shunts: List[ShuntSpec] = Field(default_factory=list)
    y_matrix: Optional[YMatrixSpec] = None

    @model_validator(mode="after")
    def one_source_of_admittance(self):
        if self.y_matrix is not None and (self.lines or self.shunts):
            raise ValueError("give either lines/shunts or y_matrix, not both")
        if self.y_matrix is None and not self.lines:
            raise ValueError("network has neither lines nor a y_matrix")
        ids = [bus.id for bus in self.buses]
        if len(set(ids)) != len(ids):
            raise ValueError("bus ids must be unique")
        slack_count = sum(1 for bus in self.buses if bus.kind == "slack")
        if slack_count != 1:
            raise ValueError(f"exactly one slack bus required, found {slack_count}")
        return self


class LoadDocument(BaseModel):
    """Per-(bus, phase) complex power withdrawals.

    Keys are "bus.phase" labels, values are [P, Q] pairs in the declared unit.
    Missing labels mean zero load.
    """

    unit: Literal["pu", "kw"] = "pu"
    nominal: Dict[str, ComplexPair] = Field(default_factory=dict)
    actual: Optional[Dict[str, ComplexPair]] = None
    v_nominal: Optional[Dict[str, ComplexPair]] = None
