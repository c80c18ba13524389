"""
Scenario Loader
Parses and validates scenario documents (JSON) into a Scenario model.

A scenario names the units, the protocol, the communication graph(s), the
initial powers, the demand and any demand events, plus integrator settings.
Validation enforces what the protocols need to be well posed:
- C: initial powers strictly inside the limits and summing to the demand
- D: as C for the real units, and every dummy starting at a positive power
- events only under D, edge indices in range, beta overrides on existing edges
"""

import hashlib
import json
import logging
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from dynamics.state import Event, ProtocolSpec, ProtocolVariant, parse_edge_key
from integrate.config import IntegratorConfig
from models.errors import ParseError, ScenarioValidationError
from models.generator import DUMMY_B, DUMMY_C, GeneratorParams, UnitKind, dummy_params
from network.topology import SwitchingSchedule, SwitchMode, Topology, union_edges, with_dummies

logger = logging.getLogger(__name__)

DEMAND_TOLERANCE = 1e-9


class TopologyConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: SwitchMode = Field(default=SwitchMode.FIXED, description="fixed or cyclic switching")
    dwell: float = Field(default=0.0, ge=0, description="Dwell time per topology (s)")
    topologies: List[List[Tuple[int, int]]] = Field(..., min_length=1, description="Edge lists over the real units, 0-based")
    attach_dummies: bool = Field(default=True, description="Protocol D: link dummy n+i to unit i in every topology")


class DummyConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float = 0.0
    b: float = DUMMY_B
    c: float = Field(default=DUMMY_C, gt=0)


class Scenario(BaseModel):
    """A complete, validated simulation input."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1)
    description: str = ""
    generators: List[GeneratorParams] = Field(..., min_length=1)
    protocol: ProtocolSpec
    topology: TopologyConfig
    initial_powers: List[float]
    demand: Optional[float] = Field(default=None, description="Total demand P_D (MW)")
    local_demands: Optional[List[float]] = Field(default=None, description="Protocol D: per-unit local demand (MW)")
    dummy: DummyConfig = Field(default_factory=DummyConfig)
    events: List[Event] = Field(default_factory=list)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)

    @model_validator(mode="after")
    def _check_consistency(self) -> "Scenario":
        n = len(self.generators)
        variant = self.protocol.variant

        if any(g.kind != UnitKind.REAL for g in self.generators):
            raise ValueError("generators must be real units; dummy nodes are added by protocol D")
        if len(self.initial_powers) != n:
            raise ValueError(f"{len(self.initial_powers)} initial powers for {n} generators")

        if variant == ProtocolVariant.C:
            if self.demand is None:
                raise ValueError("protocol C needs a demand")
            total = sum(self.initial_powers)
            if abs(total - self.demand) > DEMAND_TOLERANCE:
                raise ValueError(f"sum of initial powers {total:.2f} ≠ demand {self.demand:.2f}")

        if variant != ProtocolVariant.U:
            for k, (g, p) in enumerate(zip(self.generators, self.initial_powers)):
                if not g.p_min < p < g.p_max:
                    raise ValueError(f"initial power of unit {k + 1} ({p}) is not strictly inside ({g.p_min}, {g.p_max})")

        if variant == ProtocolVariant.D:
            if self.local_demands is None or len(self.local_demands) != n:
                raise ValueError(f"protocol D needs {n} local demands")
            for k, (d, p) in enumerate(zip(self.local_demands, self.initial_powers)):
                if not d - p > 0:
                    raise ValueError(f"local demand {d} at unit {k + 1} leaves dummy power {d - p:.6g} <= 0")
        elif self.events:
            raise ValueError("demand events need protocol D (dummy nodes)")

        for event in self.events:
            if event.allocation is not None and len(event.allocation) != n:
                raise ValueError(f"event at t={event.at} allocates over {len(event.allocation)} dummies, expected {n}")

        if self.topology.mode == SwitchMode.CYCLIC and not self.topology.dwell > 0:
            raise ValueError("cyclic switching needs a positive dwell time")
        for edges in self.topology.topologies:
            for i, j in edges:
                if not (0 <= i < n and 0 <= j < n):
                    raise ValueError(f"edge ({i}, {j}) references a unit outside 0..{n - 1}")

        known = set(union_edges(self.schedule()))
        for key in self.protocol.beta_overrides:
            if parse_edge_key(key) not in known:
                raise ValueError(f"beta override for edge {key} which is in no topology")
        return self

    @property
    def n_real(self) -> int:
        return len(self.generators)

    def units(self) -> List[GeneratorParams]:
        """Real units, followed by one dummy per unit under protocol D."""
        units = list(self.generators)
        if self.protocol.variant == ProtocolVariant.D:
            units += [
                dummy_params(b=self.dummy.b, c=self.dummy.c, a=self.dummy.a, label=f"dummy {k + 1}")
                for k in range(self.n_real)
            ]
        return units

    def dummy_indices(self) -> List[int]:
        if self.protocol.variant != ProtocolVariant.D:
            return []
        return list(range(self.n_real, 2 * self.n_real))

    def schedule(self) -> SwitchingSchedule:
        topologies = [Topology.from_edges(self.n_real, edges) for edges in self.topology.topologies]
        if self.protocol.variant == ProtocolVariant.D and self.topology.attach_dummies:
            topologies = [with_dummies(topo) for topo in topologies]
        elif self.protocol.variant == ProtocolVariant.D:
            topologies = [Topology(n=2 * self.n_real, edges=topo.edges) for topo in topologies]
        return SwitchingSchedule(topologies=tuple(topologies), dwell=self.topology.dwell, mode=self.topology.mode)

    def all_initial_powers(self) -> List[float]:
        powers = list(self.initial_powers)
        if self.protocol.variant == ProtocolVariant.D:
            powers += [d - p for d, p in zip(self.local_demands, self.initial_powers)]
        return powers

    def base_demand(self) -> float:
        if self.protocol.variant == ProtocolVariant.D:
            return float(sum(self.local_demands))
        if self.demand is not None:
            return float(self.demand)
        return float(sum(self.initial_powers))

    def effective_demand(self, t: float) -> float:
        """Demand in force at time t, including every injection with at <= t."""
        return self.base_demand() + sum(e.total for e in self.events if e.at <= t)


def parse_scenario(text: str) -> Scenario:
    """Parse a JSON scenario document. Raises ParseError or ScenarioValidationError."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid scenario JSON at line {e.lineno} column {e.colno}: {e.msg}") from e

    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        problems = [f"{'.'.join(str(part) for part in err['loc']) or 'scenario'}: {err['msg']}" for err in e.errors()]
        raise ScenarioValidationError("invalid scenario: " + "; ".join(problems), problems) from e
    logger.debug(f"Parsed scenario '{scenario.name}' (protocol {scenario.protocol.variant.value})")
    return scenario


def read_scenario(path: str) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as e:
        raise ParseError(f"cannot read scenario file {path}: {e}") from e
    return parse_scenario(text)


def serialize_scenario(scenario: Scenario) -> str:
    return scenario.model_dump_json(indent=2)


def _digest(data) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def fingerprint(scenario: Scenario) -> str:
    """sha256 of the canonical JSON form; identical inputs give identical runs."""
    return _digest(scenario.model_dump(mode="json"))


def system_fingerprint(scenario: Scenario) -> str:
    """Like fingerprint, but blind to the name, description and integrator settings."""
    return _digest(scenario.model_dump(mode="json", exclude={"name", "description", "integrator"}))
