"""
IEEE-30 Scenario Presets
Built-in scenarios for the four IEEE-30 bus dispatch studies:

1. ieee30_unconstrained - Protocol U, no limits, P_D = 531.34 MW
2. ieee30_constrained   - Protocol C, capacity limits, P_D = 513.34 MW
3. ieee30_switching     - as 2 over three switching topologies (dwell 10 s)
4. ieee30_dummy         - Protocol D, dummy nodes and a 50 MW injection at 50 s

Edge sets are stand-ins: a ring and three ring variants.
"""

import logging
import os
from typing import Callable, Dict, List

from dynamics.state import Event, ProtocolSpec, ProtocolVariant
from integrate.config import IntegratorConfig
from models.errors import UnknownScenarioError
from models.generator import BarrierConfig, GeneratorParams
from network.presets import GENERATOR_BUSES, SWITCH_DWELL, ieee30_ring, ieee30_switching_topologies
from network.topology import SwitchMode
from tools.scenario_loader import DummyConfig, Scenario, TopologyConfig, read_scenario

logger = logging.getLogger(__name__)

# Cost coefficients (a, b, c) and capacity limits (p_min, p_max) per unit
IEEE30_TABLE = [
    (0.0, 2.00, 0.003750, 50.0, 200.0),
    (0.0, 1.75, 0.001750, 100.0, 400.0),
    (0.0, 1.00, 0.062500, 15.0, 50.0),
    (0.0, 3.25, 0.008324, 10.0, 35.0),
    (0.0, 3.00, 0.025000, 10.0, 30.0),
    (0.0, 3.00, 0.025000, 12.0, 40.0),
]

UNCONSTRAINED_DEMAND = 531.34
UNCONSTRAINED_P0 = [133.3, 287.9, 40.0, 38.0, 15.0, 17.0]
CONSTRAINED_DEMAND = 513.34
CONSTRAINED_P0 = [133.36, 287.98, 40.0, 20.0, 15.0, 17.0]

DUMMY_HEADROOM = 15.0
INJECTION_TIME = 50.0
INJECTION_TOTAL = 50.0

BARRIER_DELTA = 10.0
BARRIER_BETA = 100.0


def ieee30_units() -> List[GeneratorParams]:
    return [
        GeneratorParams(a=a, b=b, c=c, p_min=lo, p_max=hi, label=f"bus {bus}")
        for (a, b, c, lo, hi), bus in zip(IEEE30_TABLE, GENERATOR_BUSES)
    ]


def _ring_config() -> TopologyConfig:
    return TopologyConfig(topologies=[ieee30_ring().sorted_edges()])


def _barrier_protocol(variant: ProtocolVariant) -> ProtocolSpec:
    return ProtocolSpec(variant=variant, beta=BARRIER_BETA, barrier=BarrierConfig(delta=BARRIER_DELTA))


def _barrier_integrator(**overrides) -> IntegratorConfig:
    values = dict(h=2e-3, t_max=200.0, stop_tol=1e-6, record_every=50)
    values.update(overrides)
    return IntegratorConfig(**values)


def ieee30_unconstrained() -> Scenario:
    return Scenario(
        name="ieee30_unconstrained",
        description="IEEE-30, six units, no capacity limits (Protocol U). The stated initial powers sum to 531.2 MW.",
        generators=ieee30_units(),
        protocol=ProtocolSpec(variant=ProtocolVariant.U, beta=1.0),
        topology=_ring_config(),
        initial_powers=list(UNCONSTRAINED_P0),
        demand=UNCONSTRAINED_DEMAND,
        integrator=IntegratorConfig(h=1e-3, t_max=100.0, stop_tol=1e-8, record_every=100),
    )


def ieee30_constrained() -> Scenario:
    return Scenario(
        name="ieee30_constrained",
        description="IEEE-30, six units with capacity limits through the log barrier (Protocol C).",
        generators=ieee30_units(),
        protocol=_barrier_protocol(ProtocolVariant.C),
        topology=_ring_config(),
        initial_powers=list(CONSTRAINED_P0),
        demand=CONSTRAINED_DEMAND,
        integrator=_barrier_integrator(),
    )


def ieee30_switching() -> Scenario:
    return Scenario(
        name="ieee30_switching",
        description="IEEE-30 Protocol C over three ring variants visited cyclically every 10 s.",
        generators=ieee30_units(),
        protocol=_barrier_protocol(ProtocolVariant.C),
        topology=TopologyConfig(
            mode=SwitchMode.CYCLIC,
            dwell=SWITCH_DWELL,
            topologies=[topo.sorted_edges() for topo in ieee30_switching_topologies()],
        ),
        initial_powers=list(CONSTRAINED_P0),
        demand=CONSTRAINED_DEMAND,
        integrator=_barrier_integrator(t_min=30.0),
    )


def ieee30_dummy() -> Scenario:
    return Scenario(
        name="ieee30_dummy",
        description="IEEE-30 Protocol D: one dummy node per unit, 50 MW injected into the dummies at t = 50 s.",
        generators=ieee30_units(),
        protocol=_barrier_protocol(ProtocolVariant.D),
        topology=_ring_config(),
        initial_powers=list(CONSTRAINED_P0),
        local_demands=[p + DUMMY_HEADROOM for p in CONSTRAINED_P0],
        dummy=DummyConfig(b=0.0, c=0.1),
        events=[Event(at=INJECTION_TIME, total=INJECTION_TOTAL)],
        integrator=_barrier_integrator(),
    )


PRESETS: Dict[str, Callable[[], Scenario]] = {
    "ieee30_unconstrained": ieee30_unconstrained,
    "ieee30_constrained": ieee30_constrained,
    "ieee30_switching": ieee30_switching,
    "ieee30_dummy": ieee30_dummy,
}


def list_presets() -> List[str]:
    return list(PRESETS)


def get_preset(name: str) -> Scenario:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset '{name}'; available: {', '.join(PRESETS)}") from None


def load_scenario(ref: str) -> Scenario:
    """Resolve a preset name or a path to a JSON scenario file."""
    if ref in PRESETS:
        logger.debug(f"Using built-in preset '{ref}'")
        return get_preset(ref)
    if os.path.isfile(ref):
        return read_scenario(ref)
    raise UnknownScenarioError(f"'{ref}' is neither a preset ({', '.join(PRESETS)}) nor a scenario file")
