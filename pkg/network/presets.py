"""
IEEE-30 communication presets
Six generator agents; node k (0-based) stands for the generator at bus
GENERATOR_BUSES[k]. The edge sets are stand-ins; any connected graph meets
the consensus hypotheses.
"""

from typing import Tuple

from network.topology import SwitchingSchedule, SwitchMode, Topology, ring

GENERATOR_BUSES: Tuple[int, ...] = (1, 2, 5, 8, 11, 13)
SWITCH_DWELL = 10.0


def ieee30_ring() -> Topology:
    """Default graph: ring 1-2-3-4-5-6-1."""
    return ring(len(GENERATOR_BUSES))


def ieee30_switching_topologies() -> Tuple[Topology, ...]:
    """Three connected ring variants, each missing one ring edge and adding one chord."""
    n = len(GENERATOR_BUSES)
    base = ieee30_ring().edges
    variants = (
        ((0, 1), (1, 4)),
        ((2, 3), (0, 3)),
        ((4, 5), (2, 5)),
    )
    topologies = []
    for removed, chord in variants:
        edges = (set(base) - {removed}) | {chord}
        topologies.append(Topology(n=n, edges=frozenset(edges)))
    return tuple(topologies)


def ieee30_switching_schedule(dwell: float = SWITCH_DWELL) -> SwitchingSchedule:
    return SwitchingSchedule(topologies=ieee30_switching_topologies(), dwell=dwell, mode=SwitchMode.CYCLIC)
