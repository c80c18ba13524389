from .topology import (
    SwitchingSchedule,
    SwitchMode,
    Topology,
    active_topology,
    algebraic_connectivity,
    is_connected,
    laplacian,
    neighbors,
    union_edges,
)

__all__ = [
    "SwitchingSchedule",
    "SwitchMode",
    "Topology",
    "active_topology",
    "algebraic_connectivity",
    "is_connected",
    "laplacian",
    "neighbors",
    "union_edges",
]
