"""
Protocol state and configuration types.

SystemState carries the per-agent powers and incremental costs plus one
adaptive weight per undirected edge; ProtocolSpec selects the protocol and
its gains; Event describes a demand injection into the dummy nodes.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from models.generator import BarrierConfig
from network.topology import Edge, normalize_edge


class ProtocolVariant(str, Enum):
    U = "U"  # no limits, integrates the incremental costs directly
    C = "C"  # capacity limits through the log barrier, integrates powers
    D = "D"  # C plus one dummy node per unit for time-varying demand


def edge_key(edge: Edge) -> str:
    return f"{edge[0]}-{edge[1]}"


def parse_edge_key(key: str) -> Edge:
    left, _, right = key.partition("-")
    return normalize_edge(int(left), int(right))


class ProtocolSpec(BaseModel):
    """Protocol variant, adaptive gains and barrier settings."""

    model_config = ConfigDict(frozen=True)

    variant: ProtocolVariant = Field(..., description="U, C or D")
    beta: float = Field(default=1.0, gt=0, description="Uniform adaptive gain beta_ij")
    beta_overrides: Dict[str, float] = Field(
        default_factory=dict, description="Per-edge gains keyed 'i-j' (0-based nodes)"
    )
    initial_weight: float = Field(default=1.0, gt=0, description="a_ij(0) on every edge")
    barrier: BarrierConfig = Field(default_factory=BarrierConfig)

    @field_validator("beta_overrides")
    @classmethod
    def _normalize_overrides(cls, value: Dict[str, float]) -> Dict[str, float]:
        normalized: Dict[str, float] = {}
        for key, gain in value.items():
            if gain <= 0:
                raise ValueError(f"beta for edge {key} must be positive, got {gain}")
            edge = edge_key(parse_edge_key(key))
            if edge in normalized and normalized[edge] != gain:
                raise ValueError(f"conflicting beta values for edge {edge}")
            normalized[edge] = gain
        return normalized

    @property
    def uses_barrier(self) -> bool:
        return self.variant != ProtocolVariant.U

    def beta_vector(self, edges: Sequence[Edge]) -> np.ndarray:
        return np.array([self.beta_overrides.get(edge_key(e), self.beta) for e in edges], dtype=float)


class Event(BaseModel):
    """Demand injection into the dummy nodes at a fixed time."""

    model_config = ConfigDict(frozen=True)

    at: float = Field(..., ge=0, description="Event time (s)")
    kind: Literal["demand_injection"] = "demand_injection"
    total: float = Field(..., description="Injected power (MW); negative for a load drop")
    allocation: Optional[List[float]] = Field(
        default=None, description="Relative split over dummy nodes; equal split when omitted"
    )

    @field_validator("allocation")
    @classmethod
    def _check_allocation(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is None:
            return value
        if any(share < 0 for share in value) or sum(value) <= 0:
            raise ValueError("allocation shares must be non-negative with a positive sum")
        return value

    def shares(self, count: int) -> np.ndarray:
        if self.allocation is None:
            return np.full(count, 1.0 / count)
        weights = np.asarray(self.allocation, dtype=float)
        return weights / weights.sum()


@dataclass(frozen=True)
class SystemState:
    """Snapshot of one run: powers, incremental costs and adaptive weights at time t."""

    t: float
    p: np.ndarray
    weights: np.ndarray
    edges: Tuple[Edge, ...]
    w: Optional[np.ndarray] = None

    def with_powers(self, p: np.ndarray) -> "SystemState":
        return replace(self, p=p, w=None)
