"""
Trace types produced by a run.

Records are non-decreasing in t. Two records share a timestamp only at a
demand event: the first holds the state just before the injection, the second
the state just after.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from network.topology import Edge


@dataclass(frozen=True)
class TraceRecord:
    t: float
    p: np.ndarray
    w: np.ndarray
    weights: np.ndarray
    sum_p: float
    disagreement: float
    control_norm: float
    lyapunov: float = float("nan")
    topology_index: int = 0


@dataclass
class TraceSummary:
    converged: bool = False
    reason: str = ""
    final_time: float = 0.0
    final_disagreement: float = float("nan")
    final_sum_p: float = float("nan")
    demand: float = float("nan")
    demand_mismatch: float = float("nan")
    final_control_norm: float = float("nan")
    rejected_steps: int = 0
    switches: int = 0
    steps: int = 0
    wall_clock: float = 0.0

    @property
    def non_convergence(self) -> bool:
        return not self.converged


@dataclass
class Trace:
    fingerprint: str
    n: int
    edges: Tuple[Edge, ...]
    records: List[TraceRecord] = field(default_factory=list)
    summary: TraceSummary = field(default_factory=TraceSummary)
    scenario_name: str = ""
    system_fingerprint: str = ""

    @property
    def final(self) -> Optional[TraceRecord]:
        return self.records[-1] if self.records else None

    def column(self, name: str) -> np.ndarray:
        """Stack one record attribute over time (rows = records)."""
        return np.array([getattr(record, name) for record in self.records])

    def segments(self) -> List[List[TraceRecord]]:
        """Split the records at event boundaries (repeated timestamps)."""
        groups: List[List[TraceRecord]] = []
        for record in self.records:
            if groups and groups[-1] and record.t == groups[-1][-1].t:
                groups.append([record])
            elif groups:
                groups[-1].append(record)
            else:
                groups.append([record])
        return groups
