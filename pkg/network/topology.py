"""
Communication Topologies
Undirected graphs among generator agents, dwell-time switching schedules and
the graph diagnostics (connectivity, Laplacian, algebraic connectivity).

Edges are stored as sorted pairs (i, j) with i < j, so symmetry holds by
construction. The protocols never read the algebraic connectivity; it is
reported for diagnostics only.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

Edge = Tuple[int, int]


def normalize_edge(i: int, j: int) -> Edge:
    if i == j:
        raise ValueError(f"self-loop on node {i} is not allowed")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Topology:
    """Undirected communication graph on nodes 0..n-1."""

    n: int
    edges: FrozenSet[Edge]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a topology needs at least one node")
        for i, j in self.edges:
            if not 0 <= i < j < self.n:
                raise ValueError(f"edge ({i}, {j}) is not a sorted pair of nodes below {self.n}")

    @classmethod
    def from_edges(cls, n: int, pairs: Iterable[Sequence[int]]) -> "Topology":
        edges: Set[Edge] = set()
        for pair in pairs:
            i, j = int(pair[0]), int(pair[1])
            edge = normalize_edge(i, j)
            if edge in edges:
                raise ValueError(f"duplicate edge {edge}")
            edges.add(edge)
        return cls(n=n, edges=frozenset(edges))

    def sorted_edges(self) -> List[Edge]:
        return sorted(self.edges)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges)
        return graph


def ring(n: int) -> Topology:
    if n < 3:
        return path(n)
    return Topology.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> Topology:
    return Topology.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def complete(n: int) -> Topology:
    return Topology.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def neighbors(topo: Topology, i: int) -> Set[int]:
    """All j with {i, j} an edge."""
    if not 0 <= i < topo.n:
        raise IndexError(f"node {i} out of range for a graph on {topo.n} nodes")
    return {b if a == i else a for a, b in topo.edges if i in (a, b)}


def isolated_nodes(topo: Topology) -> List[int]:
    touched = {node for edge in topo.edges for node in edge}
    return [i for i in range(topo.n) if i not in touched]


def is_connected(topo: Topology) -> bool:
    """Breadth-first connectivity; a single node is connected."""
    if topo.n == 1:
        return True
    return nx.is_connected(topo.to_networkx())


def laplacian(topo: Topology) -> np.ndarray:
    """Unweighted graph Laplacian as a dense n x n array."""
    graph = topo.to_networkx()
    return nx.laplacian_matrix(graph, nodelist=range(topo.n)).toarray().astype(float)


def algebraic_connectivity(topo: Topology) -> float:
    """Second-smallest Laplacian eigenvalue (diagnostic only)."""
    if topo.n < 2:
        raise ValueError("algebraic connectivity needs at least two nodes")
    eigenvalues = np.linalg.eigvalsh(laplacian(topo))
    return float(max(eigenvalues[1], 0.0))


def with_dummies(topo: Topology) -> Topology:
    """Graph on 2n nodes: the base edges plus one link from each dummy n+i to its unit i."""
    edges = set(topo.edges)
    edges.update((i, topo.n + i) for i in range(topo.n))
    return Topology(n=2 * topo.n, edges=frozenset(edges))


class SwitchMode(str, Enum):
    FIXED = "fixed"
    CYCLIC = "cyclic"


@dataclass(frozen=True)
class SwitchingSchedule:
    """A finite set of topologies visited cyclically with a fixed dwell time."""

    topologies: Tuple[Topology, ...]
    dwell: float = 0.0
    mode: SwitchMode = SwitchMode.FIXED

    def __post_init__(self):
        if not self.topologies:
            raise ValueError("a schedule needs at least one topology")
        sizes = {topo.n for topo in self.topologies}
        if len(sizes) != 1:
            raise ValueError(f"all topologies must share the node count, got {sorted(sizes)}")
        if self.mode == SwitchMode.CYCLIC and not self.dwell > 0:
            raise ValueError("cyclic switching needs a positive dwell time")

    @classmethod
    def fixed(cls, topo: Topology) -> "SwitchingSchedule":
        return cls(topologies=(topo,))

    @property
    def n(self) -> int:
        return self.topologies[0].n

    def epoch(self, t: float) -> int:
        """Index k of the dwell interval [k*dwell, (k+1)*dwell) containing t."""
        k = int(math.floor(t / self.dwell))
        if (k + 1) * self.dwell <= t:
            k += 1
        elif k * self.dwell > t:
            k -= 1
        return k

    def active_index(self, t: float) -> int:
        if self.mode == SwitchMode.FIXED or len(self.topologies) == 1:
            return 0
        return self.epoch(t) % len(self.topologies)

    def next_switch_time(self, t: float) -> Optional[float]:
        """First boundary strictly after t, or None when nothing ever switches."""
        if self.mode == SwitchMode.FIXED or len(self.topologies) == 1:
            return None
        return (self.epoch(t) + 1) * self.dwell


def active_topology(sched: SwitchingSchedule, t: float) -> Topology:
    """Topology in force at time t; a switch takes effect exactly at k*dwell."""
    return sched.topologies[sched.active_index(t)]


def union_edges(sched: SwitchingSchedule) -> List[Edge]:
    """Every edge that appears in any topology of the schedule, sorted."""
    edges: Set[Edge] = set()
    for topo in sched.topologies:
        edges.update(topo.edges)
    return sorted(edges)
