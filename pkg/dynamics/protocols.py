"""
Adaptive Consensus Protocols
Right-hand sides of the three protocols over an undirected graph with one
adaptive weight per edge:

    x_i' = sum_{j in N_i} a_ij (w_j - w_i)
    a_ij' = beta_ij (w_i - w_j)^2

Protocol U integrates the incremental costs (x = w). Protocols C and D
integrate the powers (x = p) and evaluate w through the barrier-modified IC;
D additionally carries one dummy node per real unit.

Each edge contributes the same flow to both endpoints with opposite sign, so
sum_i x_i' vanishes; isolated agents get an exactly zero derivative. Edges
that are not in the active topology keep their weight frozen.
"""

import logging
from typing import Callable, List, NamedTuple, Sequence

import numpy as np

from dynamics.state import ProtocolSpec, ProtocolVariant, SystemState
from models.errors import DomainError
from models.generator import GeneratorParams, UnitArrays
from network.topology import Edge, SwitchingSchedule, Topology, is_connected, isolated_nodes, union_edges

logger = logging.getLogger(__name__)

# Relative rounding allowance of the spread guard
SPREAD_SLACK = 1e-12


class Derivative(NamedTuple):
    primary: np.ndarray  # dw/dt under U, dp/dt under C and D
    weights: np.ndarray


def consensus_terms(
    w: np.ndarray,
    src: np.ndarray,
    dst: np.ndarray,
    a: np.ndarray,
    beta: np.ndarray,
    n: int,
) -> Derivative:
    """Consensus flow and weight growth for the listed (active) edges."""
    diff = w[dst] - w[src]
    flow = a * diff
    primary = np.bincount(src, weights=flow, minlength=n) - np.bincount(dst, weights=flow, minlength=n)
    return Derivative(primary, beta * diff * diff)


def _active_positions(edges: Sequence[Edge], topo: Topology) -> np.ndarray:
    return np.array([k for k, edge in enumerate(edges) if edge in topo.edges], dtype=int)


def consensus_derivative(w: np.ndarray, state: SystemState, topo: Topology, spec: ProtocolSpec) -> Derivative:
    if topo.n != len(w):
        raise ValueError(f"topology has {topo.n} nodes but the state has {len(w)} agents")
    missing = set(topo.edges) - set(state.edges)
    if missing:
        raise ValueError(f"state carries no weight for edges {sorted(missing)}")
    if not is_connected(topo):
        logger.warning(f"Active topology is disconnected; isolated agents {isolated_nodes(topo)} freeze")

    edges = np.array(state.edges, dtype=int).reshape(-1, 2)
    active = _active_positions(state.edges, topo)
    beta = spec.beta_vector(state.edges)
    terms = consensus_terms(w, edges[active, 0], edges[active, 1], state.weights[active], beta[active], len(w))
    weights = np.zeros(len(state.edges))
    weights[active] = terms.weights
    return Derivative(terms.primary, weights)


def _require_variant(spec: ProtocolSpec, variant: ProtocolVariant) -> None:
    if spec.variant != variant:
        raise ValueError(f"protocol {variant.value} right-hand side called with a {spec.variant.value} spec")


def rhs_protocol_u(state: SystemState, topo: Topology, spec: ProtocolSpec) -> Derivative:
    """Derivative of (w, weights) under the unconstrained protocol."""
    _require_variant(spec, ProtocolVariant.U)
    if state.w is None:
        raise ValueError("protocol U needs the incremental costs in state.w")
    return consensus_derivative(state.w, state, topo, spec)


def rhs_protocol_c(
    state: SystemState, topo: Topology, spec: ProtocolSpec, params: Sequence[GeneratorParams]
) -> Derivative:
    """Derivative of (p, weights) under the capacity-limited protocol."""
    _require_variant(spec, ProtocolVariant.C)
    units = UnitArrays(params, spec.barrier, barrier=True)
    return consensus_derivative(units.ic(state.p), state, topo, spec)


def rhs_protocol_d(
    state: SystemState, topo_with_dummies: Topology, spec: ProtocolSpec, params: Sequence[GeneratorParams]
) -> Derivative:
    """Derivative of (p, weights) over real and dummy agents together."""
    _require_variant(spec, ProtocolVariant.D)
    units = UnitArrays(params, spec.barrier, barrier=True)
    return consensus_derivative(units.ic(state.p), state, topo_with_dummies, spec)


class ConsensusSystem:
    """
    Flat-vector form of one protocol for the integrator.

    The state vector is [x_1..x_n, a_1..a_m] where x is w (U) or p (C, D) and
    the weights follow the sorted union of edges over every topology in the
    schedule. Index arrays for each topology are built once.
    """

    def __init__(self, units: Sequence[GeneratorParams], spec: ProtocolSpec, schedule: SwitchingSchedule):
        if schedule.n != len(units):
            raise ValueError(f"schedule has {schedule.n} nodes for {len(units)} units")
        self.spec = spec
        self.variant = spec.variant
        self.schedule = schedule
        self.units = UnitArrays(units, spec.barrier, barrier=spec.uses_barrier)
        self.n = len(units)
        self.edges: List[Edge] = union_edges(schedule)
        self.m = len(self.edges)
        self.beta = spec.beta_vector(self.edges)

        pairs = np.array(self.edges, dtype=int).reshape(-1, 2)
        self._active = []
        for topo in schedule.topologies:
            positions = _active_positions(self.edges, topo)
            self._active.append((positions, pairs[positions, 0], pairs[positions, 1], self.beta[positions]))

    def pack(self, state: SystemState) -> np.ndarray:
        primary = state.w if self.variant == ProtocolVariant.U else state.p
        return np.concatenate([np.asarray(primary, dtype=float), np.asarray(state.weights, dtype=float)])

    def unpack(self, t: float, y: np.ndarray) -> SystemState:
        x, a = y[: self.n].copy(), y[self.n:].copy()
        if self.variant == ProtocolVariant.U:
            return SystemState(t=t, p=self.units.powers_from_ic(x), w=x, weights=a, edges=tuple(self.edges))
        return SystemState(t=t, p=x, w=self.units.ic(x), weights=a, edges=tuple(self.edges))

    def incremental_costs(self, y: np.ndarray) -> np.ndarray:
        x = y[: self.n]
        if self.variant == ProtocolVariant.U:
            return x
        return self.units.ic(x)

    def powers(self, y: np.ndarray) -> np.ndarray:
        x = y[: self.n]
        if self.variant == ProtocolVariant.U:
            return self.units.powers_from_ic(x)
        return x.copy()

    def validate(self, y: np.ndarray) -> None:
        """Raise DomainError when y leaves the protocol's domain."""
        if self.variant == ProtocolVariant.U:
            if not np.all(np.isfinite(y)):
                raise DomainError("non-finite incremental cost in the state")
            return
        self.units.check(y[: self.n])

    def check_spread(self, y: np.ndarray, y_new: np.ndarray) -> None:
        """Raise DomainError when a step widens max w - min w; the consensus flow never does."""
        before = self.incremental_costs(y)
        growth = float(np.ptp(self.incremental_costs(y_new)) - np.ptp(before))
        if growth > SPREAD_SLACK * (1.0 + float(np.max(np.abs(before)))):
            raise DomainError(f"step widened the incremental-cost spread by {growth:.3e}")

    def derivative(self, y: np.ndarray, topo_index: int) -> np.ndarray:
        positions, src, dst, beta = self._active[topo_index]
        w = self.incremental_costs(y)
        terms = consensus_terms(w, src, dst, y[self.n:][positions], beta, self.n)
        out = np.zeros_like(y)
        out[: self.n] = terms.primary
        out[self.n + positions] = terms.weights
        return out

    def rhs(self, topo_index: int) -> Callable[[float, np.ndarray], np.ndarray]:
        """Autonomous right-hand side f(t, y) for one topology."""

        def f(t: float, y: np.ndarray) -> np.ndarray:
            return self.derivative(y, topo_index)

        return f
