"""
Generator Agents
Node-level form of the consensus protocols: every generator only sees the
incremental costs its neighbours publish and its own copies of the adaptive
weights on its incident edges.

Per round (forward Euler, step h):
1. Collect - read w_j from every active neighbour
2. Compute - u_i = sum_j a_ij (w_j - w_i), rate_ij = beta_ij (w_j - w_i)^2
3. Apply   - Protocol U: w_i += h u_i; C/D: p_i += h u_i, w_i = IC(p_i); a_ij += h rate_ij
4. Evaluate - publish w_i, mark settled when |u_i| < stop_tol

The network stops once every agent is settled in the same round. Both ends
of an edge apply the same update, so the two weight copies stay equal.
"""

import asyncio
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from agents.base_agent import BaseAgent
from dynamics.state import ProtocolSpec, ProtocolVariant, SystemState
from models.generator import BarrierConfig, GeneratorParams, ic, variant_for
from network.topology import Edge, SwitchingSchedule, neighbors, union_edges

logger = logging.getLogger(__name__)


class GeneratorAgent(BaseAgent):
    """A generating unit (or dummy node) running the node algorithm."""

    def __init__(
        self,
        node_id: int,
        params: GeneratorParams,
        spec: ProtocolSpec,
        power: float,
        weights: Dict[int, float],
        betas: Dict[int, float],
        h: float,
        stop_tol: float = 1e-6,
    ):
        super().__init__(node_id, stop_tol)
        self.params = params
        self.variant = spec.variant
        self.barrier: BarrierConfig = spec.barrier
        self.ic_variant = variant_for(params, spec.uses_barrier)
        self.h = h
        self.power = float(power)
        self.w = float(ic(params, self.barrier, self.power, self.ic_variant))
        self.weights = dict(weights)
        self.betas = dict(betas)
        self.rates: Dict[int, float] = {}

    async def collect(self, network: "AgentNetwork"):
        self.inbox = {j: network.published[j] for j in network.active_neighbors(self.node_id)}

    async def compute(self):
        diffs = {j: w_j - self.w for j, w_j in self.inbox.items()}
        self.control = sum(self.weights[j] * d for j, d in diffs.items())
        self.rates = {j: self.betas[j] * d * d for j, d in diffs.items()}

    async def apply(self):
        if self.variant == ProtocolVariant.U:
            self.w += self.h * self.control
            self.power = (self.w - self.params.b) / (2.0 * self.params.c)
        else:
            self.power += self.h * self.control
            self.w = float(ic(self.params, self.barrier, self.power, self.ic_variant))
        for j, rate in self.rates.items():
            self.weights[j] += self.h * rate

    async def evaluate(self, network: "AgentNetwork"):
        network.published[self.node_id] = self.w
        self.settled = abs(self.control) < self.stop_tol


@dataclass
class NetworkResult:
    rounds: int
    t: float
    converged: bool


class AgentNetwork:
    """Message board and round driver for a set of GeneratorAgents."""

    def __init__(
        self,
        units: Sequence[GeneratorParams],
        spec: ProtocolSpec,
        schedule: SwitchingSchedule,
        initial_powers: Sequence[float],
        h: float,
        stop_tol: float = 1e-6,
    ):
        if schedule.n != len(units) or len(initial_powers) != len(units):
            raise ValueError(f"{len(units)} units, {len(initial_powers)} powers, schedule on {schedule.n} nodes")
        self.schedule = schedule
        self.h = h
        self.t = 0.0
        self.edges: List[Edge] = union_edges(schedule)
        beta = spec.beta_vector(self.edges)

        self.agents: List[GeneratorAgent] = []
        for i, (unit, p0) in enumerate(zip(units, initial_powers)):
            incident = [(k, e) for k, e in enumerate(self.edges) if i in e]
            weights = {(b if a == i else a): spec.initial_weight for _, (a, b) in incident}
            betas = {(e[1] if e[0] == i else e[0]): float(beta[k]) for k, e in incident}
            self.agents.append(GeneratorAgent(i, unit, spec, p0, weights, betas, h, stop_tol))
        self.published: Dict[int, float] = {agent.node_id: agent.w for agent in self.agents}

    def active_neighbors(self, i: int) -> List[int]:
        topo = self.schedule.topologies[self.schedule.active_index(self.t)]
        return sorted(neighbors(topo, i))

    async def round(self) -> bool:
        """One synchronous round; True when every agent settled."""
        for _ in range(4):
            await asyncio.gather(*(agent.advance(self) for agent in self.agents))
        self.t += self.h
        return all(agent.settled for agent in self.agents)

    async def run(self, max_rounds: int) -> NetworkResult:
        for k in range(1, max_rounds + 1):
            if await self.round():
                for agent in self.agents:
                    agent.stop("network settled")
                logger.info(f"Agent network settled after {k} rounds (t={self.t:.6g})")
                return NetworkResult(rounds=k, t=self.t, converged=True)
        logger.warning(f"Agent network did not settle within {max_rounds} rounds")
        return NetworkResult(rounds=max_rounds, t=self.t, converged=False)

    def snapshot(self) -> SystemState:
        """Current state in the vectorized layout (weights on the sorted union edges)."""
        weights = np.array([self.agents[i].weights[j] for i, j in self.edges], dtype=float)
        return SystemState(
            t=self.t,
            p=np.array([agent.power for agent in self.agents]),
            w=np.array([agent.w for agent in self.agents]),
            weights=weights,
            edges=tuple(self.edges),
        )

    def weight_copies_agree(self, tol: float = 0.0) -> bool:
        return all(abs(self.agents[i].weights[j] - self.agents[j].weights[i]) <= tol for i, j in self.edges)


def network_for(scenario, h: Optional[float] = None) -> AgentNetwork:
    """Agent network for a validated scenario (dummy agents included under D)."""
    return AgentNetwork(
        scenario.units(),
        scenario.protocol,
        scenario.schedule(),
        scenario.all_initial_powers(),
        h or scenario.integrator.h,
        scenario.integrator.stop_tol,
    )
