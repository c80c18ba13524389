from enum import Enum
from typing import Dict, Optional
from abc import ABC, abstractmethod
import logging

logger = logging.getLogger(__name__)


class NodeState(Enum):
    COLLECTING = "collecting"
    COMPUTING = "computing"
    APPLYING = "applying"
    EVALUATING = "evaluating"
    STOPPED = "stopped"


_NEXT = {
    NodeState.COLLECTING: NodeState.COMPUTING,
    NodeState.COMPUTING: NodeState.APPLYING,
    NodeState.APPLYING: NodeState.EVALUATING,
    NodeState.EVALUATING: NodeState.COLLECTING,
}


class BaseAgent(ABC):
    """
    One node of the consensus network.

    Every round walks COLLECTING -> COMPUTING -> APPLYING -> EVALUATING. The
    network advances all agents through one phase before any agent starts the
    next, so rounds are synchronous.
    """

    def __init__(self, node_id: int, stop_tol: float = 1e-6):
        self.node_id = node_id
        self.state = NodeState.COLLECTING
        self.stop_tol = stop_tol
        self.inbox: Dict[int, float] = {}
        self.control = 0.0
        self.settled = False
        self.rounds = 0

    async def advance(self, network) -> NodeState:
        """Run the handler for the current phase and move to the next one."""
        if self.state == NodeState.STOPPED:
            return self.state

        if self.state == NodeState.COLLECTING:
            await self.collect(network)
        elif self.state == NodeState.COMPUTING:
            await self.compute()
        elif self.state == NodeState.APPLYING:
            await self.apply()
        elif self.state == NodeState.EVALUATING:
            await self.evaluate(network)
            self.rounds += 1

        self.state = _NEXT[self.state]
        return self.state

    def stop(self, reason: Optional[str] = None):
        self.state = NodeState.STOPPED
        if reason:
            logger.debug(f"Agent {self.node_id} stopped: {reason}")

    @abstractmethod
    async def collect(self, network):
        """Read the neighbours' published values"""
        pass

    @abstractmethod
    async def compute(self):
        """Form the local control input"""
        pass

    @abstractmethod
    async def apply(self):
        """Update the local state"""
        pass

    @abstractmethod
    async def evaluate(self, network):
        """Publish the new value and test the local stop rule"""
        pass
