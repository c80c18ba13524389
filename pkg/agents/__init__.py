from .base_agent import BaseAgent, NodeState
from .generator_agent import AgentNetwork, GeneratorAgent, network_for

__all__ = ["AgentNetwork", "BaseAgent", "GeneratorAgent", "NodeState", "network_for"]
