from .diagnostics import control_norm, disagreement
from .events import apply_event
from .protocols import ConsensusSystem, rhs_protocol_c, rhs_protocol_d, rhs_protocol_u
from .state import Event, ProtocolSpec, ProtocolVariant, SystemState

__all__ = [
    "ConsensusSystem",
    "Event",
    "ProtocolSpec",
    "ProtocolVariant",
    "SystemState",
    "apply_event",
    "control_norm",
    "disagreement",
    "rhs_protocol_c",
    "rhs_protocol_d",
    "rhs_protocol_u",
]
