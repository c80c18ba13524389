from .errors import (
    DispatchError,
    DomainError,
    EventError,
    InfeasibleError,
    MismatchError,
    ParseError,
    ScenarioValidationError,
    SingularityError,
    UnknownScenarioError,
)
from .generator import BarrierConfig, GeneratorParams, ICVariant, UnitArrays, UnitKind

__all__ = [
    "BarrierConfig",
    "DispatchError",
    "DomainError",
    "EventError",
    "GeneratorParams",
    "ICVariant",
    "InfeasibleError",
    "MismatchError",
    "ParseError",
    "ScenarioValidationError",
    "SingularityError",
    "UnknownScenarioError",
    "UnitArrays",
    "UnitKind",
]
