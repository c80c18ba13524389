"""
Simulator errors
Every failure the library raises derives from DispatchError so callers
(the CLI, the sweep service) can catch one type and map it to an exit status.
"""

from typing import List, Optional


class DispatchError(Exception):
    """Base class for simulator failures."""


class DomainError(DispatchError, ValueError):
    """An incremental cost was evaluated outside the variant's open domain."""

    def __init__(self, message: str, units: Optional[List[int]] = None):
        super().__init__(message)
        self.units = units or []


class SingularityError(DispatchError):
    """Step control could not keep the trajectory inside the barrier domain."""


class EventError(DispatchError):
    """A demand event would leave a dummy unit with non-positive power."""


class InfeasibleError(DispatchError):
    """Demand lies outside what the units can supply."""


class ParseError(DispatchError):
    """The scenario document is not valid JSON."""


class UnknownScenarioError(DispatchError):
    """A scenario reference names neither a built-in preset nor an existing file."""


class ScenarioValidationError(DispatchError):
    """The scenario document parsed but violates a model constraint."""

    def __init__(self, message: str, problems: Optional[List[str]] = None):
        super().__init__(message)
        self.problems = problems or [message]


class MismatchError(DispatchError):
    """A trace failed one or more verification checks."""

    def __init__(self, failures: List[str]):
        super().__init__(f"{len(failures)} verification check(s) failed: " + "; ".join(failures))
        self.failures = failures
