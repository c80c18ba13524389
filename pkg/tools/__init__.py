from .presets import get_preset, list_presets, load_scenario
from .scenario_loader import Scenario, fingerprint, parse_scenario, serialize_scenario, system_fingerprint
from .trace_writer import read_trace, write_trace

__all__ = [
    "Scenario",
    "fingerprint",
    "get_preset",
    "list_presets",
    "load_scenario",
    "parse_scenario",
    "read_trace",
    "serialize_scenario",
    "system_fingerprint",
    "write_trace",
]
