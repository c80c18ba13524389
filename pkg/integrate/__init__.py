from .config import IntegratorConfig
from .rk4 import rk4, step
from .trace import Trace, TraceRecord, TraceSummary

__all__ = ["IntegratorConfig", "Trace", "TraceRecord", "TraceSummary", "rk4", "step"]
