"""
Run-time demand events.
An injection adds power to the dummy nodes only; real powers and adaptive
weights are left alone.
"""

import logging
from typing import Sequence

import numpy as np

from dynamics.state import Event, SystemState
from models.errors import EventError

logger = logging.getLogger(__name__)


def apply_event(state: SystemState, event: Event, dummy_indices: Sequence[int]) -> SystemState:
    """Return the state after splitting event.total over the dummy nodes."""
    dummies = np.asarray(dummy_indices, dtype=int)
    if dummies.size == 0:
        raise EventError(f"event at t={event.at} needs dummy nodes to inject into")
    if event.allocation is not None and len(event.allocation) != dummies.size:
        raise EventError(
            f"event at t={event.at} allocates over {len(event.allocation)} nodes but there are {dummies.size} dummies"
        )
    if event.total == 0:
        return state

    p = np.array(state.p, dtype=float, copy=True)
    p[dummies] += event.total * event.shares(dummies.size)
    if np.any(p[dummies] <= 0):
        worst = dummies[np.argmin(p[dummies])]
        raise EventError(
            f"injection of {event.total:.4f} MW at t={event.at} drives dummy node {worst + 1} to {p[worst]:.4f} MW"
        )
    logger.info(f"Applied {event.total:.4f} MW demand injection at t={state.t:.6g} over {dummies.size} dummy nodes")
    return state.with_powers(p)
