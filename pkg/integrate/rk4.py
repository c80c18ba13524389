"""
Classical fixed-step Runge-Kutta integration with barrier-safe rejection.

A step that evaluates the right-hand side outside the protocol's domain (the
rhs raises DomainError), lands outside it, or fails the optional step guard is
discarded and covered by two half steps instead, recursively, down to
h / 2**max_halvings.
"""

import logging
from typing import Callable, Optional, Tuple

import numpy as np

from models.errors import DomainError, SingularityError

logger = logging.getLogger(__name__)

RHS = Callable[[float, np.ndarray], np.ndarray]
Validator = Callable[[np.ndarray], None]
Guard = Callable[[np.ndarray, np.ndarray], None]


def rk4(rhs: RHS, t: float, y: np.ndarray, h: float, k1: Optional[np.ndarray] = None) -> np.ndarray:
    """One classical RK4 step; k1 may be supplied when already known."""
    if k1 is None:
        k1 = rhs(t, y)
    half = 0.5 * h
    k2 = rhs(t + half, y + half * k1)
    k3 = rhs(t + half, y + half * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(
    t: float,
    y: np.ndarray,
    rhs: RHS,
    h: float,
    validate: Optional[Validator] = None,
    max_halvings: int = 10,
    k1: Optional[np.ndarray] = None,
    guard: Optional[Guard] = None,
) -> Tuple[np.ndarray, int]:
    """
    Advance y from t by exactly h.

    guard(y_start, y_end) sees every sub-step and raises DomainError to reject
    it. Returns the new state and the number of rejected attempts. Raises
    SingularityError once a sub-step of h / 2**max_halvings still fails.
    """
    return _advance(t, y, rhs, h, validate, guard, max_halvings, 0, k1)


def _attempt(t, y, rhs, h, validate, guard, k1) -> np.ndarray:
    y_new = rk4(rhs, t, y, h, k1)
    if not np.all(np.isfinite(y_new)):
        raise DomainError(f"non-finite state after a step of {h:.3g} s at t={t:.6g}")
    if validate is not None:
        validate(y_new)
    if guard is not None:
        guard(y, y_new)
    return y_new


def _advance(t, y, rhs, h, validate, guard, max_halvings, depth, k1) -> Tuple[np.ndarray, int]:
    try:
        return _attempt(t, y, rhs, h, validate, guard, k1), 0
    except DomainError as exc:
        if depth >= max_halvings:
            raise SingularityError(
                f"step of {h:.3g} s at t={t:.9g} is still rejected after {depth} halvings: {exc}"
            ) from exc
        logger.warning(f"Rejected step at t={t:.9g} with h={h:.3g}; retrying with h={h / 2:.3g}")

    half = 0.5 * h
    y_mid, first = _advance(t, y, rhs, half, validate, guard, max_halvings, depth + 1, k1)
    y_end, second = _advance(t + half, y_mid, rhs, half, validate, guard, max_halvings, depth + 1, None)
    return y_end, 1 + first + second
