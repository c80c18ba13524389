"""
Convergence and stability monitors.

control_norm is the stop criterion of the node algorithm (max |u_i|);
disagreement is the squared spread of incremental costs around their mean;
lyapunov_values evaluates the energy function along a finished trace.
"""

from typing import Optional, Sequence

import numpy as np

from dynamics.protocols import consensus_derivative
from dynamics.state import ProtocolSpec, ProtocolVariant, SystemState
from models.generator import GeneratorParams, UnitArrays
from network.topology import Topology


def control_norm(
    state: SystemState,
    topo: Topology,
    spec: ProtocolSpec,
    params: Optional[Sequence[GeneratorParams]] = None,
) -> float:
    """max_i |sum_j a_ij (w_j - w_i)| over the active topology."""
    w = state.w
    if w is None:
        if params is None:
            raise ValueError("control_norm needs unit parameters when state.w is not cached")
        w = UnitArrays(params, spec.barrier, barrier=spec.uses_barrier).ic(state.p)
    u = consensus_derivative(w, state, topo, spec).primary
    return float(np.max(np.abs(u))) if u.size else 0.0


def disagreement_of(w: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    return float(np.sum((w - w.mean()) ** 2))


def disagreement(state: SystemState, variant: ProtocolVariant) -> float:
    """sum_i (w_i - mean w)^2 over every participating agent (2N under D)."""
    if state.w is None:
        raise ValueError(f"disagreement under protocol {variant.value} needs the incremental costs")
    return disagreement_of(state.w)


def demand_mismatch(state: SystemState, demand: float) -> float:
    """sum_i p_i - P_D; structurally zero only for the power-integrating protocols."""
    return float(np.sum(state.p) - demand)


def lyapunov_values(
    variant: ProtocolVariant,
    units: UnitArrays,
    beta: np.ndarray,
    powers: np.ndarray,
    costs: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """
    Energy function along a trace given as row-stacked samples.

    theta_ij = a_ij(T_end) + 1. Under U the state term is half the squared
    deviation of the incremental costs from their mean. Under C and D it is
    the barrier-modified total cost relative to its final value; its rate is
    -sum a_ij (w_i - w_j)^2 whatever the per-unit IC slopes, which the
    quadratic IC-deviation form only guarantees when all slopes coincide.
    """
    if len(weights) == 0:
        return np.zeros(0)
    theta = weights[-1] + 1.0
    weight_term = np.sum((theta - weights) ** 2 / (2.0 * beta), axis=1)
    if variant == ProtocolVariant.U:
        deviation = costs - costs.mean(axis=1, keepdims=True)
        return 0.5 * np.sum(deviation ** 2, axis=1) + weight_term
    totals = np.array([np.sum(units.cost(p)) for p in powers])
    return totals - totals[-1] + weight_term
