from .dispatch_oracle import (
    DispatchSolution,
    grid_search,
    invert_ic,
    oracle_for,
    predict_consensus_u,
    solve_barrier,
    solve_constrained,
    solve_unconstrained,
)
from .verifier import VerificationReport, verify

__all__ = [
    "DispatchSolution",
    "VerificationReport",
    "grid_search",
    "invert_ic",
    "oracle_for",
    "predict_consensus_u",
    "solve_barrier",
    "solve_constrained",
    "solve_unconstrained",
    "verify",
]
