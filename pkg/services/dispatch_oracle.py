"""
Dispatch Oracle Service
Centralized reference solutions the consensus runs are checked against.

Solvers:
1. solve_unconstrained - closed-form equal incremental cost
2. solve_constrained   - lambda iteration with per-unit clamping to the limits
3. solve_barrier       - barrier-modified KKT point the C/D protocols converge to
4. predict_consensus_u - mean of the initial ICs, where Protocol U settles
5. grid_search         - brute force over a 0.01 MW grid for small systems
"""

import logging
import math
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import bisect, brentq

from dynamics.state import ProtocolVariant
from models.errors import InfeasibleError
from models.generator import (
    BarrierConfig,
    GeneratorParams,
    ICVariant,
    UnitKind,
    cost,
    cost_barrier,
    domain,
    ic,
)

logger = logging.getLogger(__name__)

DEMAND_TOL = 1e-9
LAMBDA_XTOL = 1e-13


class Binding(str, Enum):
    INTERIOR = "Interior"
    AT_MIN = "AtMin"
    AT_MAX = "AtMax"


class DispatchSolution(BaseModel):
    """Reference dispatch: common IC, per-unit powers and which limits bind."""

    method: str = Field(..., description="unconstrained, constrained or barrier")
    demand: float
    lambda_star: float = Field(..., description="Common incremental cost (currency/MWh)")
    p_star: List[float] = Field(..., description="Per-unit power (MW)")
    binding: List[Binding]
    total_cost: float = Field(..., description="Quadratic cost of p_star (currency/h)")
    barrier_objective: Optional[float] = Field(default=None, description="Barrier-modified cost of p_star")

    @property
    def residual(self) -> float:
        return float(sum(self.p_star) - self.demand)


def _total_cost(params: Sequence[GeneratorParams], p: Sequence[float]) -> float:
    return float(sum(cost(u, x) for u, x in zip(params, p)))


def solve_unconstrained(params: Sequence[GeneratorParams], demand: float) -> DispatchSolution:
    """lambda* = (P_D + sum b/2c) / sum 1/2c; p_i = (lambda* - b_i) / 2c_i."""
    b = np.array([u.b for u in params], dtype=float)
    c = np.array([u.c for u in params], dtype=float)
    lam = (demand + np.sum(b / (2.0 * c))) / np.sum(1.0 / (2.0 * c))
    p = (lam - b) / (2.0 * c)
    return DispatchSolution(
        method="unconstrained",
        demand=demand,
        lambda_star=float(lam),
        p_star=p.tolist(),
        binding=[Binding.INTERIOR] * len(params),
        total_cost=_total_cost(params, p),
    )


def solve_constrained(params: Sequence[GeneratorParams], demand: float) -> DispatchSolution:
    """
    Lambda iteration: bisect on the common IC with each unit's power clamped to
    [p_min, p_max], then solve the interior units in closed form.

    Raises InfeasibleError when demand lies outside [sum p_min, sum p_max].
    """
    b = np.array([u.b for u in params], dtype=float)
    c = np.array([u.c for u in params], dtype=float)
    lo = np.array([u.p_min for u in params], dtype=float)
    hi = np.array([u.p_max for u in params], dtype=float)
    total_lo, total_hi = float(lo.sum()), float(hi.sum())

    if demand < total_lo - DEMAND_TOL or demand > total_hi + DEMAND_TOL:
        raise InfeasibleError(f"demand {demand:.6g} MW outside the aggregate limits [{total_lo:.6g}, {total_hi:.6g}]")

    ic_lo = b + 2.0 * c * lo
    ic_hi = b + 2.0 * c * hi
    if abs(demand - total_lo) <= DEMAND_TOL:
        return _clamped_solution(params, demand, float(ic_lo.min()), lo, [Binding.AT_MIN] * len(params))
    if abs(demand - total_hi) <= DEMAND_TOL:
        return _clamped_solution(params, demand, float(ic_hi.max()), hi, [Binding.AT_MAX] * len(params))

    def supplied(lam: float) -> np.ndarray:
        return np.clip((lam - b) / (2.0 * c), lo, hi)

    lam = bisect(lambda x: float(supplied(x).sum() - demand), float(ic_lo.min()), float(ic_hi.max()), xtol=1e-14, maxiter=500)

    raw = (lam - b) / (2.0 * c)
    binding = [Binding.AT_MIN if r <= l else Binding.AT_MAX if r >= h else Binding.INTERIOR for r, l, h in zip(raw, lo, hi)]
    interior = binding_mask(binding, Binding.INTERIOR)
    at_max = binding_mask(binding, Binding.AT_MAX)
    if interior.any():
        clamped_total = float(np.sum(np.where(at_max, hi, lo)[~interior]))
        lam = (demand - clamped_total + np.sum(b[interior] / (2.0 * c[interior]))) / np.sum(1.0 / (2.0 * c[interior]))
    p = np.where(interior, (lam - b) / (2.0 * c), np.where(at_max, hi, lo))

    logger.debug(f"lambda iteration: lambda={lam:.9g}, binding={[state.value for state in binding]}")
    return DispatchSolution(
        method="constrained",
        demand=demand,
        lambda_star=float(lam),
        p_star=p.tolist(),
        binding=binding,
        total_cost=_total_cost(params, p),
    )


def binding_mask(binding: Sequence[Binding], which: Binding) -> np.ndarray:
    return np.array([state == which for state in binding], dtype=bool)


def _clamped_solution(params, demand, lam, p, binding) -> DispatchSolution:
    return DispatchSolution(
        method="constrained",
        demand=demand,
        lambda_star=lam,
        p_star=np.asarray(p, dtype=float).tolist(),
        binding=binding,
        total_cost=_total_cost(params, p),
    )


def _closed_inside(params: GeneratorParams, cfg: BarrierConfig, variant: ICVariant) -> Tuple[float, float]:
    """Largest closed interval inside the open domain (one ulp in from each edge)."""
    lo, hi = domain(params, cfg, variant)
    return float(np.nextafter(lo, hi)), float(np.nextafter(hi, lo))


def invert_ic(params: GeneratorParams, cfg: BarrierConfig, variant: ICVariant, lam: float) -> float:
    """
    Power p with IC(p) = lam for one unit.

    Plain is closed form. The barrier variant is bracketed by its domain and
    saturates at the domain edges; the dummy variant grows its upper bracket
    by doubling.
    """
    if variant == ICVariant.PLAIN:
        return (lam - params.b) / (2.0 * params.c)

    lo, hi = _closed_inside(params, cfg, variant)
    if variant == ICVariant.DUMMY_ONE_SIDED:
        lo = 1e-12
        hi = 1.0
        while ic(params, cfg, hi, variant) < lam:
            hi *= 2.0
            if hi > 1e15:
                raise InfeasibleError(f"no dummy power reaches incremental cost {lam:.6g}")
    f_lo = ic(params, cfg, lo, variant) - lam
    f_hi = ic(params, cfg, hi, variant) - lam
    if f_lo >= 0:
        return lo
    if f_hi <= 0:
        return hi
    return brentq(lambda p: ic(params, cfg, p, variant) - lam, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)


def solve_barrier(
    params: Sequence[GeneratorParams],
    cfg: BarrierConfig,
    demand: float,
    kinds: Optional[Sequence[UnitKind]] = None,
) -> DispatchSolution:
    """
    Barrier-modified KKT point: the lambda with sum_i invert_ic_i(lambda) = P_D.

    Real units use the two-sided barrier, dummy units the one-sided one.
    Raises InfeasibleError unless the demand is strictly inside the aggregate
    open domain.
    """
    kinds = list(kinds) if kinds is not None else [u.kind for u in params]
    if len(kinds) != len(params):
        raise ValueError(f"{len(kinds)} kinds for {len(params)} units")
    variants = [ICVariant.DUMMY_ONE_SIDED if k == UnitKind.DUMMY else ICVariant.BARRIER for k in kinds]

    bounds = [_closed_inside(u, cfg, v) for u, v in zip(params, variants)]
    total_lo = sum(0.0 if v == ICVariant.DUMMY_ONE_SIDED else u.p_min for u, v in zip(params, variants))
    total_hi = sum(math.inf if v == ICVariant.DUMMY_ONE_SIDED else u.p_max for u, v in zip(params, variants))
    if not total_lo < demand < total_hi:
        raise InfeasibleError(f"demand {demand:.6g} MW not strictly inside the aggregate domain ({total_lo:.6g}, {total_hi:.6g})")

    def residual(lam: float) -> float:
        return sum(invert_ic(u, cfg, v, lam) for u, v in zip(params, variants)) - demand

    real = [(u, v, b) for u, v, b in zip(params, variants, bounds) if v == ICVariant.BARRIER]
    if real:
        lam_lo = min(ic(u, cfg, lo, v) for u, v, (lo, _) in real)
        lam_hi = max(ic(u, cfg, hi, v) for u, v, (_, hi) in real)
    else:
        lam_lo, lam_hi = -1.0, 1.0
    while residual(lam_lo) > 0:
        lam_lo = lam_lo - max(1.0, abs(lam_lo))
    while residual(lam_hi) < 0:
        lam_hi = lam_hi + max(1.0, abs(lam_hi))

    lam = brentq(residual, lam_lo, lam_hi, xtol=LAMBDA_XTOL, rtol=4 * np.finfo(float).eps, maxiter=1000)
    p = [invert_ic(u, cfg, v, lam) for u, v in zip(params, variants)]
    gap = sum(p) - demand
    if abs(gap) > 1e-6:
        raise InfeasibleError(f"barrier dispatch residual {gap:.3e} MW after root finding")

    barrier_cost = float(sum(cost_barrier(u, cfg, x, v) for u, v, x in zip(params, variants, p)))
    return DispatchSolution(
        method="barrier",
        demand=demand,
        lambda_star=float(lam),
        p_star=[float(x) for x in p],
        binding=[Binding.INTERIOR] * len(params),
        total_cost=_total_cost(params, p),
        barrier_objective=barrier_cost,
    )


def predict_consensus_u(params: Sequence[GeneratorParams], initial_powers: Sequence[float]) -> float:
    """Mean of the initial incremental costs; Protocol U conserves it."""
    b = np.array([u.b for u in params], dtype=float)
    c = np.array([u.c for u in params], dtype=float)
    return float(np.mean(b + 2.0 * c * np.asarray(initial_powers, dtype=float)))


def _grid(u: GeneratorParams, resolution: float) -> np.ndarray:
    count = int(round((u.p_max - u.p_min) / resolution)) + 1
    return np.linspace(u.p_min, u.p_max, count)


def grid_search(
    params: Sequence[GeneratorParams],
    demand: float,
    resolution: float = 0.01,
    barrier: Optional[BarrierConfig] = None,
) -> Tuple[np.ndarray, float]:
    """
    Exhaustive search over dispatches on a resolution grid that meet demand
    exactly with the last unit as slack. Two or three units only.

    Minimizes the quadratic cost, or the barrier-modified cost (over the open
    interior) when a BarrierConfig is given. Returns (powers, objective).
    """
    if not 2 <= len(params) <= 3:
        raise ValueError("grid_search handles two or three units")
    slack = params[-1]
    tol = 1e-9

    def objective(u: GeneratorParams, p: np.ndarray) -> np.ndarray:
        if barrier is None:
            return cost(u, p)
        return cost(u, p) - barrier.delta * (np.log(p - u.p_min) + np.log(u.p_max - p))

    def feasible(u: GeneratorParams, p: np.ndarray) -> np.ndarray:
        if barrier is None:
            return (p >= u.p_min - tol) & (p <= u.p_max + tol)
        return (p > u.p_min + tol) & (p < u.p_max - tol)

    best_value = math.inf
    best: Optional[np.ndarray] = None
    first = _grid(params[0], resolution)
    inner = _grid(params[1], resolution) if len(params) == 3 else np.zeros(1)
    for p1 in first:
        if barrier is not None and not params[0].p_min < p1 < params[0].p_max:
            continue
        if len(params) == 3:
            p2 = inner
            p_slack = demand - p1 - p2
            ok = feasible(slack, p_slack) & feasible(params[1], p2)
            if not ok.any():
                continue
            with np.errstate(invalid="ignore", divide="ignore"):
                values = objective(params[0], p1) + objective(params[1], p2) + objective(slack, p_slack)
        else:
            p2 = np.zeros(1)
            p_slack = np.array([demand - p1])
            ok = feasible(slack, p_slack)
            if not ok.any():
                continue
            with np.errstate(invalid="ignore", divide="ignore"):
                values = objective(params[0], p1) + objective(slack, p_slack)
        values = np.where(ok, values, math.inf)
        k = int(np.argmin(values))
        if values[k] < best_value:
            best_value = float(values[k])
            best = np.array([p1, p2[k], p_slack[k]]) if len(params) == 3 else np.array([p1, p_slack[k]])

    if best is None:
        raise InfeasibleError(f"no grid point meets demand {demand:.6g} MW")
    return best, best_value


def oracle_for(scenario, at: Optional[float] = None) -> DispatchSolution:
    """
    Reference solution matching the scenario's protocol: closed form for U,
    the barrier KKT point over every unit (dummies included) for C and D.
    The demand is the one in force at time `at` (after all events by default).
    """
    variant = scenario.protocol.variant
    if variant == ProtocolVariant.U:
        return solve_unconstrained(scenario.generators, scenario.base_demand())
    t = math.inf if at is None else at
    units = scenario.units()
    return solve_barrier(units, scenario.protocol.barrier, scenario.effective_demand(t), [u.kind for u in units])

