"""
Generator Cost Model
Quadratic unit costs and the incremental-cost (IC) variants the consensus
protocols drive to agreement.

Variants:
1. PLAIN           - b + 2cp, the derivative of the quadratic cost
2. BARRIER         - plain IC plus the two-sided log barrier of the capacity limits
3. DUMMY_ONE_SIDED - plain IC plus a one-sided barrier keeping a dummy unit positive

All functions accept a float or a numpy array for the power argument.
"""

import math
from enum import Enum
from typing import Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.errors import DomainError
from settings import settings

Power = Union[float, np.ndarray]

DUMMY_B = 0.0
DUMMY_C = 0.1


class UnitKind(str, Enum):
    REAL = "real"
    DUMMY = "dummy"


class ICVariant(str, Enum):
    PLAIN = "plain"
    BARRIER = "barrier"
    DUMMY_ONE_SIDED = "dummy_one_sided"


class GeneratorParams(BaseModel):
    """Cost coefficients and capacity limits of one generating unit."""

    model_config = ConfigDict(frozen=True)

    a: float = Field(default=0.0, description="Cost constant (currency/h)")
    b: float = Field(..., description="Linear cost coefficient (currency/MWh)")
    c: float = Field(..., gt=0, description="Quadratic cost coefficient (currency/MW^2h)")
    p_min: float = Field(default=0.0, description="Lower capacity limit (MW)")
    p_max: float = Field(default=0.0, description="Upper capacity limit (MW)")
    kind: UnitKind = Field(default=UnitKind.REAL, description="Real generator or dummy node")
    label: str = Field(default="", description="Display name, e.g. the bus number")

    @model_validator(mode="after")
    def _check_limits(self) -> "GeneratorParams":
        if self.kind == UnitKind.REAL and not self.p_min < self.p_max:
            raise ValueError(f"p_min {self.p_min} must be below p_max {self.p_max}")
        return self


class BarrierConfig(BaseModel):
    """Log-barrier weight and the relative interior margin."""

    model_config = ConfigDict(frozen=True)

    delta: float = Field(default_factory=lambda: settings.delta, gt=0, description="Barrier weight")
    margin: float = Field(default=1e-9, gt=0, lt=0.5, description="Interior margin as a fraction of (p_max - p_min)")


def dummy_params(b: float = DUMMY_B, c: float = DUMMY_C, a: float = 0.0, label: str = "") -> GeneratorParams:
    """Dummy-node parameters: zero bias and a steep quadratic term."""
    return GeneratorParams(a=a, b=b, c=c, kind=UnitKind.DUMMY, label=label)


def variant_for(params: GeneratorParams, barrier: bool) -> ICVariant:
    """IC variant a unit uses under a protocol with or without barriers."""
    if not barrier:
        return ICVariant.PLAIN
    if params.kind == UnitKind.DUMMY:
        return ICVariant.DUMMY_ONE_SIDED
    return ICVariant.BARRIER


def domain(params: GeneratorParams, cfg: BarrierConfig, variant: ICVariant) -> Tuple[float, float]:
    """Open interval (lo, hi) on which the variant may be evaluated."""
    if variant == ICVariant.PLAIN:
        return -math.inf, math.inf
    if variant == ICVariant.DUMMY_ONE_SIDED:
        return 0.0, math.inf
    pad = cfg.margin * (params.p_max - params.p_min)
    return params.p_min + pad, params.p_max - pad


def _require_inside(p: Power, lo: float, hi: float, variant: ICVariant) -> None:
    arr = np.asarray(p, dtype=float)
    bad = ~((arr > lo) & (arr < hi))
    if np.any(bad):
        raise DomainError(f"{variant.value} IC evaluated at p={arr[bad] if arr.ndim else float(arr)} outside ({lo}, {hi})")


def cost(params: GeneratorParams, p: Power) -> Power:
    """Generation cost a + bp + cp^2."""
    return params.a + params.b * p + params.c * p * p


def cost_barrier(params: GeneratorParams, cfg: BarrierConfig, p: Power, variant: ICVariant) -> Power:
    """Barrier-modified cost whose derivative is the matching IC variant."""
    base = cost(params, p)
    if variant == ICVariant.PLAIN:
        return base
    lo, hi = domain(params, cfg, variant)
    _require_inside(p, lo, hi, variant)
    if variant == ICVariant.DUMMY_ONE_SIDED:
        return base - cfg.delta * np.log(p)
    return base - cfg.delta * (np.log(p - params.p_min) + np.log(params.p_max - p))


def ic_plain(params: GeneratorParams, p: Power) -> Power:
    return params.b + 2.0 * params.c * p


def ic_barrier(params: GeneratorParams, cfg: BarrierConfig, p: Power) -> Power:
    """IC with the two-sided capacity barrier. Raises DomainError outside the limits."""
    lo, hi = domain(params, cfg, ICVariant.BARRIER)
    _require_inside(p, lo, hi, ICVariant.BARRIER)
    return ic_plain(params, p) - cfg.delta / (p - params.p_min) + cfg.delta / (params.p_max - p)


def ic_dummy(params: GeneratorParams, cfg: BarrierConfig, p: Power) -> Power:
    """IC of a dummy node: one-sided barrier keeping p > 0."""
    _require_inside(p, 0.0, math.inf, ICVariant.DUMMY_ONE_SIDED)
    return ic_plain(params, p) - cfg.delta / p


def ic(params: GeneratorParams, cfg: BarrierConfig, p: Power, variant: ICVariant) -> Power:
    if variant == ICVariant.PLAIN:
        return ic_plain(params, p)
    if variant == ICVariant.BARRIER:
        return ic_barrier(params, cfg, p)
    return ic_dummy(params, cfg, p)


def ic_derivative(params: GeneratorParams, cfg: BarrierConfig, p: Power, variant: ICVariant) -> Power:
    """Exact slope dIC/dp of the chosen variant; always positive."""
    if variant == ICVariant.PLAIN:
        if isinstance(p, np.ndarray):
            return np.full(p.shape, 2.0 * params.c)
        return 2.0 * params.c
    lo, hi = domain(params, cfg, variant)
    _require_inside(p, lo, hi, variant)
    if variant == ICVariant.DUMMY_ONE_SIDED:
        return 2.0 * params.c + cfg.delta / (p * p)
    return 2.0 * params.c + cfg.delta / (p - params.p_min) ** 2 + cfg.delta / (params.p_max - p) ** 2


class UnitArrays:
    """
    Column view of a fleet of units for vectorized evaluation.

    With barrier=False every unit uses the plain IC; otherwise real units use
    the two-sided barrier and dummy units the one-sided one.
    """

    def __init__(self, units: Sequence[GeneratorParams], cfg: BarrierConfig, barrier: bool):
        self.units = list(units)
        self.cfg = cfg
        self.barrier = barrier
        self.n = len(self.units)
        self.a = np.array([u.a for u in self.units], dtype=float)
        self.b = np.array([u.b for u in self.units], dtype=float)
        self.c = np.array([u.c for u in self.units], dtype=float)
        self.p_min = np.array([u.p_min for u in self.units], dtype=float)
        self.p_max = np.array([u.p_max for u in self.units], dtype=float)
        self.dummy = np.array([u.kind == UnitKind.DUMMY for u in self.units], dtype=bool)
        self.real_idx = np.flatnonzero(~self.dummy)
        self.dummy_idx = np.flatnonzero(self.dummy)

        bounds = [domain(u, cfg, variant_for(u, barrier)) for u in self.units]
        self.lo = np.array([lo for lo, _ in bounds], dtype=float)
        self.hi = np.array([hi for _, hi in bounds], dtype=float)

    def in_domain(self, p: np.ndarray) -> bool:
        if not self.barrier:
            return bool(np.all(np.isfinite(p)))
        return bool(np.all((p > self.lo) & (p < self.hi)))

    def check(self, p: np.ndarray) -> None:
        if self.in_domain(p):
            return
        bad = np.flatnonzero(~((p > self.lo) & (p < self.hi)) | ~np.isfinite(p))
        detail = ", ".join(f"unit {i + 1} p={p[i]:.6g}" for i in bad)
        raise DomainError(f"powers outside the barrier domain: {detail}", units=bad.tolist())

    def ic(self, p: np.ndarray) -> np.ndarray:
        out = self.b + 2.0 * self.c * p
        if not self.barrier:
            return out
        self.check(p)
        delta = self.cfg.delta
        r = self.real_idx
        out[r] += delta / (self.p_max[r] - p[r]) - delta / (p[r] - self.p_min[r])
        d = self.dummy_idx
        out[d] -= delta / p[d]
        return out

    def slope(self, p: np.ndarray) -> np.ndarray:
        out = 2.0 * self.c.copy()
        if not self.barrier:
            return out
        self.check(p)
        delta = self.cfg.delta
        r = self.real_idx
        out[r] += delta / (p[r] - self.p_min[r]) ** 2 + delta / (self.p_max[r] - p[r]) ** 2
        d = self.dummy_idx
        out[d] += delta / p[d] ** 2
        return out

    def cost(self, p: np.ndarray) -> np.ndarray:
        """Per-unit cost; barrier-modified when the fleet uses barriers."""
        out = self.a + self.b * p + self.c * p * p
        if not self.barrier:
            return out
        self.check(p)
        delta = self.cfg.delta
        r = self.real_idx
        out[r] -= delta * (np.log(p[r] - self.p_min[r]) + np.log(self.p_max[r] - p[r]))
        d = self.dummy_idx
        out[d] -= delta * np.log(p[d])
        return out

    def powers_from_ic(self, w: np.ndarray) -> np.ndarray:
        """Invert the plain IC: p = (w - b) / 2c."""
        return (w - self.b) / (2.0 * self.c)
