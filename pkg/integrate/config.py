"""Integrator settings carried by every scenario."""

from pydantic import BaseModel, ConfigDict, Field

from settings import settings


class IntegratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    h: float = Field(default_factory=lambda: settings.step, gt=0, description="RK4 step size (s)")
    t_max: float = Field(default_factory=lambda: settings.t_max, gt=0, description="Horizon (s)")
    stop_tol: float = Field(default_factory=lambda: settings.stop_tol, gt=0, description="Stop when control_norm drops below")
    record_every: int = Field(default_factory=lambda: settings.record_every, ge=1, description="Steps per trace record")
    t_min: float = Field(default=0.0, ge=0, description="Earliest time the stop rule may fire (s)")
    max_halvings: int = Field(default=10, ge=0, le=30, description="Step rejections allowed before giving up (h_min = h / 2**max_halvings)")
    spread_guard: bool = Field(default=True, description="Reject steps that widen the incremental-cost spread")
