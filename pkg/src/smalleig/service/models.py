"""Request and response schemas for the service endpoints."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

Branch = Literal["+", "-"]


class _Request(BaseModel):
    model_config = ConfigDict(extra="forbid")

    cache_dir: Optional[str] = None


class SigmaRequest(_Request):
    m: int = Field(ge=2)
    branch: Branch = "+"
    window: tuple[float, float]
    tol: float = Field(default=1e-8, gt=0)
    step: float = Field(default=0.05, gt=0)
    scale: Optional[float] = Field(default=None, gt=0)


class MomentsRequest(_Request):
    m: int = Field(ge=2)
    branch: Branch = "+"
    a0: float
    j_max: int = Field(default=12, ge=0, le=40)
    exact: bool = False
    scale: Optional[float] = Field(default=None, gt=0)


class LambdaRequest(_Request):
    m: int = Field(ge=2)
    branch: Branch = "+"
    a0: float
    taylor: list[float] = Field(default_factory=list)
    order: int = Field(default=4, ge=1, le=12)
    exact: bool = False
    taylor_exact: Optional[list[str]] = None
    scale: Optional[float] = Field(default=None, gt=0)


class PolysRequest(_Request):
    m: int = Field(ge=2)
    branch: Branch = "+"
    a0: float
    order: int = Field(default=4, ge=1, le=8)
    exact: bool = False
    scale: Optional[float] = Field(default=None, gt=0)


class ForcedRequest(_Request):
    m: int = Field(ge=2)
    a0: float
    taylor: list[float] = Field(default_factory=list)
    order: int = Field(default=4, ge=1, le=12)
    tol_sigma: float = Field(default=1e-6, gt=0)
    tol_lambda: float = Field(default=1e-7, gt=0)
    c_floor_rel: float = Field(default=1e-6, gt=0)
    scale: Optional[float] = Field(default=None, gt=0)


class DecideRequest(_Request):
    m: int = Field(ge=2)
    a0: float
    taylor: list[float] = Field(default_factory=list)
    order: int = Field(default=4, ge=1, le=12)
    tol_sigma: float = Field(default=1e-6, gt=0)
    tol_lambda: float = Field(default=1e-7, gt=0)
    c_floor_rel: float = Field(default=1e-6, gt=0)
    scale: Optional[float] = Field(default=None, gt=0)


class SweepRequest(_Request):
    m: int = Field(ge=2)
    branch: Branch = "+"
    a0: float
    taylor: list[float] = Field(default_factory=list)
    eps_grid: Optional[list[float]] = None
    fit_order: int = Field(default=3, ge=0, le=6)
    theta: Optional[float] = Field(default=None, gt=0)
    scale: Optional[float] = Field(default=None, gt=0)


class WitnessRequest(_Request):
    m: int = Field(ge=2)
    a0: float
    taylor: list[float] = Field(default_factory=list)
    lambdas: list[float] = Field(default_factory=lambda: [128.0, 256.0, 512.0, 1024.0])
    A: int = Field(default=8, ge=0, le=12)
    B: int = Field(default=2, ge=0, le=4)
    scale: Optional[float] = Field(default=None, gt=0)


class Envelope(BaseModel):
    """Uniform result wrapper; ``outputs`` is command-specific."""

    model_config = ConfigDict(extra="forbid")

    schema_version: int = 1
    command: str
    inputs: dict
    outputs: dict
    provenance: dict


class ErrorBody(BaseModel):
    code: str
    message: str


REQUEST_TYPES = {
    "sigma": SigmaRequest,
    "moments": MomentsRequest,
    "lambda": LambdaRequest,
    "polys": PolysRequest,
    "forced": ForcedRequest,
    "decide": DecideRequest,
    "sweep": SweepRequest,
    "witness": WitnessRequest,
}
