"""Pydantic request/response models of the HTTP service.

Response models pin the stable fields every client may rely on and let the
richer report dictionaries pass through unmodified (extra="allow"): the
full payload shapes are documented with the artifact formats.
"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class ParamsRequest(BaseModel):
    R: float
    eps: float = 0.01


class CurveRequest(BaseModel):
    rmin: float
    rmax: float
    steps: int = 100


class RunRequest(BaseModel):
    """Mirror of ExperimentConfig; validated again by the config itself."""

    n: int = 2
    R: float = 2.0
    eps: float = 0.01
    lambda_fraction: float = Field(default=0.95, gt=0.0, le=1.0)
    seed: int = 0
    samples: int = 100_000
    rotations: int = 256
    out_dir: Optional[str] = None


class VerifyRequest(RunRequest):
    include_ball: bool = False


class CoverLabRequest(BaseModel):
    vertices: int
    edges: List[List[int]]


class ParamsResponse(BaseModel):
    model_config = ConfigDict(extra="allow")
    R: float
    x: float


class CurveResponse(BaseModel):
    csv: str


class ReportResponse(BaseModel):
    """Any staged run: ok reflects every certificate in the payload."""

    model_config = ConfigDict(extra="allow")
    ok: bool


class CoverLabResponse(BaseModel):
    model_config = ConfigDict(extra="allow")
    vertices: int
    edge_count: int
    greedy_size: int
    tau_star: float
    tau_exact: int
    greedy_within_bound: bool
    tau_star_below_tau: bool
