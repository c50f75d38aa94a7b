"""Pydantic request/response models for the solver service.

These are the wire contract: the CLI builds requests from config keys and
flags, the FastAPI app exposes one endpoint per command, and responses are
plain JSON.  Field data travels as a JSON header plus base64-encoded raw
little-endian float64 values (same layout as the binary field file).
"""

from __future__ import annotations

import base64
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field as PField, model_validator

from ..fields import Field
from ..grids import ReducedGrid, SymmetryConfig, build_grid
from ..nonlinearity import (
    NonlinearitySpec,
    power_difference,
    pure_power,
    truncate,
)


class NonlinearityModel(BaseModel):
    kind: Literal["power_difference", "pure_power"] = "pure_power"
    p: float = 2.5
    q: Optional[float] = None
    truncate: bool = False

    def to_spec(self, N: int) -> NonlinearitySpec:
        if self.kind == "power_difference":
            if self.q is None:
                raise ValueError("power_difference requires exponent q")
            spec = power_difference(self.p, self.q, N)
        else:
            spec = pure_power(self.p, N)
        return truncate(spec) if self.truncate else spec


class DimensionModel(BaseModel):
    N: int = 4
    M: Optional[int] = 2
    sector: Literal["x2", "radial"] = "x2"

    def to_config(self) -> SymmetryConfig:
        return SymmetryConfig(sector=self.sector, N=self.N,
                              M=self.M if self.sector == "x2" else None)


class GridModel(BaseModel):
    n: Union[int, List[int]] = 128
    L: float = 64.0

    def to_grid(self, dim: DimensionModel) -> ReducedGrid:
        return build_grid(dim.to_config(), self.n, self.L)


class FlowModel(BaseModel):
    dt0: Optional[float] = None
    backtrack: float = 0.5
    tol_grad: Optional[float] = None
    tol_energy: float = 1e-12
    max_iter: int = 200_000

    def to_config(self):
        from ..flow import FlowConfig

        return FlowConfig(
            dt0=self.dt0,
            backtrack=self.backtrack,
            tol_grad=self.tol_grad,
            tol_energy=self.tol_energy,
            max_iter=self.max_iter,
        )


class FieldPayload(BaseModel):
    sector: Literal["x2", "radial"]
    N: int
    M: Optional[int]
    n: List[int]
    L: float
    data_b64: str

    @classmethod
    def from_field(cls, u: Field) -> "FieldPayload":
        d = u.grid.describe()
        raw = np.ascontiguousarray(u.values, dtype="<f8").tobytes()
        return cls(sector=d["sector"], N=d["N"], M=d["M"], n=d["n"], L=d["L"],
                   data_b64=base64.b64encode(raw).decode("ascii"))

    def to_field(self) -> Field:
        config = SymmetryConfig(sector=self.sector, N=self.N, M=self.M)
        grid = build_grid(config, self.n, self.L)
        raw = base64.b64decode(self.data_b64.encode("ascii"))
        values = np.frombuffer(raw, dtype="<f8").reshape(tuple(self.n)).astype(float)
        return Field(grid, values)


class CertificateModel(BaseModel):
    schema_version: int = 1
    energy: float
    mass: float
    mu: float
    kinetic: float
    potential: float
    pohozaev_abs: float
    pohozaev_rel: float
    el_residual: float
    antisym_residual: float
    sign_changing: bool
    nonradiality: float
    passed: bool
    sector: str


class ToleranceModel(BaseModel):
    pohozaev_rel: float = 1e-2
    el_residual: float = 1e-4
    antisym_residual: float = 1e-10
    mass_rel: float = 1e-6


class ProblemModel(BaseModel):
    nonlinearity: NonlinearityModel = NonlinearityModel()
    dimension: DimensionModel = DimensionModel()
    grid: GridModel = GridModel()
    flow: FlowModel = FlowModel()
    rng_seed: int = 0
    threads: int = 1

    @model_validator(mode="after")
    def _check(self):
        # surface nonlinearity/sector inconsistencies at request validation time
        self.nonlinearity.to_spec(self.dimension.N)
        self.dimension.to_config()
        return self


class SolveRequest(ProblemModel):
    m: float = PField(gt=0)
    seed_field: Optional[FieldPayload] = None
    include_field: bool = True
    tolerances: ToleranceModel = ToleranceModel()


class SolveResponse(BaseModel):
    schema_version: int = 1
    energy: float
    mass: float
    mu: float
    kinetic: float
    potential: float
    converged: bool
    iterations: int
    vanishing: bool
    grad_norm: float
    stop_reason: str
    certificate: CertificateModel
    field: Optional[FieldPayload] = None


class SweepRequest(ProblemModel):
    m_values: Optional[List[float]] = None
    m_from: Optional[float] = None
    m_to: Optional[float] = None
    points: Optional[int] = None
    log_spacing: bool = False
    monotone_tol: float = 1e-4
    subadd_tol: float = 1e-4

    def resolve_m_values(self) -> List[float]:
        if self.m_values:
            return [float(v) for v in self.m_values]
        if self.m_from is None or self.m_to is None or self.points is None:
            raise ValueError("sweep needs m_values or (m_from, m_to, points)")
        if self.log_spacing:
            vals = np.geomspace(self.m_from, self.m_to, self.points)
        else:
            vals = np.linspace(self.m_from, self.m_to, self.points)
        return [float(v) for v in vals]


class EmPointModel(BaseModel):
    m: float
    E: float
    E_raw: float
    attained: bool
    vanishing: bool
    converged: bool
    mu: float
    pohozaev_rel: float
    grad_norm: float
    iterations: int


class SweepResponse(BaseModel):
    schema_version: int = 1
    points: List[EmPointModel]
    csv: str
    provenance: str
    monotone: dict
    subadditivity: dict


class MStarRequest(ProblemModel):
    m_lo: float = PField(gt=0)
    m_hi: float = PField(gt=0)
    tol: float = PField(gt=0)


class MStarResponse(BaseModel):
    schema_version: int = 1
    m_star: Optional[float]
    bracket: Tuple[Optional[float], Optional[float]]
    tol: float
    regime: str
    evaluations: List[Tuple[float, float, str]]


class EmkRequest(ProblemModel):
    m: float = PField(gt=0)
    k_max: int = PField(ge=1)
    samples: int = 64


class LevelBoundModel(BaseModel):
    k: int
    bound: Optional[float]
    R: Optional[float]
    best_s: Optional[float]
    error: Optional[str]


class EmkResponse(BaseModel):
    schema_version: int = 1
    m: float
    bounds: List[LevelBoundModel]


class TestmapRequest(ProblemModel):
    k: int = PField(ge=1)
    m: float = PField(gt=0)
    samples: int = 64


class TestmapResponse(BaseModel):
    schema_version: int = 1
    audit: dict
    sup_norm_bound: float
    bounds_hold: bool


class CertifyRequest(BaseModel):
    nonlinearity: NonlinearityModel = NonlinearityModel()
    m: float = PField(gt=0)
    field: FieldPayload
    tolerances: ToleranceModel = ToleranceModel()


class CertifyResponse(BaseModel):
    schema_version: int = 1
    certificate: CertificateModel


class SelfcheckRequest(BaseModel):
    fast: bool = True


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str


class SelfcheckResponse(BaseModel):
    schema_version: int = 1
    passed: bool
    checks: List[CheckResult]


class ErrorResponse(BaseModel):
    error: str
    message: str
