"""FastAPI application exposing the solver as a compute service."""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..certify import MassMismatch
from ..families import CalibrationFailed, DomainTooSmall
from ..fields import ZeroField
from ..flow import AllFailed
from ..grids import InvalidConfig, SectorMismatch, ShapeMismatch
from ..nonlinearity import InvalidNonlinearity
from ..survey import ConditionNotMet, InconsistentBracket
from . import handlers
from .schemas import (
    CertifyRequest,
    CertifyResponse,
    EmkRequest,
    EmkResponse,
    MStarRequest,
    MStarResponse,
    SelfcheckRequest,
    SelfcheckResponse,
    SolveRequest,
    SolveResponse,
    SweepRequest,
    SweepResponse,
    TestmapRequest,
    TestmapResponse,
)

#: domain errors surfaced as structured 409s (computation failed, not transport)
_COMPUTE_ERRORS = (
    CalibrationFailed,
    DomainTooSmall,
    InconsistentBracket,
    ConditionNotMet,
    MassMismatch,
    AllFailed,
    ZeroField,
)
#: configuration errors surfaced as 400s
_CONFIG_ERRORS = (InvalidConfig, InvalidNonlinearity, SectorMismatch, ShapeMismatch, ValueError)


def create_app() -> FastAPI:
    app = FastAPI(title="normsol", version=__version__)

    @app.exception_handler(Exception)
    async def _domain_errors(request, exc):  # noqa: ANN001
        if isinstance(exc, _COMPUTE_ERRORS):
            status = 409
        elif isinstance(exc, _CONFIG_ERRORS):
            status = 400
        else:
            status = 500
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "message": str(exc)},
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest) -> SolveResponse:
        return handlers.handle_solve(req)

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        return handlers.handle_sweep(req)

    @app.post("/mstar", response_model=MStarResponse)
    def mstar(req: MStarRequest) -> MStarResponse:
        return handlers.handle_mstar(req)

    @app.post("/emk", response_model=EmkResponse)
    def emk(req: EmkRequest) -> EmkResponse:
        return handlers.handle_emk(req)

    @app.post("/verify-testmap", response_model=TestmapResponse)
    def verify_testmap(req: TestmapRequest) -> TestmapResponse:
        return handlers.handle_testmap(req)

    @app.post("/certify", response_model=CertifyResponse)
    def certify_endpoint(req: CertifyRequest) -> CertifyResponse:
        return handlers.handle_certify(req)

    @app.post("/selfcheck", response_model=SelfcheckResponse)
    def selfcheck(req: SelfcheckRequest) -> SelfcheckResponse:
        return handlers.handle_selfcheck(req)

    return app


app = create_app()
