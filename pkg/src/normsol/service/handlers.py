"""Pure request -> response handlers shared by the HTTP app and the CLI.

Each handler is a total function of its request model; computation errors
that the caller must distinguish (calibration, bracket inconsistency, mass
mismatch, all-seeds failure) are raised and mapped to structured errors by
the transport layer.
"""

from __future__ import annotations

from typing import List

from ..certify import CertifyTolerances, certify
from ..families import calibrate_family, family_audit
from ..flow import multi_start
from ..nonlinearity import check_hypotheses
from ..radial import radial_testmap_audit
from ..selfcheck import run_selfcheck
from ..survey import (
    check_monotone,
    default_seeds,
    em_curve,
    emk_upper_bounds,
    mstar_bisect,
    subadditivity_audit,
)
from .schemas import (
    CertificateModel,
    CertifyRequest,
    CertifyResponse,
    CheckResult,
    EmkRequest,
    EmkResponse,
    EmPointModel,
    FieldPayload,
    LevelBoundModel,
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


def _certificate_model(cert) -> CertificateModel:
    d = cert.as_dict()
    d["schema_version"] = d.pop("schema")
    return CertificateModel(**d)


def handle_solve(req: SolveRequest) -> SolveResponse:
    spec = req.nonlinearity.to_spec(req.dimension.N)
    grid = req.grid.to_grid(req.dimension)
    extra = [req.seed_field.to_field()] if req.seed_field is not None else []
    seeds = default_seeds(grid, spec, req.m, rng_seed=req.rng_seed, extra=extra)
    result = multi_start(req.m, spec, grid, seeds, req.flow.to_config(), threads=req.threads)
    tol = CertifyTolerances(**req.tolerances.model_dump())
    cert = certify(result.minimizer, req.m, spec, tol)
    return SolveResponse(
        energy=result.report.energy,
        mass=result.report.mass,
        mu=result.mu,
        kinetic=result.report.kinetic,
        potential=result.report.potential,
        converged=result.converged,
        iterations=result.iterations,
        vanishing=result.vanishing,
        grad_norm=result.grad_norm,
        stop_reason=result.stop_reason,
        certificate=_certificate_model(cert),
        field=FieldPayload.from_field(result.minimizer) if req.include_field else None,
    )


def handle_sweep(req: SweepRequest) -> SweepResponse:
    spec = req.nonlinearity.to_spec(req.dimension.N)
    grid = req.grid.to_grid(req.dimension)
    ms = req.resolve_m_values()
    curve = em_curve(ms, spec, grid, req.flow.to_config(),
                     rng_seed=req.rng_seed, threads=req.threads)
    mono = check_monotone(curve, req.monotone_tol)
    sub = subadditivity_audit(curve, req.subadd_tol)
    return SweepResponse(
        points=[EmPointModel(**vars(p)) for p in curve.points],
        csv=curve.to_csv(),
        provenance=curve.provenance,
        monotone=mono.as_dict(),
        subadditivity=sub.as_dict(),
    )


def handle_mstar(req: MStarRequest) -> MStarResponse:
    spec = req.nonlinearity.to_spec(req.dimension.N)
    grid = req.grid.to_grid(req.dimension)
    res = mstar_bisect(spec, grid, req.flow.to_config(), req.m_lo, req.m_hi, req.tol,
                       rng_seed=req.rng_seed, threads=req.threads)
    return MStarResponse(
        m_star=res.m_star if res.m_star != float("inf") else None,
        bracket=(res.bracket[0], res.bracket[1] if res.bracket[1] != float("inf") else None),
        tol=res.tol,
        regime=res.regime,
        evaluations=res.evaluations,
    )


def handle_emk(req: EmkRequest) -> EmkResponse:
    spec = req.nonlinearity.to_spec(req.dimension.N)
    grid = req.grid.to_grid(req.dimension)
    bounds = emk_upper_bounds(req.m, req.k_max, spec, grid,
                              n_samples=req.samples, rng_seed=req.rng_seed)
    return EmkResponse(m=req.m, bounds=[LevelBoundModel(**b.as_dict()) for b in bounds])


def handle_testmap(req: TestmapRequest) -> TestmapResponse:
    spec = req.nonlinearity.to_spec(req.dimension.N)
    grid = req.grid.to_grid(req.dimension)
    if req.dimension.sector == "radial":
        audit = radial_testmap_audit(req.k, req.m, spec, grid,
                                     n_samples=req.samples, rng_seed=req.rng_seed)
        sup_bound = audit.zeta
    else:
        zeta = check_hypotheses(spec).zeta
        cfg = calibrate_family(req.k, grid, spec, zeta,
                               n_samples=min(req.samples, 16), rng_seed=req.rng_seed)
        audit = family_audit(cfg, req.m, grid, spec,
                             n_samples=req.samples, rng_seed=req.rng_seed)
        sup_bound = 2.0 * zeta
    holds = (
        audit.min_F_integral >= 1.0
        and audit.max_sup_norm <= sup_bound
        and audit.max_oddness_residual == 0.0
        and audit.max_antisym_residual <= 1e-12
    )
    return TestmapResponse(audit=audit.as_dict(), sup_norm_bound=sup_bound, bounds_hold=holds)


def handle_certify(req: CertifyRequest) -> CertifyResponse:
    u = req.field.to_field()
    spec = req.nonlinearity.to_spec(u.grid.config.N)
    tol = CertifyTolerances(**req.tolerances.model_dump())
    cert = certify(u, req.m, spec, tol)
    return CertifyResponse(certificate=_certificate_model(cert))


def handle_selfcheck(req: SelfcheckRequest) -> SelfcheckResponse:
    outcomes = run_selfcheck(fast=req.fast)
    checks: List[CheckResult] = [
        CheckResult(name=o.name, passed=o.passed, detail=o.detail) for o in outcomes
    ]
    return SelfcheckResponse(passed=all(c.passed for c in checks), checks=checks)
