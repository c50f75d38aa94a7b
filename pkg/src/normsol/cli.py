"""Command-line entry point: a thin client of the solver service.

Requests are built from config-file keys plus flag overrides and dispatched
either in-process (default) or to a running service via --server.  Artifacts
(result JSON, sweep CSV, field files) and a manifest are written under the
output directory by the client.

Exit codes: 0 success, 1 configuration error, 2 computation failure
(non-convergence is a success with a flag, not a failure), 3 selfcheck
failure.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Any, Dict, Optional

import click
from pydantic import BaseModel, ValidationError

from . import __version__
from .config import ConfigError, build_problem_parts, load_config_file, merge_config
from .service import handlers
from .service.schemas import (
    CertifyRequest,
    EmkRequest,
    FieldPayload,
    MStarRequest,
    SelfcheckRequest,
    SolveRequest,
    SweepRequest,
    TestmapRequest,
)

_EXIT_CONFIG = 1
_EXIT_COMPUTE = 2
_EXIT_SELFCHECK = 3

_ENDPOINTS = {
    SolveRequest: ("/solve", handlers.handle_solve),
    SweepRequest: ("/sweep", handlers.handle_sweep),
    MStarRequest: ("/mstar", handlers.handle_mstar),
    EmkRequest: ("/emk", handlers.handle_emk),
    TestmapRequest: ("/verify-testmap", handlers.handle_testmap),
    CertifyRequest: ("/certify", handlers.handle_certify),
    SelfcheckRequest: ("/selfcheck", handlers.handle_selfcheck),
}


class ComputeFailure(RuntimeError):
    def __init__(self, error: str, message: str):
        self.error = error
        super().__init__(f"{error}: {message}")


def _dispatch(req: BaseModel, server: Optional[str]) -> BaseModel:
    path, local = _ENDPOINTS[type(req)]
    if server is None:
        from .certify import MassMismatch
        from .families import CalibrationFailed, DomainTooSmall
        from .fields import ZeroField
        from .flow import AllFailed
        from .survey import ConditionNotMet, InconsistentBracket

        try:
            return local(req)
        except (
            CalibrationFailed,
            DomainTooSmall,
            InconsistentBracket,
            ConditionNotMet,
            MassMismatch,
            AllFailed,
            ZeroField,
        ) as exc:
            raise ComputeFailure(type(exc).__name__, str(exc)) from exc
    import httpx

    resp = httpx.post(
        server.rstrip("/") + path,
        json=json.loads(req.model_dump_json()),
        timeout=None,
    )
    if resp.status_code == 409:
        body = resp.json()
        raise ComputeFailure(body.get("error", "ComputeError"), body.get("message", ""))
    if resp.status_code >= 400:
        raise ConfigError([f"server rejected request ({resp.status_code}): {resp.text}"])
    from .service.schemas import (
        CertifyResponse,
        EmkResponse,
        MStarResponse,
        SelfcheckResponse,
        SolveResponse,
        SweepResponse,
        TestmapResponse,
    )

    model = {
        "/solve": SolveResponse,
        "/sweep": SweepResponse,
        "/mstar": MStarResponse,
        "/emk": EmkResponse,
        "/verify-testmap": TestmapResponse,
        "/certify": CertifyResponse,
        "/selfcheck": SelfcheckResponse,
    }[path]
    return model.model_validate(resp.json())


def _write_artifacts(
    out_dir: str,
    command: str,
    request: BaseModel,
    result_json: Dict[str, Any],
    extra_files: Dict[str, Any],
    started: float,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    result_path = out / "result.json"
    result_path.write_text(json.dumps(result_json, indent=2, sort_keys=True) + "\n")
    artifacts.append(result_path.name)
    for name, content in extra_files.items():
        p = out / name
        if isinstance(content, bytes):
            p.write_bytes(content)
        else:
            p.write_text(content)
        artifacts.append(name)
    config_blob = request.model_dump_json()
    manifest = {
        "schema": 1,
        "tool": "normsol",
        "version": __version__,
        "command": command,
        "config": json.loads(config_blob),
        "config_digest": hashlib.sha256(config_blob.encode()).hexdigest(),
        "wall_time_s": time.time() - started,
        "artifacts": artifacts,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def _field_payload_bytes(payload: FieldPayload) -> bytes:
    import tempfile

    from .fields import save_field

    u = payload.to_field()
    with tempfile.NamedTemporaryFile(suffix=".field") as fh:
        save_field(fh.name, u)
        return Path(fh.name).read_bytes()


_CONFIG_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="JSON config file with flat dotted keys."),
    click.option("--server", default=None, help="URL of a running service; default runs in-process."),
    click.option("--out", "out_dir", default=None, help="Artifact output directory."),
    click.option("--kind", "nl_kind", type=click.Choice(["power_difference", "pure_power"]),
                 default=None, help="Nonlinearity family."),
    click.option("--p", "nl_p", type=float, default=None, help="Leading exponent p."),
    click.option("--q", "nl_q", type=float, default=None, help="Second exponent q."),
    click.option("--truncate", "nl_truncate", is_flag=True, default=False,
                 help="Cut the nonlinearity beyond its first zero past the witness."),
    click.option("--N", "dim_N", type=int, default=None, help="Ambient dimension N."),
    click.option("--M", "dim_M", type=int, default=None, help="Block dimension M."),
    click.option("--sector", type=click.Choice(["x2", "radial"]), default=None),
    click.option("--grid-n", default=None, help="Points per axis (int or comma list)."),
    click.option("--grid-L", "grid_L", type=float, default=None, help="Domain radius."),
    click.option("--dt0", type=float, default=None, help="Initial flow step."),
    click.option("--tol-grad", type=float, default=None, help="Tangent-gradient tolerance."),
    click.option("--max-iter", type=int, default=None, help="Flow iteration cap."),
    click.option("--rng-seed", type=int, default=None, help="Seed for all randomness."),
    click.option("--threads", type=int, default=None, help="Worker pool size."),
]


def _with_config_options(f):
    for opt in reversed(_CONFIG_OPTIONS):
        f = opt(f)
    return f


def _collect(config_path, **kw) -> Dict[str, Any]:
    base = load_config_file(config_path) if config_path else {}
    overrides = {
        "nonlinearity.kind": kw.get("nl_kind"),
        "nonlinearity.p": kw.get("nl_p"),
        "nonlinearity.q": kw.get("nl_q"),
        "nonlinearity.truncate": True if kw.get("nl_truncate") else None,
        "dimension.N": kw.get("dim_N"),
        "dimension.M": kw.get("dim_M"),
        "sector": kw.get("sector"),
        "grid.n": kw.get("grid_n"),
        "grid.L": kw.get("grid_L"),
        "flow.dt0": kw.get("dt0"),
        "flow.tol_grad": kw.get("tol_grad"),
        "flow.max_iter": kw.get("max_iter"),
        "rng_seed": kw.get("rng_seed"),
        "threads": kw.get("threads"),
    }
    return merge_config(base, overrides)


def _fail_config(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(_EXIT_CONFIG)


def _fail_compute(exc: ComputeFailure) -> None:
    click.echo(f"computation failed: {exc}", err=True)
    sys.exit(_EXIT_COMPUTE)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Normalized-solution solver for nonlinear scalar field equations."""


@main.command()
@_with_config_options
@click.option("--m", type=float, required=True, help="Prescribed mass (squared L2 norm).")
@click.option("--seed", "seed_path", default=None,
              help="Flow seed: a field file path or builtin:<gauss|family>.")
@click.option("--no-field", is_flag=True, default=False, help="Skip writing the minimizer field.")
def solve(config_path, server, out_dir, m, seed_path, no_field, **kw) -> None:
    """Minimize the energy at fixed mass and certify the solution."""
    started = time.time()
    try:
        cfg = _collect(config_path, **kw)
        nl, dim, grid, flow, rng_seed, threads = build_problem_parts(cfg)
        seed_field = None
        if seed_path and not seed_path.startswith("builtin:"):
            from .fields import load_field

            seed_field = FieldPayload.from_field(load_field(seed_path))
        req = SolveRequest(
            nonlinearity=nl, dimension=dim, grid=grid, flow=flow,
            rng_seed=rng_seed, threads=threads, m=m,
            seed_field=seed_field, include_field=not no_field,
        )
    except (ConfigError, ValidationError, ValueError, OSError) as exc:
        _fail_config(exc)
    try:
        resp = _dispatch(req, server)
    except ComputeFailure as exc:
        _fail_compute(exc)
    body = json.loads(resp.model_dump_json(exclude={"field"}))
    extra: Dict[str, Any] = {}
    if resp.field is not None:
        extra["minimizer.field"] = _field_payload_bytes(resp.field)
    click.echo(
        f"E = {resp.energy:.8g}  mu = {resp.mu:.6g}  converged = {resp.converged}  "
        f"vanishing = {resp.vanishing}  certificate passed = {resp.certificate.passed}"
    )
    if out_dir:
        path = _write_artifacts(out_dir, "solve", req, body, extra, started)
        click.echo(f"artifacts written to {path}")


@main.command()
@_with_config_options
@click.option("--m-from", type=float, default=None)
@click.option("--m-to", type=float, default=None)
@click.option("--points", type=int, default=None)
@click.option("--m-values", default=None, help="Comma-separated explicit mass grid.")
@click.option("--log", "log_spacing", is_flag=True, default=False)
@click.option("--monotone-tol", type=float, default=1e-4)
@click.option("--subadd-tol", type=float, default=1e-4)
def sweep(config_path, server, out_dir, m_from, m_to, points, m_values,
          log_spacing, monotone_tol, subadd_tol, **kw) -> None:
    """Sweep the ground level over a mass grid and audit the curve."""
    started = time.time()
    try:
        cfg = _collect(config_path, **kw)
        nl, dim, grid, flow, rng_seed, threads = build_problem_parts(cfg)
        ms = [float(v) for v in m_values.split(",")] if m_values else None
        req = SweepRequest(
            nonlinearity=nl, dimension=dim, grid=grid, flow=flow,
            rng_seed=rng_seed, threads=threads,
            m_values=ms, m_from=m_from, m_to=m_to, points=points,
            log_spacing=log_spacing, monotone_tol=monotone_tol, subadd_tol=subadd_tol,
        )
        req.resolve_m_values()
    except (ConfigError, ValidationError, ValueError) as exc:
        _fail_config(exc)
    try:
        resp = _dispatch(req, server)
    except ComputeFailure as exc:
        _fail_compute(exc)
    for p in resp.points:
        click.echo(
            f"m = {p.m:<8g} E = {p.E:+.8g}  attained = {int(p.attained)}  "
            f"vanishing = {int(p.vanishing)}  mu = {p.mu:+.6g}"
        )
    click.echo(
        f"monotone: {'pass' if resp.monotone['passed'] else 'FAIL'}  "
        f"subadditivity: {'pass' if resp.subadditivity['passed'] else 'FAIL'}"
    )
    if out_dir:
        body = json.loads(resp.model_dump_json(exclude={"csv"}))
        path = _write_artifacts(out_dir, "sweep", req, body, {"curve.csv": resp.csv}, started)
        click.echo(f"artifacts written to {path}")


@main.command()
@_with_config_options
@click.option("--m-lo", type=float, required=True)
@click.option("--m-hi", type=float, required=True)
@click.option("--tol", type=float, required=True, help="Final bracket width.")
def mstar(config_path, server, out_dir, m_lo, m_hi, tol, **kw) -> None:
    """Bracket the threshold mass below which the ground level is zero."""
    started = time.time()
    try:
        cfg = _collect(config_path, **kw)
        nl, dim, grid, flow, rng_seed, threads = build_problem_parts(cfg)
        req = MStarRequest(nonlinearity=nl, dimension=dim, grid=grid, flow=flow,
                           rng_seed=rng_seed, threads=threads,
                           m_lo=m_lo, m_hi=m_hi, tol=tol)
    except (ConfigError, ValidationError, ValueError) as exc:
        _fail_config(exc)
    try:
        resp = _dispatch(req, server)
    except ComputeFailure as exc:
        _fail_compute(exc)
    click.echo(f"regime = {resp.regime}  m* = {resp.m_star}  bracket = {resp.bracket}")
    if out_dir:
        _write_artifacts(out_dir, "mstar", req, json.loads(resp.model_dump_json()), {}, started)


@main.command()
@_with_config_options
@click.option("--m", type=float, required=True)
@click.option("--kmax", type=int, required=True)
@click.option("--samples", type=int, default=64)
def emk(config_path, server, out_dir, m, kmax, samples, **kw) -> None:
    """Upper bounds for the k-th minimax energy levels via odd families."""
    started = time.time()
    try:
        cfg = _collect(config_path, **kw)
        nl, dim, grid, flow, rng_seed, threads = build_problem_parts(cfg)
        req = EmkRequest(nonlinearity=nl, dimension=dim, grid=grid, flow=flow,
                         rng_seed=rng_seed, threads=threads,
                         m=m, k_max=kmax, samples=samples)
    except (ConfigError, ValidationError, ValueError) as exc:
        _fail_config(exc)
    try:
        resp = _dispatch(req, server)
    except ComputeFailure as exc:
        _fail_compute(exc)
    for b in resp.bounds:
        if b.error:
            click.echo(f"k = {b.k}: calibration failed ({b.error})")
        else:
            click.echo(f"k = {b.k}: bound = {b.bound:+.8g}  (R = {b.R}, best s = {b.best_s:.4g})")
    if out_dir:
        _write_artifacts(out_dir, "emk", req, json.loads(resp.model_dump_json()), {}, started)


@main.command("verify-testmap")
@_with_config_options
@click.option("--k", type=int, required=True)
@click.option("--m", type=float, required=True)
@click.option("--samples", type=int, default=64)
def verify_testmap(config_path, server, out_dir, k, m, samples, **kw) -> None:
    """Audit the odd family bounds (F-integral, sup-norm, oddness)."""
    started = time.time()
    try:
        cfg = _collect(config_path, **kw)
        nl, dim, grid, flow, rng_seed, threads = build_problem_parts(cfg)
        req = TestmapRequest(nonlinearity=nl, dimension=dim, grid=grid, flow=flow,
                             rng_seed=rng_seed, threads=threads,
                             k=k, m=m, samples=samples)
    except (ConfigError, ValidationError, ValueError) as exc:
        _fail_config(exc)
    try:
        resp = _dispatch(req, server)
    except ComputeFailure as exc:
        _fail_compute(exc)
    a = resp.audit
    click.echo(
        f"bounds hold = {resp.bounds_hold}  min intF = {a['min_F_integral']:.6g}  "
        f"sup norm = {a['max_sup_norm']:.6g} (bound {resp.sup_norm_bound})  "
        f"negative s exists = {a['negative_s_exists']}"
    )
    if out_dir:
        _write_artifacts(out_dir, "verify-testmap", req,
                         json.loads(resp.model_dump_json()), {}, started)


@main.command()
@_with_config_options
@click.option("--input", "input_path", type=click.Path(exists=True), required=True,
              help="Field file to certify.")
@click.option("--m", type=float, required=True)
def certify(config_path, server, out_dir, input_path, m, **kw) -> None:
    """Certify a stored field as a normalized solution."""
    started = time.time()
    try:
        cfg = _collect(config_path, **kw)
        nl, dim, grid, flow, rng_seed, threads = build_problem_parts(cfg)
        from .fields import load_field

        payload = FieldPayload.from_field(load_field(input_path))
        req = CertifyRequest(nonlinearity=nl, m=m, field=payload)
    except (ConfigError, ValidationError, ValueError, OSError) as exc:
        _fail_config(exc)
    try:
        resp = _dispatch(req, server)
    except ComputeFailure as exc:
        _fail_compute(exc)
    c = resp.certificate
    click.echo(
        f"passed = {c.passed}  E = {c.energy:.8g}  mu = {c.mu:.6g}  "
        f"|P|_rel = {c.pohozaev_rel:.3g}  EL residual = {c.el_residual:.3g}"
    )
    if out_dir:
        _write_artifacts(out_dir, "certify", req, json.loads(resp.model_dump_json()), {}, started)


@main.command()
@_with_config_options
def selfcheck(config_path, server, out_dir, **kw) -> None:
    """Run the built-in invariant suite; exit 3 on any failure."""
    started = time.time()
    req = SelfcheckRequest()
    try:
        resp = _dispatch(req, server)
    except ComputeFailure as exc:
        _fail_compute(exc)
    for c in resp.checks:
        click.echo(f"[{'pass' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
    if out_dir:
        _write_artifacts(out_dir, "selfcheck", req, json.loads(resp.model_dump_json()), {}, started)
    if not resp.passed:
        sys.exit(_EXIT_SELFCHECK)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
