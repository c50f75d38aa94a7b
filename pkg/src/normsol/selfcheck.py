"""Built-in invariant suite: fast oracle checks runnable from the CLI/service.

Each check recomputes an independently known quantity (closed-form integral,
finite-difference directional derivative, scaling law) and compares at a
fixed tolerance.  Intended as a smoke gate for fresh builds and deployments;
the full test suite lives in tests/.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from .families import calibrate_family, family_audit, smooth_sign
from .fields import (
    Field,
    canonicalize,
    dilate_space,
    energy,
    energy_of_values,
    l2_gradient_values,
    load_field,
    mass,
    normalize_mass,
    rescale_s,
    save_field,
)
from .grids import SymmetryConfig, antisymmetrize, build_grid, quadrature, symmetry_residual
from .nonlinearity import check_hypotheses, eval_F, eval_f, power_difference, pure_power

__all__ = ["SelfcheckOutcome", "run_selfcheck"]


@dataclass
class SelfcheckOutcome:
    name: str
    passed: bool
    detail: str


def _check_quadrature() -> Tuple[bool, str]:
    g = build_grid(SymmetryConfig("x2", 4, 2), 128, 12.0)
    r1, r2 = g.coordinate_mesh()
    q = quadrature(g, np.exp(-(r1 ** 2 + r2 ** 2)))
    rel = abs(q - math.pi ** 2) / math.pi ** 2
    return rel <= 1e-4, f"gaussian over R^4: rel err {rel:.3e} (tol 1e-4)"


def _check_gradient() -> Tuple[bool, str]:
    spec = pure_power(2.5, 4)
    g = build_grid(SymmetryConfig("x2", 4, 2), 64, 12.0)
    rng = np.random.default_rng(7)
    mesh = g.coordinate_mesh()

    def bumps():
        v = np.zeros(g.shape)
        for _ in range(5):
            c = rng.uniform(1.0, 8.0, size=2)
            w = rng.uniform(0.6, 1.8)
            v += rng.normal() * np.exp(
                -((mesh[0] - c[0]) ** 2 + (mesh[1] - c[1]) ** 2) / (2 * w * w)
            )
        return canonicalize(g, v)

    worst = 0.0
    for _ in range(5):
        u, v = bumps(), bumps()
        lhs = quadrature(g, (l2_gradient_values(g, u, spec)) * v)
        eps = 1e-4
        Ip = energy_of_values(g, canonicalize(g, u + eps * v), spec).energy
        Im = energy_of_values(g, canonicalize(g, u - eps * v), spec).energy
        rel = abs(lhs - (Ip - Im) / (2 * eps)) / max(abs(Ip - Im) / (2 * eps), 1e-30)
        worst = max(worst, rel)
    return worst <= 1e-5, f"worst directional-derivative mismatch {worst:.3e} (tol 1e-5)"


def _check_scaling() -> Tuple[bool, str]:
    spec = pure_power(2.5, 4)
    g = build_grid(SymmetryConfig("x2", 4, 2), 128, 12.0)
    r1, r2 = g.coordinate_mesh()
    u = Field(g, np.exp(-((r1 - 2.5) ** 2 + (r2 - 1.2) ** 2))
              - np.exp(-((r1 - 1.2) ** 2 + (r2 - 2.5) ** 2)))
    rep = energy(u, spec)
    worst = 0.0
    for t in (0.8, 1.25):
        repv = energy(dilate_space(u, t), spec)
        pred = t ** 4 * rep.energy + 0.5 * t ** 2 * (1 - t * t) * rep.kinetic
        worst = max(worst, abs(repv.energy - pred) / abs(pred))
    for s in (0.5, 1.25):
        repw = energy(rescale_s(u, s), spec)
        worst = max(worst, abs(repw.mass - rep.mass) / rep.mass)
        worst = max(worst, abs(repw.kinetic / rep.kinetic - s * s) / (s * s))
    return worst <= 2e-2, f"worst scaling-identity deviation {worst:.3e} (tol 2e-2)"


def _check_symmetry() -> Tuple[bool, str]:
    g = build_grid(SymmetryConfig("x2", 4, 2), 64, 10.0)
    rng = np.random.default_rng(3)
    v = rng.normal(size=g.shape)
    a = antisymmetrize(g, v)
    ok = np.array_equal(a, antisymmetrize(g, a))
    res = symmetry_residual(g, a)
    sym = 0.5 * (v + np.swapaxes(v, 0, 1))
    ortho = abs(quadrature(g, a * sym))
    scale = max(quadrature(g, v * v), 1.0)
    ok = ok and res <= 1e-12 and ortho <= 1e-10 * scale
    return ok, f"idempotent={ok}, residual={res:.2e}, ortho={ortho:.2e}"


def _check_nonlinearity() -> Tuple[bool, str]:
    pd = power_difference(2.5, 3.5, 4)
    ok = abs(float(eval_f(pd, 1.0))) <= 1e-15
    ok = ok and abs(float(eval_F(pd, 1.0)) - (1 / 2.5 - 1 / 3.5)) <= 1e-15
    ok = ok and abs(smooth_sign(0.5) - 11.0 / 16.0) <= 1e-15
    rep = check_hypotheses(pd)
    ok = ok and rep.all_satisfied and rep.cond_11 and abs(rep.zeta - 1.0) <= 1e-8
    ts = np.linspace(-3, 3, 601)
    ok = ok and np.max(np.abs(eval_f(pd, ts) + eval_f(pd, -ts))) == 0.0
    return ok, "closed forms, oddness, hypothesis flags"


def _check_testmap() -> Tuple[bool, str]:
    spec = power_difference(2.5, 3.5, 4)
    g = build_grid(SymmetryConfig("x2", 4, 2), 64, 12.0)
    zeta = check_hypotheses(spec).zeta
    cfg = calibrate_family(1, g, spec, zeta, n_samples=2)
    audit = family_audit(cfg, 1.0, g, spec, n_samples=2)
    ok = (
        audit.min_F_integral >= 1.0
        and audit.max_sup_norm <= 2 * zeta
        and audit.max_oddness_residual == 0.0
    )
    return ok, (
        f"min intF={audit.min_F_integral:.3g}, sup={audit.max_sup_norm:.3g}, "
        f"odd residual={audit.max_oddness_residual:.1e}"
    )


def _check_serialization() -> Tuple[bool, str]:
    g = build_grid(SymmetryConfig("radial", 4), 64, 10.0)
    rng = np.random.default_rng(11)
    u = Field(g, rng.normal(size=g.shape))
    with tempfile.NamedTemporaryFile(suffix=".field") as fh:
        save_field(fh.name, u)
        v = load_field(fh.name)
    ok = np.array_equal(u.values, v.values)
    return ok, f"binary round-trip lossless={ok}"


def _check_mass_projection() -> Tuple[bool, str]:
    g = build_grid(SymmetryConfig("x2", 4, 2), 64, 10.0)
    r1, r2 = g.coordinate_mesh()
    u = Field(g, antisymmetrize(g, np.exp(-((r1 - 3) ** 2 + (r2 - 1.5) ** 2))))
    w = normalize_mass(u, 2.0)
    rel = abs(mass(w) - 2.0) / 2.0
    return rel <= 1e-14, f"normalize_mass relative error {rel:.2e} (tol 1e-14)"


_CHECKS: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
    ("quadrature_oracle", _check_quadrature),
    ("gradient_consistency", _check_gradient),
    ("scaling_identities", _check_scaling),
    ("antisymmetry_projector", _check_symmetry),
    ("nonlinearity_closed_forms", _check_nonlinearity),
    ("testmap_bounds", _check_testmap),
    ("field_serialization", _check_serialization),
    ("mass_projection", _check_mass_projection),
]


def run_selfcheck(fast: bool = True) -> List[SelfcheckOutcome]:
    out: List[SelfcheckOutcome] = []
    for name, fn in _CHECKS:
        try:
            passed, detail = fn()
        except Exception as exc:  # noqa: BLE001 - reported as a failed check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        out.append(SelfcheckOutcome(name=name, passed=passed, detail=detail))
    return out
