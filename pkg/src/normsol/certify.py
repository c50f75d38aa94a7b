"""Solution certificates: Pohozaev identity, Euler-Lagrange residual,
multiplier sign, antisymmetry, sign change, nonradiality.

A constrained critical point (u, mu) of the energy must satisfy

    P(u) = (N-2)/(2N) * int |grad u|^2 + mu/2 * int u^2 - int F(u) = 0,

and the algebraic identity I(u) - P(u) = (1/N) int |grad u|^2 - mu/2 int u^2
holds for any field by definition of the stored quantities.  Certificates
evaluate these on the same quadrature as the solver, so a converged flow
state passes at the discretization budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import Field, EnergyReport, energy, l2_gradient_values, rescale_s, normalize_mass
from .grids import ReducedGrid, quadrature, radial_profile, symmetry_residual
from .nonlinearity import NonlinearitySpec

__all__ = [
    "SolutionCertificate",
    "CertifyTolerances",
    "MassMismatch",
    "pohozaev",
    "certify",
    "coercivity_scan",
    "random_smooth_field",
]


class MassMismatch(ValueError):
    pass


@dataclass(frozen=True)
class CertifyTolerances:
    pohozaev_rel: float = 1e-2
    el_residual: float = 1e-4
    antisym_residual: float = 1e-10
    mass_rel: float = 1e-6


@dataclass(frozen=True)
class SolutionCertificate:
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

    def as_dict(self) -> dict:
        return {
            "schema": 1,
            "energy": self.energy,
            "mass": self.mass,
            "mu": self.mu,
            "kinetic": self.kinetic,
            "potential": self.potential,
            "pohozaev_abs": self.pohozaev_abs,
            "pohozaev_rel": self.pohozaev_rel,
            "el_residual": self.el_residual,
            "antisym_residual": self.antisym_residual,
            "sign_changing": self.sign_changing,
            "nonradiality": self.nonradiality,
            "passed": self.passed,
            "sector": self.sector,
        }


def pohozaev(u: Field, mu: float, spec: NonlinearitySpec) -> float:
    """P(u) = (N-2)/(2N) kinetic + mu/2 * mass - potential; zero at solutions."""
    rep = energy(u, spec)
    return pohozaev_from_report(rep, mu, u.grid.config.N)


def pohozaev_from_report(rep: EnergyReport, mu: float, N: int) -> float:
    return (N - 2.0) / (2.0 * N) * rep.kinetic + 0.5 * mu * rep.mass - rep.potential


def certify(
    u: Field,
    m: float,
    spec: NonlinearitySpec,
    tolerances: Optional[CertifyTolerances] = None,
) -> SolutionCertificate:
    """Evaluate all necessary conditions on a candidate normalized solution.

    The multiplier is recomputed from the field itself.  In the radial
    sector the antisymmetry and sign-change gates are skipped (they encode
    the block-swap class); nonradiality is reported as 0 there.
    """
    tol = tolerances or CertifyTolerances()
    grid = u.grid
    N = grid.config.N
    rep = energy(u, spec)
    if rep.mass <= 0 or abs(rep.mass - m) > tol.mass_rel * max(m, 1e-300):
        raise MassMismatch(f"field mass {rep.mass} does not match target {m}")
    mu = rep.mu

    P = pohozaev_from_report(rep, mu, N)
    scale = abs(rep.kinetic) + abs(mu) * rep.mass + abs(rep.potential)
    P_rel = abs(P) / scale if scale > 0 else abs(P)

    res = l2_gradient_values(grid, u.values, spec) + mu * u.values
    el_res = math.sqrt(max(float(np.sum(grid.weight * res * res)), 0.0))

    sup = float(np.max(np.abs(u.values)))
    theta = 1e-8 * sup
    sign_changing = bool(u.values.min() < -theta and u.values.max() > theta)

    if grid.config.sector == "x2":
        anti = symmetry_residual(grid, u.values)
        nonrad = radial_profile(grid, u.values).deviation
        passed = (
            P_rel <= tol.pohozaev_rel
            and el_res <= tol.el_residual
            and (mu > 0 or rep.energy >= 0)
            and anti <= tol.antisym_residual
            and sign_changing
        )
    else:
        anti = 0.0
        nonrad = 0.0
        passed = (
            P_rel <= tol.pohozaev_rel
            and el_res <= tol.el_residual
            and (mu > 0 or rep.energy >= 0)
        )

    return SolutionCertificate(
        energy=rep.energy,
        mass=rep.mass,
        mu=mu,
        kinetic=rep.kinetic,
        potential=rep.potential,
        pohozaev_abs=float(P),
        pohozaev_rel=float(P_rel),
        el_residual=el_res,
        antisym_residual=float(anti),
        sign_changing=sign_changing,
        nonradiality=float(nonrad),
        passed=bool(passed),
        sector=grid.config.sector,
    )


def random_smooth_field(
    grid: ReducedGrid,
    rng: np.random.Generator,
    n_bumps: int = 5,
    interior: float = 0.7,
) -> Field:
    """Random superposition of Gaussian bumps, compactly inside the domain."""
    mesh = grid.coordinate_mesh()
    v = np.zeros(grid.shape)
    for _ in range(n_bumps):
        c = rng.uniform(0.05 * grid.L, interior * grid.L, size=grid.d)
        w = rng.uniform(0.05 * grid.L, 0.2 * grid.L)
        a = rng.normal()
        v += a * np.exp(-sum((mesh[i] - c[i]) ** 2 for i in range(grid.d)) / (2 * w * w))
    return Field(grid, v)


@dataclass
class CoercivityReport:
    n_samples: int
    empirical_C: float
    worst_violation: float
    top_decile_max_ratio: float
    finite: bool

    def as_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "empirical_C": self.empirical_C,
            "worst_violation": self.worst_violation,
            "top_decile_max_ratio": self.top_decile_max_ratio,
            "finite": self.finite,
        }


def coercivity_scan(
    spec: NonlinearitySpec,
    grid: ReducedGrid,
    m: float,
    n_samples: int = 200,
    rng_seed: int = 0,
) -> CoercivityReport:
    """Probe I(u) >= kinetic/4 - C over random fields with mass <= m.

    Spatial concentration is varied over scales s in [1e-2, 1e2] to stress
    the direction in which the bound could degenerate.  The empirical C is
    the smallest constant consistent with the samples; the asymptotic check
    requires the deficit ratio (kinetic/4 - I)/kinetic to be nonpositive on
    the largest-kinetic decile.
    """
    if n_samples < 10:
        raise ValueError(f"need >= 10 samples, got {n_samples}")
    rng = np.random.default_rng(rng_seed)
    scales = np.logspace(-2, 2, n_samples)
    deficits = []
    kinetics = []
    for i in range(n_samples):
        u = random_smooth_field(grid, rng)
        s = scales[i]
        if s != 1.0:
            u = rescale_s(u, s)
        mass_target = rng.uniform(0.2, 1.0) * m
        try:
            u = normalize_mass(u, mass_target)
        except Exception:
            continue
        rep = energy(u, spec)
        deficits.append(0.25 * rep.kinetic - rep.energy)
        kinetics.append(rep.kinetic)
    deficits = np.array(deficits)
    kinetics = np.array(kinetics)
    C_emp = float(max(deficits.max(), 0.0))
    order = np.argsort(kinetics)
    top = order[-max(1, len(order) // 10):]
    ratios = deficits[top] / kinetics[top]
    return CoercivityReport(
        n_samples=len(deficits),
        empirical_C=C_emp,
        worst_violation=float(np.max(deficits - C_emp)),
        top_decile_max_ratio=float(np.max(ratios)),
        finite=bool(np.max(ratios) <= 0.0),
    )
