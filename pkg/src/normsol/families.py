"""Odd test-map families certifying negative energy levels.

The construction follows the plateau recipe: an odd continuous map from the
unit sphere S^(k-1) into the antisymmetric sector, built from k concentric
equal-volume plateau annuli inside a ball of radius R (amplitudes driven by
the components of sigma), multiplied by a smooth odd switch in r1 - r2 to
enforce the block-swap antisymmetry.  The radius R is calibrated so that the
sampled minimum of int F over the family is >= 1; together with the sup-norm
bound this is the family's conformance contract, audited numerically.

From a calibrated member pi[sigma], the mass-m member is its spatial
dilation onto the mass sphere, and the concentration family applies the
mass-preserving rescaling s^(N/2) u(s x).  Energies along the concentration
family are evaluated semi-analytically on the member's own grid:

    I(s) = s^2/2 * t^(N-2) * K_pi  -  (t/s)^N * int F(s^(N/2) pi)

with t = (m / ||pi||^2)^(1/N), avoiding any resampling error for small s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .fields import Field, energy_of_values, kinetic_value, normalize_mass, _resample
from .grids import ReducedGrid, antisymmetrize, quadrature, symmetry_residual
from .nonlinearity import NonlinearitySpec, eval_F

__all__ = [
    "TestMapConfig",
    "FamilySample",
    "FamilyAudit",
    "CalibrationFailed",
    "DomainTooSmall",
    "smooth_sign",
    "plateau_radial",
    "family_member",
    "mass_member",
    "concentration_member",
    "sphere_samples",
    "family_audit",
    "calibrate_family",
]


class CalibrationFailed(RuntimeError):
    pass


class DomainTooSmall(ValueError):
    pass


def smooth_sign(t, ramp: float = 1.0):
    """Odd C^1 switch: cubic ramp t(3*ramp^2 - t^2)/(2*ramp^3), sign(t) beyond."""
    if not ramp > 0:
        raise ValueError(f"ramp width must be > 0, got {ramp}")
    t = np.asarray(t, dtype=float)
    core = t * (3.0 * ramp * ramp - t * t) / (2.0 * ramp ** 3)
    out = np.where(np.abs(t) >= ramp, np.sign(t), core)
    return out if out.ndim else float(out)


def plateau_radial(r, R: float, zeta: float, L: Optional[float] = None):
    """Radial plateau: zeta on [0, R], linear to 0 on [R, R+1], 0 beyond."""
    if L is not None and R + 1.0 >= L:
        raise DomainTooSmall(f"plateau support R+1={R + 1.0} must fit inside L={L}")
    r = np.asarray(r, dtype=float)
    return zeta * np.clip(R + 1.0 - r, 0.0, 1.0)


@dataclass(frozen=True)
class TestMapConfig:
    """Family parameters: sphere dimension k, plateau radius R, amplitude zeta."""

    k: int
    R: float
    zeta: float
    ramp: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.R > 2.0 * (self.k + 1):
            raise ValueError(f"need R > 2(k+1); got R={self.R}, k={self.k}")
        if not self.zeta > 0:
            raise ValueError(f"zeta must be > 0, got {self.zeta}")


@dataclass(frozen=True)
class FamilySample:
    sigma: Tuple[float, ...]
    field: Field


def _annulus_profile(r: np.ndarray, sigma: np.ndarray, cfg: TestMapConfig, N: int) -> np.ndarray:
    """Piecewise-linear radial profile with k equal-volume annuli in B(0, R).

    Annulus i carries amplitude zeta * clip(sqrt(k) * sigma_i, -1, 1): odd and
    continuous in sigma, with at least one annulus at full amplitude since
    max |sigma_i| >= 1/sqrt(k) on the sphere.
    """
    k = cfg.k
    amps = cfg.zeta * np.clip(math.sqrt(k) * sigma, -1.0, 1.0)
    if k == 1:
        knots = [0.0, cfg.R, cfg.R + 1.0]
        vals = [amps[0], amps[0], 0.0]
        return np.interp(r, knots, vals)
    bounds = cfg.R * (np.arange(k + 1) / k) ** (1.0 / N)
    knots: List[float] = [0.0]
    vals: List[float] = [amps[0]]
    for i in range(k):
        lo, hi = bounds[i], bounds[i + 1]
        ramp = min(1.0, 0.5 * (hi - lo))
        knots.extend([hi - ramp, hi])
        nxt = amps[i + 1] if i + 1 < k else amps[k - 1]
        vals.extend([amps[i], nxt])
    knots.append(cfg.R + 1.0)
    vals.append(0.0)
    return np.interp(r, knots, vals)


def family_member(
    sigma: Sequence[float],
    cfg: TestMapConfig,
    grid: ReducedGrid,
) -> Field:
    """Antisymmetric family member: annulus profile times the odd switch.

    In the radial sector the switch is omitted and the member is the plain
    radial profile (sup-norm bound zeta instead of 2*zeta).
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (cfg.k,):
        raise ValueError(f"sigma must lie on S^{cfg.k - 1}, got shape {sigma.shape}")
    if cfg.R + 1.0 >= grid.L:
        raise DomainTooSmall(f"family support R+1={cfg.R + 1.0} exceeds the domain L={grid.L}")
    prof = _annulus_profile(grid.radius, sigma, cfg, grid.config.N)
    if grid.config.sector == "x2":
        mesh = grid.coordinate_mesh()
        vals = prof * smooth_sign(mesh[0] - mesh[1], cfg.ramp)
    else:
        vals = prof
    return Field(grid, vals)


def sphere_samples(k: int, n_samples: int, rng_seed: int = 0) -> np.ndarray:
    """Deterministic sample of S^(k-1) with all +-e_i and antipodal pairs."""
    pts: List[np.ndarray] = []
    eye = np.eye(k)
    for i in range(k):
        pts.append(eye[i])
        pts.append(-eye[i])
    if k >= 2:
        rng = np.random.default_rng(rng_seed)
        extra = max(0, (n_samples - len(pts) + 1) // 2)
        raw = rng.normal(size=(extra, k))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        for v in raw:
            pts.append(v)
            pts.append(-v)
    return np.array(pts[: max(n_samples, 2 * k)])


def calibrate_family(
    k: int,
    grid: ReducedGrid,
    spec: NonlinearitySpec,
    zeta: float,
    n_samples: int = 64,
    ramp: float = 1.0,
    rng_seed: int = 0,
    R_step: float = 0.5,
) -> TestMapConfig:
    """Smallest R with sampled min of int F(member) >= 1; CalibrationFailed if none fits."""
    sigmas = sphere_samples(k, n_samples, rng_seed)
    R = 2.0 * (k + 1) + R_step
    best: Optional[TestMapConfig] = None
    while R + 1.0 < grid.L:
        cfg = TestMapConfig(k=k, R=R, zeta=zeta, ramp=ramp)
        lo = math.inf
        for s in sigmas:
            u = family_member(s, cfg, grid)
            lo = min(lo, quadrature(grid, eval_F(spec, u.values)))
            if lo < 1.0:
                break
        if lo >= 1.0:
            best = cfg
            break
        R += R_step
    if best is None:
        raise CalibrationFailed(
            f"no radius R with int F >= 1 fits in L={grid.L} for k={k} (zeta={zeta})"
        )
    return best


def _member_scalings(u: Field, m: float) -> Tuple[float, float]:
    """(t, ||u||^2) with t the dilation factor mapping the member to mass m."""
    from .fields import mass as mass_of

    M = mass_of(u)
    if M <= 0:
        raise ValueError("family member has zero mass")
    t = (m / M) ** (1.0 / u.grid.config.N)
    return t, M


def mass_member(sigma, cfg: TestMapConfig, grid: ReducedGrid, m: float) -> Field:
    """Family member dilated onto the mass-m sphere (then exactly renormalized)."""
    return concentration_member(sigma, cfg, grid, m, s=1.0)


def concentration_member(
    sigma,
    cfg: TestMapConfig,
    grid: ReducedGrid,
    m: float,
    s: float,
) -> Field:
    """Materialize s^(N/2) * gamma_m(s x) by a single resampling of the member."""
    u = family_member(sigma, cfg, grid)
    t, _ = _member_scalings(u, m)
    N = grid.config.N
    scale = s / t
    vals = s ** (N / 2.0) * _resample(grid, u.values, scale)
    out = Field(grid, vals)
    return normalize_mass(out, m)


def concentration_energy_curve(
    sigma,
    cfg: TestMapConfig,
    grid: ReducedGrid,
    spec: NonlinearitySpec,
    m: float,
    s_values: np.ndarray,
) -> np.ndarray:
    """I(gamma^s[sigma]) for every s, evaluated without resampling."""
    u = family_member(sigma, cfg, grid)
    t, _ = _member_scalings(u, m)
    N = grid.config.N
    K = kinetic_value(grid, u.values)
    out = np.empty(len(s_values))
    for i, s in enumerate(s_values):
        amp = s ** (N / 2.0)
        pot = quadrature(grid, eval_F(spec, amp * u.values))
        out[i] = 0.5 * s * s * t ** (N - 2) * K - (t / s) ** N * pot
    return out


@dataclass
class FamilyAudit:
    """Sampled conformance report for one calibrated family."""

    k: int
    R: float
    zeta: float
    m: float
    n_samples: int
    min_F_integral: float
    max_sup_norm: float
    max_oddness_residual: float
    max_antisym_residual: float
    s_values: List[float]
    sup_energy_per_s: List[float]
    best_s: float
    min_sup_energy: float
    negative_s_exists: bool

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "R": self.R,
            "zeta": self.zeta,
            "m": self.m,
            "n_samples": self.n_samples,
            "min_F_integral": self.min_F_integral,
            "max_sup_norm": self.max_sup_norm,
            "max_oddness_residual": self.max_oddness_residual,
            "max_antisym_residual": self.max_antisym_residual,
            "s_values": self.s_values,
            "sup_energy_per_s": self.sup_energy_per_s,
            "best_s": self.best_s,
            "min_sup_energy": self.min_sup_energy,
            "negative_s_exists": self.negative_s_exists,
        }


def family_audit(
    cfg: TestMapConfig,
    m: float,
    grid: ReducedGrid,
    spec: NonlinearitySpec,
    n_samples: int = 64,
    s_values: Optional[np.ndarray] = None,
    rng_seed: int = 0,
) -> FamilyAudit:
    """Verify the family bounds on a sigma sample and map s -> sup I(gamma^s).

    Oddness is checked nodewise on antipodal pairs; the F-integral and
    sup-norm bounds are those defining the family.  The s-curve gives
    certified upper bounds for the minimax levels.
    """
    if n_samples < 2 * cfg.k:
        raise ValueError(f"need at least 2k={2 * cfg.k} samples, got {n_samples}")
    if s_values is None:
        s_values = np.logspace(-4.0, 1.0, 51)
    sigmas = sphere_samples(cfg.k, n_samples, rng_seed)

    min_F = math.inf
    max_sup = 0.0
    max_odd = 0.0
    max_anti = 0.0
    sup_curve = np.full(len(s_values), -math.inf)
    for sgm in sigmas:
        u = family_member(sgm, cfg, grid)
        v = family_member(-sgm, cfg, grid)
        max_odd = max(max_odd, float(np.max(np.abs(u.values + v.values))))
        min_F = min(min_F, quadrature(grid, eval_F(spec, u.values)))
        max_sup = max(max_sup, float(np.max(np.abs(u.values))))
        if grid.config.sector == "x2":
            max_anti = max(max_anti, symmetry_residual(grid, u.values))
        curve = concentration_energy_curve(sgm, cfg, grid, spec, m, s_values)
        sup_curve = np.maximum(sup_curve, curve)

    i_best = int(np.argmin(sup_curve))
    return FamilyAudit(
        k=cfg.k,
        R=cfg.R,
        zeta=cfg.zeta,
        m=m,
        n_samples=len(sigmas),
        min_F_integral=float(min_F),
        max_sup_norm=float(max_sup),
        max_oddness_residual=float(max_odd),
        max_antisym_residual=float(max_anti),
        s_values=[float(s) for s in s_values],
        sup_energy_per_s=[float(x) for x in sup_curve],
        best_s=float(s_values[i_best]),
        min_sup_energy=float(sup_curve[i_best]),
        negative_s_exists=bool(sup_curve[i_best] < 0.0),
    )
