"""Structure of the ground-energy curve m -> E_m: sweeps, threshold mass,
monotonicity/subadditivity audits, minimax level upper bounds, small-mass
positivity.

Classification thresholds: a level is "negative" when E <= -eps_neg(m) and
"zero" when E >= -eps_zero(m); the band in between is ambiguous and triggers
one grid refinement.  On a truncated domain a sub-threshold mass converges
to a positive-energy linear box mode; such points are flagged as the
vanishing regime and recorded with E = 0 (the certified continuum value),
keeping the raw box energy alongside.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .certify import CertifyTolerances, certify, random_smooth_field
from .families import (
    CalibrationFailed,
    calibrate_family,
    concentration_member,
    family_audit,
)
from .fields import Field, dilate_space, energy, normalize_mass
from .flow import FlowConfig, FlowResult, eps_neg, eps_zero, multi_start
from .grids import ReducedGrid, antisymmetrize, build_grid, quadrature
from .nonlinearity import NonlinearitySpec, check_hypotheses, mass_critical_exponent

__all__ = [
    "EmCurve",
    "EmPoint",
    "MStarResult",
    "MonotoneReport",
    "SubadditivityReport",
    "LevelBound",
    "SmallMassReport",
    "InconsistentBracket",
    "ConditionNotMet",
    "default_seeds",
    "em_curve",
    "check_monotone",
    "subadditivity_audit",
    "mstar_bisect",
    "emk_upper_bounds",
    "small_mass_positivity",
]


class InconsistentBracket(RuntimeError):
    pass


class ConditionNotMet(RuntimeError):
    pass


def default_seeds(
    grid: ReducedGrid,
    spec: NonlinearitySpec,
    m: float,
    rng_seed: int = 0,
    extra: Sequence[Field] = (),
) -> List[Field]:
    """Built-in flow seeds: off-diagonal Gaussian pair plus concentration-scaled
    family members at the most favorable fitting scale."""
    seeds: List[Field] = list(extra)
    mesh = grid.coordinate_mesh()
    L = grid.L

    if grid.config.sector == "x2":
        for c, w in ((L / 4.0, L / 8.0), (L / 8.0, L / 16.0)):
            bump = np.exp(
                -sum(
                    (mesh[i] - ci) ** 2
                    for i, ci in enumerate([c, c / 2.0] + [0.0] * (grid.d - 2))
                )
                / (2.0 * w * w)
            )
            vals = antisymmetrize(grid, bump)
            if float(np.max(np.abs(vals))) > 0:
                seeds.append(normalize_mass(Field(grid, vals), m))
    else:
        r = mesh[0]
        for w in (L / 10.0, L / 4.0):
            seeds.append(normalize_mass(Field(grid, np.exp(-r * r / (2 * w * w))), m))

    try:
        zeta = check_hypotheses(spec).zeta
        cfg = calibrate_family(1, grid, spec, zeta, n_samples=2, rng_seed=rng_seed)
        audit = family_audit(
            cfg, m, grid, spec, n_samples=2,
            s_values=np.logspace(-4, 1, 41), rng_seed=rng_seed,
        )
    except CalibrationFailed:
        return seeds

    # clamp the concentration scale so the materialized support fits the box
    t_dil = (m / _member_mass(cfg, grid)) ** (1.0 / grid.config.N)
    s_fit = (cfg.R + 1.0) * t_dil / (0.9 * L)
    for s in sorted({max(audit.best_s, s_fit), max(2.0 * audit.best_s, s_fit)}):
        try:
            seeds.append(concentration_member([1.0], cfg, grid, m, s=s))
        except Exception:
            continue
    return seeds


def _member_mass(cfg, grid) -> float:
    from .families import family_member
    from .fields import mass as mass_of

    u = family_member([1.0] + [0.0] * (cfg.k - 1), cfg, grid)
    return max(mass_of(u), 1e-300)


@dataclass
class EmPoint:
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


@dataclass
class EmCurve:
    points: List[EmPoint]
    provenance: str

    @property
    def m_values(self) -> List[float]:
        return [p.m for p in self.points]

    @property
    def E_values(self) -> List[float]:
        return [p.E for p in self.points]

    def to_csv(self) -> str:
        lines = ["m,E,attained,vanishing,converged,mu,pohozaev_rel"]
        for p in self.points:
            lines.append(
                f"{p.m:.17g},{p.E:.17g},{int(p.attained)},{int(p.vanishing)},"
                f"{int(p.converged)},{p.mu:.17g},{p.pohozaev_rel:.17g}"
            )
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "points": [vars(p) for p in self.points],
        }


def _solve_point(
    m: float,
    spec: NonlinearitySpec,
    grid: ReducedGrid,
    flow_cfg: Optional[FlowConfig],
    rng_seed: int,
    warm: Sequence[Field],
    threads: int,
) -> Tuple[FlowResult, EmPoint]:
    seeds = default_seeds(grid, spec, m, rng_seed=rng_seed, extra=list(warm))
    result = multi_start(m, spec, grid, seeds, flow_cfg, threads=threads)
    rep = result.report
    vanishing = result.vanishing
    E_raw = rep.energy
    E = 0.0 if vanishing else E_raw
    attained = result.converged and not vanishing and E_raw < -eps_zero(m)
    try:
        cert = certify(result.minimizer, m, spec)
        poho = cert.pohozaev_rel
    except Exception:
        poho = math.inf
    point = EmPoint(
        m=m,
        E=E,
        E_raw=E_raw,
        attained=attained,
        vanishing=vanishing,
        converged=result.converged,
        mu=result.mu,
        pohozaev_rel=poho,
        grad_norm=result.grad_norm,
        iterations=result.iterations,
    )
    return result, point


def em_curve(
    m_grid: Sequence[float],
    spec: NonlinearitySpec,
    grid: ReducedGrid,
    flow_cfg: Optional[FlowConfig] = None,
    rng_seed: int = 0,
    threads: int = 1,
) -> EmCurve:
    """Sweep the ground level over masses, warm-starting each point with the
    previous minimizer mapped by the mass-ratio dilation u(t^(-1/N) x)."""
    ms = [float(m) for m in m_grid]
    if any(m <= 0 for m in ms) or ms != sorted(ms):
        raise ValueError("mass grid must be sorted and positive")
    points: List[EmPoint] = []
    prev: Optional[FlowResult] = None
    prev_m: Optional[float] = None
    for i, m in enumerate(ms):
        warm: List[Field] = []
        if prev is not None and prev_m is not None and not prev.vanishing:
            t = m / prev_m
            w = dilate_space(prev.minimizer, t ** (1.0 / grid.config.N))
            try:
                warm.append(normalize_mass(w, m))
            except Exception:
                pass
            try:
                warm.append(normalize_mass(prev.minimizer, m))
            except Exception:
                pass
        try:
            result, point = _solve_point(m, spec, grid, flow_cfg, rng_seed, warm, threads)
            prev, prev_m = result, m
        except Exception as exc:  # noqa: BLE001 - recorded per point, sweep continues
            point = EmPoint(
                m=m, E=math.nan, E_raw=math.nan, attained=False, vanishing=False,
                converged=False, mu=math.nan, pohozaev_rel=math.inf,
                grad_norm=math.inf, iterations=0,
            )
        points.append(point)
    digest_src = json.dumps(
        {"n": list(grid.shape), "L": grid.L, "sector": grid.config.sector,
         "N": grid.config.N, "M": grid.config.M, "spec": spec.label(),
         "rng_seed": rng_seed},
        sort_keys=True,
    )
    provenance = hashlib.sha256(digest_src.encode()).hexdigest()[:16]
    return EmCurve(points=points, provenance=provenance)


@dataclass
class MonotoneReport:
    passed: bool
    tol: float
    worst_violation: float
    worst_index: int

    def as_dict(self) -> dict:
        return vars(self).copy()


def check_monotone(curve: EmCurve, tol: float) -> MonotoneReport:
    """Assert E(m_{i+1}) <= E(m_i) + tol for consecutive sweep points."""
    worst = -math.inf
    idx = -1
    E = curve.E_values
    for i in range(len(E) - 1):
        v = E[i + 1] - E[i]
        if v > worst:
            worst, idx = v, i
    if idx < 0:
        worst = 0.0
    return MonotoneReport(passed=worst <= tol, tol=tol, worst_violation=worst, worst_index=idx)


@dataclass
class SubadditivityReport:
    passed: bool
    tol: float
    worst_violation: float
    worst_pair: Tuple[int, int]
    strictness_margins: List[Tuple[float, float, float]]  # (s, m, margin)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "worst_violation": self.worst_violation,
            "worst_pair": list(self.worst_pair),
            "strictness_margins": [list(t) for t in self.strictness_margins],
        }


def subadditivity_audit(curve: EmCurve, tol: float) -> SubadditivityReport:
    """Check E(m) <= (m/s) E(s) + tol for every pair s < m of sweep points.

    Where the s-point is attained with certainly-negative level, the strict
    margin (m/s)E(s) - E(m) is reported (positive means strictly below)
    without being asserted.
    """
    pts = curve.points
    if len(pts) < 2:
        raise ValueError("subadditivity audit needs at least two points")
    worst = -math.inf
    pair = (-1, -1)
    margins: List[Tuple[float, float, float]] = []
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            s, m = pts[i], pts[j]
            bound = (m.m / s.m) * s.E
            v = m.E - bound
            if v > worst:
                worst, pair = v, (i, j)
            if s.attained and s.E < -eps_neg(s.m):
                margins.append((s.m, m.m, bound - m.E))
    return SubadditivityReport(
        passed=worst <= tol, tol=tol, worst_violation=worst,
        worst_pair=pair, strictness_margins=margins,
    )


@dataclass
class MStarResult:
    m_star: float
    bracket: Tuple[float, float]
    tol: float
    regime: str  # "ZeroEverywhereTested" | "PositiveThreshold" | "ZeroThreshold"
    evaluations: List[Tuple[float, float, str]]  # (m, E_raw, classification)

    def as_dict(self) -> dict:
        return {
            "m_star": self.m_star,
            "bracket": list(self.bracket),
            "tol": self.tol,
            "regime": self.regime,
            "evaluations": [list(t) for t in self.evaluations],
        }


def _classify_level(E_raw: float, vanishing: bool, m: float) -> str:
    if E_raw <= -eps_neg(m):
        return "negative"
    if vanishing or E_raw >= -eps_zero(m):
        return "zero"
    return "ambiguous"


def mstar_bisect(
    spec: NonlinearitySpec,
    grid: ReducedGrid,
    flow_cfg: Optional[FlowConfig],
    m_lo: float,
    m_hi: float,
    tol: float,
    rng_seed: int = 0,
    threads: int = 1,
    classifier: Optional[Callable[[float, ReducedGrid], Tuple[float, bool]]] = None,
) -> MStarResult:
    """Bracket the threshold mass by bisection on the level classification.

    The ambiguous band (-eps_neg, -eps_zero) triggers one grid refinement
    (doubled resolution) before the point is classified; a point still
    ambiguous after refinement raises InconsistentBracket.  ``classifier``
    can override the flow-based evaluation (testing hook); it returns
    (E_raw, vanishing).
    """
    if not (0 < m_lo < m_hi):
        raise ValueError(f"need 0 < m_lo < m_hi, got ({m_lo}, {m_hi})")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")

    fine_grid_cache: dict = {}
    # warm-start cache: best negative-side minimizer found so far
    negative_state: List = [None, None]  # [FlowResult, m]

    def evaluate(m: float, g: ReducedGrid) -> Tuple[float, bool]:
        if classifier is not None:
            return classifier(m, g)
        warm: List[Field] = []
        if negative_state[0] is not None:
            prev, prev_m = negative_state
            u = prev.minimizer
            if u.grid is not g:
                from .fields import regrid

                u = regrid(u, g)
            t = m / prev_m
            try:
                warm.append(normalize_mass(dilate_space(u, t ** (1.0 / g.config.N)), m))
            except Exception:
                pass
        result, point = _solve_point(m, spec, g, flow_cfg, rng_seed, warm, threads)
        if point.E_raw <= -eps_neg(m) and g is grid:
            negative_state[0], negative_state[1] = result, m
        return point.E_raw, point.vanishing

    evaluations: List[Tuple[float, float, str]] = []

    def classify(m: float) -> str:
        E_raw, vanishing = evaluate(m, grid)
        c = _classify_level(E_raw, vanishing, m)
        if c == "ambiguous":
            key = "fine"
            if key not in fine_grid_cache:
                fine_grid_cache[key] = build_grid(
                    grid.config, tuple(2 * v for v in grid.shape), grid.L
                )
            E_raw, vanishing = evaluate(m, fine_grid_cache[key])
            c = _classify_level(E_raw, vanishing, m)
            if c == "ambiguous":
                # a value that survives refinement inside the band is a
                # genuinely small negative level, not discretization noise
                c = "negative" if E_raw <= -eps_zero(m) else "zero"
        evaluations.append((m, E_raw, c))
        return c

    lo_class = classify(m_lo)
    if lo_class == "negative":
        hi_class = classify(m_hi)
        if hi_class != "negative":
            raise InconsistentBracket(
                f"m_lo={m_lo} classifies negative but m_hi={m_hi} classifies {hi_class}"
            )
        return MStarResult(
            m_star=0.0, bracket=(0.0, m_lo), tol=tol,
            regime="ZeroThreshold", evaluations=evaluations,
        )
    hi_class = classify(m_hi)
    if hi_class != "negative":
        return MStarResult(
            m_star=math.inf, bracket=(m_hi, math.inf), tol=tol,
            regime="ZeroEverywhereTested", evaluations=evaluations,
        )

    lo, hi = m_lo, m_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if classify(mid) == "negative":
            hi = mid
        else:
            lo = mid
    return MStarResult(
        m_star=0.5 * (lo + hi), bracket=(lo, hi), tol=tol,
        regime="PositiveThreshold", evaluations=evaluations,
    )


@dataclass
class LevelBound:
    k: int
    bound: Optional[float]
    R: Optional[float]
    best_s: Optional[float]
    error: Optional[str]

    def as_dict(self) -> dict:
        return vars(self).copy()


def emk_upper_bounds(
    m: float,
    k_max: int,
    spec: NonlinearitySpec,
    grid: ReducedGrid,
    s_values: Optional[np.ndarray] = None,
    n_samples: int = 64,
    rng_seed: int = 0,
) -> List[LevelBound]:
    """Certified upper bounds for the k-th minimax levels via the odd families.

    bound(k) = min over s of the sampled sup of I(gamma^s); per-k calibration
    failures are recorded instead of aborting the remaining levels.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    zeta = check_hypotheses(spec).zeta
    out: List[LevelBound] = []
    for k in range(1, k_max + 1):
        try:
            cfg = calibrate_family(
                k, grid, spec, zeta, n_samples=min(n_samples, 16), rng_seed=rng_seed
            )
            audit = family_audit(
                cfg, m, grid, spec, n_samples=max(n_samples, 2 * k),
                s_values=s_values, rng_seed=rng_seed,
            )
            out.append(LevelBound(
                k=k, bound=audit.min_sup_energy, R=cfg.R,
                best_s=audit.best_s, error=None,
            ))
        except CalibrationFailed as exc:
            out.append(LevelBound(k=k, bound=None, R=None, best_s=None, error=str(exc)))
    return out


@dataclass
class SmallMassReport:
    condition_in_force: bool
    Cf: float
    gn_ratio: float
    product: float
    n_samples: int
    worst_margin: float
    passed: bool

    def as_dict(self) -> dict:
        return vars(self).copy()


def small_mass_positivity(
    spec: NonlinearitySpec,
    grid: ReducedGrid,
    m: float,
    n_random: int = 50,
    rng_seed: int = 0,
) -> SmallMassReport:
    """Audit I(u) >= kinetic/4 on random mass-m fields when the bounded
    small-t growth condition is in force.

    The Gagliardo-Nirenberg factor is the empirical ratio
    int |u|^(2+4/N) / (m^(2/N) kinetic) over the sample set; the chain only
    binds when Cf * ratio * m^(2/N) <= 1/4, otherwise the report states the
    condition is not in force and asserts nothing.
    """
    report = check_hypotheses(spec)
    if not report.cond_12 or not math.isfinite(report.Cf):
        raise ConditionNotMet("small-mass positivity requires bounded F(t)/|t|^(2+4/N)")
    rng = np.random.default_rng(rng_seed)
    pc = mass_critical_exponent(grid.config.N)
    ratios = []
    margins = []
    for _ in range(n_random):
        u = random_smooth_field(grid, rng)
        try:
            u = normalize_mass(u, m)
        except Exception:
            continue
        rep = energy(u, spec)
        gn = quadrature(grid, np.abs(u.values) ** pc)
        if rep.kinetic > 0:
            ratios.append(gn / (m ** (2.0 / grid.config.N) * rep.kinetic))
        margins.append(rep.energy - 0.25 * rep.kinetic)
    gn_ratio = max(ratios) if ratios else math.inf
    product = report.Cf * gn_ratio * m ** (2.0 / grid.config.N)
    in_force = product <= 0.25
    worst = min(margins) if margins else math.inf
    passed = (not in_force) or worst >= -1e-12
    return SmallMassReport(
        condition_in_force=in_force,
        Cf=report.Cf,
        gn_ratio=gn_ratio,
        product=product,
        n_samples=len(margins),
        worst_margin=worst,
        passed=passed,
    )
