"""Mass-constrained energy minimization by projected gradient descent.

One step: gradient of the energy projected onto the tangent space of the
mass sphere (the projection coefficient is the multiplier estimate
mu = (int f(u)u - int |grad u|^2)/m), explicit update with backtracking
line search, re-antisymmetrization in the block-swap sector, then exact
mass rescaling.  The energy never increases beyond the stagnation
tolerance; convergence is declared on the weighted-L2 norm of the tangent
gradient.

On a truncated domain a sub-threshold mass cannot spread to infinity, so
the flow instead converges to an essentially linear box mode (negligible
nonlinear potential, negative multiplier).  That state is classified as the
vanishing regime: the non-attainment signature for the continuum problem.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .fields import Field, EnergyReport, ZeroField, energy_of_values, l2_gradient_values
from .grids import ReducedGrid, antisymmetrize, quadrature
from .nonlinearity import NonlinearitySpec, check_hypotheses

__all__ = [
    "FlowConfig",
    "FlowResult",
    "NotConverged",
    "AllFailed",
    "minimize",
    "multi_start",
    "eps_zero",
    "eps_neg",
]


class NotConverged(RuntimeError):
    pass


class AllFailed(RuntimeError):
    pass


def eps_zero(m: float) -> float:
    """Dead-band below which a level is classified as numerically zero."""
    return 1e-5 * max(1.0, m)


def eps_neg(m: float) -> float:
    """Threshold below which a level is classified as certainly negative."""
    return 1e-3 * max(1.0, m)


@dataclass
class FlowConfig:
    """Projected-gradient parameters; None fields are derived from grid/mass."""

    dt0: Optional[float] = None          # default 0.1 * min(h)^2
    backtrack: float = 0.5
    tol_grad: Optional[float] = None     # default 1e-6 * m
    tol_energy: float = 1e-12
    max_iter: int = 200_000
    record_history: bool = False
    grow: float = 1.25
    dt_cap_factor: float = 1e5
    max_backtracks: int = 45
    stall_limit: int = 400               # stagnation-accepted steps before giving up
    vanish_kinetic: float = 1e-8
    vanish_window: int = 100

    def __post_init__(self):
        if self.dt0 is not None and not self.dt0 > 0:
            raise ValueError(f"dt0 must be > 0, got {self.dt0}")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError(f"backtrack factor must lie in (0,1), got {self.backtrack}")
        if self.tol_grad is not None and not self.tol_grad > 0:
            raise ValueError(f"tol_grad must be > 0, got {self.tol_grad}")
        if not self.tol_energy > 0:
            raise ValueError(f"tol_energy must be > 0, got {self.tol_energy}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class FlowResult:
    minimizer: Field
    report: EnergyReport
    converged: bool
    iterations: int
    mu: float
    grad_norm: float
    vanishing: bool
    stop_reason: str
    history: Optional[List[Tuple[int, float, float]]] = field(default=None)

    @property
    def energy(self) -> float:
        return self.report.energy


def _is_linear_regime(rep: EnergyReport, m: float) -> bool:
    """Post-convergence vanishing signature: nonlinearity inactive, mu <= 0."""
    if rep.energy <= -eps_neg(m):
        return False
    weak_potential = abs(rep.potential) <= 0.05 * 0.5 * rep.kinetic + 1e-300
    return rep.mu <= 0.0 or weak_potential


def minimize(
    u0: Field,
    m: float,
    spec: NonlinearitySpec,
    config: Optional[FlowConfig] = None,
) -> FlowResult:
    """Drive u0 to a constrained critical point on the mass-m sphere.

    Returns the best iterate with converged=False when the gradient
    tolerance is not reached (never raises for non-convergence).
    """
    if config is None:
        config = FlowConfig()
    check_hypotheses(spec).require()
    grid = u0.grid
    if grid.config.N != spec.N:
        raise ValueError(f"grid dimension N={grid.config.N} != spec N={spec.N}")
    if not m > 0:
        raise ValueError(f"target mass must be > 0, got {m}")
    is_x2 = grid.config.sector == "x2"
    W = grid.weight

    v = u0.values
    if is_x2:
        v = antisymmetrize(grid, v)
    mm = float(np.sum(W * v * v))
    if mm <= 0.0:
        raise ZeroField("initial field vanishes (after sector projection)")
    v = v * math.sqrt(m / mm)

    dt0 = config.dt0 if config.dt0 is not None else 0.1 * min(grid.h) ** 2
    dt_cap = dt0 * config.dt_cap_factor
    tol_grad = config.tol_grad if config.tol_grad is not None else 1e-6 * m
    rep = energy_of_values(grid, v, spec)

    history: Optional[List[Tuple[int, float, float]]] = [] if config.record_history else None
    dt = dt0
    gnorm = math.inf
    converged = False
    stop_reason = "max_iter"
    stall = 0
    vanish_run = 0
    vanish_tol = eps_zero(m)
    iterations = 0

    for it in range(1, config.max_iter + 1):
        iterations = it
        gtan = l2_gradient_values(grid, v, spec) + rep.mu * v
        gnorm = math.sqrt(max(float(np.sum(W * gtan * gtan)), 0.0))
        if history is not None:
            history.append((it - 1, rep.energy, gnorm))
        if gnorm <= tol_grad:
            converged = True
            stop_reason = "converged"
            break

        accepted = False
        stalled_step = False
        trial = None
        trep = None
        for _ in range(config.max_backtracks):
            cand = v - dt * gtan
            if is_x2:
                cand = antisymmetrize(grid, cand)
            tm = float(np.sum(W * cand * cand))
            if tm <= 0.0:
                dt *= config.backtrack
                continue
            cand *= math.sqrt(m / tm)
            crep = energy_of_values(grid, cand, spec)
            trial, trep = cand, crep
            if crep.energy <= rep.energy - 1e-4 * dt * gnorm * gnorm:
                accepted = True
                break
            dt *= config.backtrack
        if not accepted:
            # line search exhausted: allow a stagnation step, else stop
            if trep is not None and trep.energy <= rep.energy + config.tol_energy:
                accepted = True
                stalled_step = True
            else:
                stop_reason = "linesearch_failed"
                break
        v, rep = trial, trep
        dt = min(dt * config.grow, dt_cap)

        stall = stall + 1 if stalled_step else 0
        if stall >= config.stall_limit:
            stop_reason = "stalled"
            break

        if rep.kinetic < config.vanish_kinetic and abs(rep.energy) < vanish_tol:
            vanish_run += 1
            if vanish_run >= config.vanish_window:
                stop_reason = "vanishing"
                break
        else:
            vanish_run = 0

    if converged:
        gtan = l2_gradient_values(grid, v, spec) + rep.mu * v
        gnorm = math.sqrt(max(float(np.sum(W * gtan * gtan)), 0.0))

    vanishing = stop_reason == "vanishing" or _is_linear_regime(rep, m)
    return FlowResult(
        minimizer=Field(grid, v),
        report=rep,
        converged=converged,
        iterations=iterations,
        mu=rep.mu,
        grad_norm=gnorm,
        vanishing=vanishing,
        stop_reason=stop_reason,
        history=history,
    )


def multi_start(
    m: float,
    spec: NonlinearitySpec,
    grid: ReducedGrid,
    seeds: Sequence[Field],
    config: Optional[FlowConfig] = None,
    threads: int = 1,
) -> FlowResult:
    """Run minimize from every seed; return the lowest certified energy.

    Ties are broken by the smaller tangent-gradient norm.  Raises AllFailed
    only if every run raised; per-seed errors otherwise just drop that seed.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("multi_start needs at least one seed")
    for s in seeds:
        if s.grid is not grid and s.grid.describe() != grid.describe():
            raise ValueError("seed grid does not match the target grid")

    def run(seed: Field) -> FlowResult:
        return minimize(seed, m, spec, config)

    results: List[Optional[FlowResult]] = [None] * len(seeds)
    errors: List[Exception] = []
    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(run, s) for s in seeds]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - collected and re-raised
                    errors.append(exc)
    else:
        for i, s in enumerate(seeds):
            try:
                results[i] = run(s)
            except Exception as exc:  # noqa: BLE001
                errors.append(exc)

    good = [r for r in results if r is not None]
    if not good:
        raise AllFailed(f"every flow run failed: {errors}")
    return min(good, key=lambda r: (r.report.energy, r.grad_norm))
