"""Fully radial sector: 1D reduced minimization and radial test families.

Works for any N >= 2 on the weight omega_{N-1} r^(N-1).  The same flow,
certification and family machinery applies; members carry no odd switch, so
their sup-norm bound is the plateau amplitude itself.  Doubles as a cheap
cross-check for the 2D/3D block-radial operators: a radial profile lifted to
the block grid must reproduce mass, kinetic and potential.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .families import FamilyAudit, TestMapConfig, calibrate_family, family_audit
from .fields import Field
from .flow import FlowConfig, FlowResult, multi_start
from .grids import ReducedGrid, SymmetryConfig, build_grid
from .nonlinearity import NonlinearitySpec, check_hypotheses
from .survey import default_seeds

__all__ = [
    "radial_grid",
    "radial_minimize",
    "radial_testmap_audit",
    "lift_radial_profile",
]


def radial_grid(N: int, n: int, L: float) -> ReducedGrid:
    return build_grid(SymmetryConfig("radial", N), n, L)


def radial_minimize(
    m: float,
    spec: NonlinearitySpec,
    rgrid: ReducedGrid,
    flow_cfg: Optional[FlowConfig] = None,
    rng_seed: int = 0,
    extra_seeds: Sequence[Field] = (),
    threads: int = 1,
) -> FlowResult:
    """Ground-level search in the radial class (k = 1 level)."""
    if rgrid.config.sector != "radial":
        raise ValueError("radial_minimize requires a radial-sector grid")
    seeds = default_seeds(rgrid, spec, m, rng_seed=rng_seed, extra=list(extra_seeds))
    return multi_start(m, spec, rgrid, seeds, flow_cfg, threads=threads)


def radial_testmap_audit(
    k: int,
    m: float,
    spec: NonlinearitySpec,
    rgrid: ReducedGrid,
    n_samples: int = 64,
    s_values: Optional[np.ndarray] = None,
    rng_seed: int = 0,
) -> FamilyAudit:
    """Radial analogue of the family audit (sup-norm bound = zeta, no switch)."""
    if rgrid.config.sector != "radial":
        raise ValueError("radial audit requires a radial-sector grid")
    zeta = check_hypotheses(spec).zeta
    cfg = calibrate_family(k, rgrid, spec, zeta, n_samples=min(n_samples, 16), rng_seed=rng_seed)
    return family_audit(
        cfg, m, rgrid, spec, n_samples=max(n_samples, 2 * k),
        s_values=s_values, rng_seed=rng_seed,
    )


def lift_radial_profile(u1d: Field, grid: ReducedGrid) -> Field:
    """Evaluate a radial profile at the lifted radius of a block-radial grid.

    The lift is swap-symmetric, so it lies outside the antisymmetric class;
    it is used for operator cross-validation only, never as a flow seed.
    """
    rgrid = u1d.grid
    if rgrid.config.sector != "radial":
        raise ValueError("lift requires a radial-sector field")
    vals = np.interp(grid.radius, rgrid.axes[0], u1d.values, right=0.0)
    return Field(grid, vals)
