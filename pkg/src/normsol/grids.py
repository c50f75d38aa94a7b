"""Reduced computational domains for the block-radial symmetry sectors.

An O(M) x O(M) x O(N-2M) invariant function of R^N depends only on the
block radii (r1, r2, r3); integrals reduce to 2-3 radial variables against
the measure omega * r1^(M-1) r2^(M-1) r3^(N-2M-1), where omega collects the
sphere surface areas.  The fully radial sector reduces to one variable with
weight omega_{N-1} r^(N-1).

Grids are uniform tensor products on [0, L]^d.  Node quadrature weights use
the end-corrected trapezoid rule (third-order Gregory corrections), which is
exact for cubics; the kinetic term uses per-cell midpoint weights.  Nodes on
a singular axis (radial exponent >= 1) carry weight exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "SymmetryConfig",
    "ReducedGrid",
    "RadialProfile",
    "InvalidConfig",
    "ShapeMismatch",
    "SectorMismatch",
    "build_grid",
    "quadrature",
    "antisymmetrize",
    "symmetry_residual",
    "radial_profile",
    "sphere_surface_area",
]


class InvalidConfig(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


class SectorMismatch(ValueError):
    pass


def sphere_surface_area(l: int) -> float:
    """Surface area of the unit l-sphere S^l embedded in R^(l+1)."""
    if l < 0:
        raise ValueError(f"sphere dimension must be >= 0, got {l}")
    return 2.0 * math.pi ** ((l + 1) / 2.0) / math.gamma((l + 1) / 2.0)


@dataclass(frozen=True)
class SymmetryConfig:
    """Symmetry sector selection: block-antisymmetric ("x2") or fully radial."""

    sector: str  # "x2" | "radial"
    N: int
    M: Optional[int] = None

    def __post_init__(self):
        if self.sector == "x2":
            if self.M is None:
                raise InvalidConfig("x2 sector requires the block dimension M")
            if self.N < 4 or self.M < 2 or 2 * self.M > self.N:
                raise InvalidConfig(
                    f"x2 sector requires N >= 4, M >= 2 and 2M <= N; "
                    f"got N={self.N}, M={self.M}"
                )
        elif self.sector == "radial":
            if self.N < 2:
                raise InvalidConfig(f"radial sector requires N >= 2, got N={self.N}")
        else:
            raise InvalidConfig(f"unknown sector {self.sector!r}")

    @property
    def reduced_dim(self) -> int:
        if self.sector == "radial":
            return 1
        return 2 if self.N == 2 * self.M else 3

    @property
    def exponents(self) -> Tuple[int, ...]:
        if self.sector == "radial":
            return (self.N - 1,)
        if self.N == 2 * self.M:
            return (self.M - 1, self.M - 1)
        return (self.M - 1, self.M - 1, self.N - 2 * self.M - 1)

    @property
    def omega(self) -> float:
        if self.sector == "radial":
            return sphere_surface_area(self.N - 1)
        w = sphere_surface_area(self.M - 1) ** 2
        if self.N != 2 * self.M:
            w *= sphere_surface_area(self.N - 2 * self.M - 1)
        return w


def _gregory_corrections(n: int) -> np.ndarray:
    """End-corrected trapezoid coefficients [3/8, 7/6, 23/24, 1, ...]."""
    if n < 7:
        raise InvalidConfig(f"need at least 7 nodes per axis, got {n}")
    c = np.ones(n)
    c[[0, 1, 2]] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0]
    c[[-1, -2, -3]] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0]
    return c


class ReducedGrid:
    """Immutable uniform tensor grid with precomputed reduced-measure weights.

    Attributes:
        config: the symmetry sector this grid discretizes.
        shape: points per axis.
        L: truncation radius (same for every axis).
        h: spacing per axis.
        axes: 1D coordinate arrays.
        weight: full node quadrature weight array (zero on singular axes).
        wmid: per-axis cell-midpoint weight arrays for the kinetic term.
        singular: per-axis flag, True when the radial exponent is >= 1.
    """

    def __init__(self, config: SymmetryConfig, n: Sequence[int], L: float):
        d = config.reduced_dim
        n = tuple(int(v) for v in n)
        if len(n) != d:
            raise InvalidConfig(f"sector needs {d} axis sizes, got {len(n)}")
        if any(v < 16 for v in n):
            raise InvalidConfig(f"need >= 16 points per axis, got {n}")
        if not L > 0:
            raise InvalidConfig(f"domain radius L must be > 0, got {L}")
        if config.sector == "x2" and n[0] != n[1]:
            raise InvalidConfig("x2 sector requires n1 == n2 for the block swap")

        self.config = config
        self.shape = n
        self.L = float(L)
        self.d = d
        self.exponents = config.exponents
        self.omega = config.omega
        self.h = tuple(self.L / (v - 1) for v in n)
        self.axes = tuple(np.linspace(0.0, self.L, v) for v in n)
        self.singular = tuple(a >= 1 for a in self.exponents)

        # Per-axis node weight vectors; omega is folded into the first axis.
        node_vecs = []
        for i in range(d):
            g = self.axes[i] ** self.exponents[i] * self.h[i] * _gregory_corrections(n[i])
            node_vecs.append(g)
        node_vecs[0] = node_vecs[0] * self.omega
        self._node_vecs = tuple(node_vecs)

        self.weight = node_vecs[0].copy()
        for g in node_vecs[1:]:
            self.weight = np.multiply.outer(self.weight, g)
        self.weight_safe = np.where(self.weight > 0.0, self.weight, 1.0)

        # Cell-midpoint weights along each axis, node weights along the rest.
        wmid = []
        for i in range(d):
            mids = 0.5 * (self.axes[i][1:] + self.axes[i][:-1])
            gm = mids ** self.exponents[i] * self.h[i]
            vecs = list(node_vecs)
            vecs[i] = gm if i > 0 else gm * self.omega
            if i == 0:
                vecs[0] = gm * self.omega
            w = vecs[0].copy()
            for g in vecs[1:]:
                w = np.multiply.outer(w, g)
            wmid.append(w)
        self.wmid = tuple(wmid)

        mesh = np.meshgrid(*self.axes, indexing="ij")
        self.radius = np.sqrt(sum(c * c for c in mesh))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def coordinate_mesh(self) -> Tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    def check_shape(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape != self.shape:
            raise ShapeMismatch(f"values shape {values.shape} != grid shape {self.shape}")
        return values

    def describe(self) -> dict:
        return {
            "sector": self.config.sector,
            "N": self.config.N,
            "M": self.config.M,
            "n": list(self.shape),
            "L": self.L,
        }


def build_grid(
    config: SymmetryConfig,
    n_per_axis: Union[int, Sequence[int]],
    L: float,
) -> ReducedGrid:
    """Materialize the reduced grid for a sector; see ReducedGrid."""
    if isinstance(n_per_axis, int):
        n = (n_per_axis,) * config.reduced_dim
    else:
        n = tuple(n_per_axis)
    return ReducedGrid(config, n, L)


def quadrature(grid: ReducedGrid, values: np.ndarray) -> float:
    """Weighted sum approximating the integral of the symmetric lift over R^N."""
    values = grid.check_shape(values)
    return float(np.sum(grid.weight * values))


def antisymmetrize(grid: ReducedGrid, values: np.ndarray) -> np.ndarray:
    """Project onto the block-swap antisymmetric class: (u - u o swap)/2."""
    if grid.config.sector != "x2":
        raise SectorMismatch("antisymmetrization requires the x2 sector")
    values = grid.check_shape(values)
    return 0.5 * (values - np.swapaxes(values, 0, 1))


def symmetry_residual(grid: ReducedGrid, values: np.ndarray) -> float:
    """Weighted L2 distance to the antisymmetric class (norm of the even part)."""
    if grid.config.sector != "x2":
        raise SectorMismatch("symmetry residual requires the x2 sector")
    values = grid.check_shape(values)
    even = 0.5 * (values + np.swapaxes(values, 0, 1))
    return math.sqrt(max(float(np.sum(grid.weight * even * even)), 0.0))


@dataclass(frozen=True)
class RadialProfile:
    r: np.ndarray
    values: np.ndarray
    deviation: float


def radial_profile(grid: ReducedGrid, values: np.ndarray, bin_factor: float = 0.5) -> RadialProfile:
    """Spherical average of the lifted function over shells r = |x|.

    Bins grid nodes by the lifted radius with width bin_factor * min(h),
    weighting by the quadrature measure, and reports the weighted relative
    L2 deviation of the field from its own radial average.  Antisymmetric
    fields average to zero on every shell, so any nonzero one deviates by 1.
    """
    if grid.config.sector != "x2":
        raise SectorMismatch("radial profile requires the x2 sector")
    values = grid.check_shape(values)
    width = bin_factor * min(grid.h)
    idx = np.floor(grid.radius / width).astype(np.int64)
    nbins = int(idx.max()) + 1
    flat_idx = idx.ravel()
    w = grid.weight.ravel()
    wsum = np.bincount(flat_idx, weights=w, minlength=nbins)
    uwsum = np.bincount(flat_idx, weights=w * values.ravel(), minlength=nbins)
    profile = np.divide(uwsum, wsum, out=np.zeros_like(uwsum), where=wsum > 0)
    lifted = profile[idx]
    norm_u = math.sqrt(max(float(np.sum(grid.weight * values * values)), 0.0))
    if norm_u == 0.0:
        return RadialProfile(r=(np.arange(nbins) + 0.5) * width, values=profile, deviation=0.0)
    diff = values - lifted
    dev = math.sqrt(max(float(np.sum(grid.weight * diff * diff)), 0.0)) / norm_u
    return RadialProfile(r=(np.arange(nbins) + 0.5) * width, values=profile, deviation=dev)
