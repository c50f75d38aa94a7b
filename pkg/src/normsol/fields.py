"""Discretized fields on reduced grids: mass, energy, gradients, rescalings.

Discrete energy convention:

    I_h(u) = 1/2 * sum_ax sum_cells wmid * ((u_{i+1}-u_i)/h)^2  -  sum W * F(u)

evaluated on *canonical* value arrays: the Dirichlet slab at r_i = L is
pinned to zero and nodes on singular axes (quadrature weight zero at r = 0)
are dependent, filled by the even-quadratic extrapolation u(0) = (4u(h) -
u(2h))/3, the discrete form of the regularity condition u'(0) = 0.

``l2_gradient`` is the exact gradient of I_h in the weighted L2 inner
product, obtained by transposing the assembly (difference stencils plus the
extrapolation), so that <l2_gradient(u), v>_w equals the directional
derivative of I_h along v to rounding accuracy.  In the interior it is a
second-order discretization of -Delta_red u - f(u) with Delta_red u =
sum_i [u_rr + (a_i/r_i) u_r].
"""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import map_coordinates

from .grids import ReducedGrid, SymmetryConfig, antisymmetrize, build_grid, quadrature
from .nonlinearity import NonlinearitySpec, eval_F, eval_f

__all__ = [
    "Field",
    "EnergyReport",
    "ZeroField",
    "canonicalize",
    "mass",
    "kinetic",
    "potential",
    "energy",
    "l2_gradient",
    "el_operator",
    "normalize_mass",
    "dilate_space",
    "rescale_s",
    "save_field",
    "load_field",
]

_MAGIC = b"NSF1"


class ZeroField(ValueError):
    pass


def _axis_slice(d: int, ax: int, idx) -> tuple:
    sl = [slice(None)] * d
    sl[ax] = idx
    return tuple(sl)


def canonicalize(grid: ReducedGrid, values: np.ndarray) -> np.ndarray:
    """Copy values, pin the Dirichlet slabs and fill dependent axis slabs."""
    v = np.array(grid.check_shape(values), dtype=float)
    for ax in range(grid.d):
        v[_axis_slice(grid.d, ax, -1)] = 0.0
    for ax in range(grid.d):
        if grid.singular[ax]:
            s0 = _axis_slice(grid.d, ax, 0)
            s1 = _axis_slice(grid.d, ax, 1)
            s2 = _axis_slice(grid.d, ax, 2)
            v[s0] = (4.0 * v[s1] - v[s2]) / 3.0
    return v


def _fold_dependent(grid: ReducedGrid, g: np.ndarray) -> None:
    """Transpose of the extrapolation fill, applied in reverse axis order."""
    for ax in reversed(range(grid.d)):
        if grid.singular[ax]:
            s0 = _axis_slice(grid.d, ax, 0)
            s1 = _axis_slice(grid.d, ax, 1)
            s2 = _axis_slice(grid.d, ax, 2)
            g[s1] += (4.0 / 3.0) * g[s0]
            g[s2] -= (1.0 / 3.0) * g[s0]
            g[s0] = 0.0


def _zero_boundary(grid: ReducedGrid, g: np.ndarray) -> None:
    for ax in range(grid.d):
        g[_axis_slice(grid.d, ax, -1)] = 0.0


class Field:
    """Scalar field on a reduced grid; values are canonical after construction."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: ReducedGrid, values: np.ndarray):
        self.grid = grid
        self.values = canonicalize(grid, values)

    def copy(self) -> "Field":
        return Field(self.grid, self.values)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


@dataclass(frozen=True)
class EnergyReport:
    """All constraint/energy functionals of one field in a single pass.

    energy = kinetic/2 - potential exactly as stored;
    mu = (fu_u - kinetic)/mass, with mu = 0 when the field vanishes.
    """

    mass: float
    kinetic: float
    potential: float
    energy: float
    mu: float
    fu_u: float

    def as_dict(self) -> dict:
        return {
            "mass": self.mass,
            "kinetic": self.kinetic,
            "potential": self.potential,
            "energy": self.energy,
            "mu": self.mu,
            "fu_u": self.fu_u,
        }


def kinetic_value(grid: ReducedGrid, v: np.ndarray) -> float:
    tot = 0.0
    for ax in range(grid.d):
        dv = np.diff(v, axis=ax) / grid.h[ax]
        tot += float(np.sum(grid.wmid[ax] * dv * dv))
    return tot


def _half_kinetic_raw_grad(grid: ReducedGrid, v: np.ndarray) -> np.ndarray:
    g = np.zeros_like(v)
    for ax in range(grid.d):
        dv = np.diff(v, axis=ax) / grid.h[ax]
        t = grid.wmid[ax] * dv / grid.h[ax]
        g[_axis_slice(grid.d, ax, slice(1, None))] += t
        g[_axis_slice(grid.d, ax, slice(None, -1))] -= t
    return g


def stiffness_apply(grid: ReducedGrid, v: np.ndarray) -> np.ndarray:
    """Discrete -Delta_red on canonical values (weighted-adjoint form)."""
    g = _half_kinetic_raw_grad(grid, v)
    _fold_dependent(grid, g)
    _zero_boundary(grid, g)
    out = g / grid.weight_safe
    for ax in range(grid.d):
        if grid.singular[ax]:
            s0 = _axis_slice(grid.d, ax, 0)
            s1 = _axis_slice(grid.d, ax, 1)
            s2 = _axis_slice(grid.d, ax, 2)
            out[s0] = (4.0 * out[s1] - out[s2]) / 3.0
    _zero_boundary(grid, out)
    return out


def mass(u: Field) -> float:
    return quadrature(u.grid, u.values * u.values)


def kinetic(u: Field) -> float:
    return kinetic_value(u.grid, u.values)


def potential(u: Field, spec: NonlinearitySpec) -> float:
    return quadrature(u.grid, eval_F(spec, u.values))


def energy(u: Field, spec: NonlinearitySpec) -> EnergyReport:
    return energy_of_values(u.grid, u.values, spec)


def energy_of_values(grid: ReducedGrid, values: np.ndarray, spec: NonlinearitySpec) -> EnergyReport:
    """EnergyReport from a canonical value array (hot-path variant)."""
    w = grid.weight
    m = float(np.sum(w * values * values))
    K = kinetic_value(grid, values)
    pot = float(np.sum(w * eval_F(spec, values)))
    fu_u = float(np.sum(w * eval_f(spec, values) * values))
    mu = (fu_u - K) / m if m > 0.0 else 0.0
    return EnergyReport(mass=m, kinetic=K, potential=pot, energy=0.5 * K - pot, mu=mu, fu_u=fu_u)


def l2_gradient_values(grid: ReducedGrid, values: np.ndarray, spec: NonlinearitySpec) -> np.ndarray:
    """Exact weighted-L2 gradient of I_h; approximates -Delta_red u - f(u)."""
    g = _half_kinetic_raw_grad(grid, values)
    _fold_dependent(grid, g)
    _zero_boundary(grid, g)
    out = g / grid.weight_safe - eval_f(spec, values)
    return canonicalize(grid, out)


def l2_gradient(u: Field, spec: NonlinearitySpec) -> Field:
    return Field(u.grid, l2_gradient_values(u.grid, u.values, spec))


def el_operator(u: Field, spec: NonlinearitySpec, mu: float) -> Field:
    """Euler-Lagrange residual field -Delta_red u + mu*u - f(u)."""
    res = l2_gradient_values(u.grid, u.values, spec) + mu * u.values
    return Field(u.grid, res)


def normalize_mass(u: Field, m: float) -> Field:
    cur = mass(u)
    if cur <= 0.0:
        raise ZeroField("cannot normalize a zero field")
    if m <= 0.0:
        raise ValueError(f"target mass must be > 0, got {m}")
    return Field(u.grid, math.sqrt(m / cur) * u.values)


def _resample(grid: ReducedGrid, values: np.ndarray, index_scale: float) -> np.ndarray:
    """Evaluate values at fractional indices index_scale * i by linear interpolation."""
    idx = np.meshgrid(*[np.arange(n) * index_scale for n in grid.shape], indexing="ij")
    coords = np.stack(idx)
    return map_coordinates(values, coords, order=1, mode="constant", cval=0.0)


def dilate_space(u: Field, t: float) -> Field:
    """v(r) = u(r/t): mass scales by t^N, I(v) = t^N I(u) + (t^(N-2) - t^N)/2 * kinetic."""
    if not t > 0:
        raise ValueError(f"dilation factor must be > 0, got {t}")
    if t == 1.0:
        return u.copy()
    return Field(u.grid, _resample(u.grid, u.values, 1.0 / t))


def rescale_s(u: Field, s: float) -> Field:
    """v(r) = s^(N/2) u(s r): mass invariant, kinetic scales by s^2."""
    if not s > 0:
        raise ValueError(f"concentration scale must be > 0, got {s}")
    if s == 1.0:
        return u.copy()
    amp = s ** (u.grid.config.N / 2.0)
    return Field(u.grid, amp * _resample(u.grid, u.values, s))


def regrid(u: Field, grid: ReducedGrid) -> Field:
    """Interpolate a field onto another grid over the same domain radius."""
    if grid.config != u.grid.config:
        raise ValueError("regrid requires the same symmetry configuration")
    if grid.L != u.grid.L:
        raise ValueError("regrid requires the same domain radius")
    idx = np.meshgrid(
        *[np.arange(n) * (grid.h[i] / u.grid.h[i]) for i, n in enumerate(grid.shape)],
        indexing="ij",
    )
    vals = map_coordinates(u.values, np.stack(idx), order=1, mode="constant", cval=0.0)
    return Field(grid, vals)


def save_field(path, u: Field) -> None:
    """Binary field file: magic, JSON header, raw little-endian float64 values."""
    header = dict(u.grid.describe())
    header["schema"] = 1
    header["dtype"] = "<f8"
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    data = np.ascontiguousarray(u.values, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(data)


def load_field(path, grid: Optional[ReducedGrid] = None) -> Field:
    """Read a field file; rebuilds the grid from the header unless one is given."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a field file (bad magic {magic!r})")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        raw = fh.read()
    shape = tuple(header["n"])
    values = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(float)
    if grid is None:
        config = SymmetryConfig(sector=header["sector"], N=header["N"], M=header["M"])
        grid = build_grid(config, shape, header["L"])
    else:
        if tuple(grid.shape) != shape or grid.describe() != {
            k: header[k] for k in ("sector", "N", "M", "n", "L")
        }:
            raise ValueError(f"{path}: header does not match the provided grid")
    return Field(grid, values)


def antisymmetric_field(grid: ReducedGrid, values: np.ndarray) -> Field:
    """Project values onto the antisymmetric class and wrap as a Field."""
    return Field(grid, antisymmetrize(grid, values))
