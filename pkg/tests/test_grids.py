import math

import numpy as np
import pytest

from normsol.grids import (
    InvalidConfig,
    ReducedGrid,
    SectorMismatch,
    ShapeMismatch,
    SymmetryConfig,
    antisymmetrize,
    build_grid,
    quadrature,
    radial_profile,
    sphere_surface_area,
    symmetry_residual,
)


def test_surface_areas():
    assert sphere_surface_area(0) == pytest.approx(2.0)
    assert sphere_surface_area(1) == pytest.approx(2 * math.pi)
    assert sphere_surface_area(2) == pytest.approx(4 * math.pi)
    assert sphere_surface_area(3) == pytest.approx(2 * math.pi ** 2)


class TestConfig:
    def test_omega_n4_m2(self):
        cfg = SymmetryConfig("x2", 4, 2)
        assert cfg.omega == pytest.approx((2 * math.pi) ** 2, rel=1e-14)
        assert cfg.reduced_dim == 2
        assert cfg.exponents == (1, 1)

    def test_three_axis_sector(self):
        cfg = SymmetryConfig("x2", 6, 2)
        assert cfg.reduced_dim == 3
        assert cfg.exponents == (1, 1, 1)

    def test_m1_rejected(self):
        with pytest.raises(InvalidConfig):
            SymmetryConfig("x2", 4, 1)

    def test_2m_greater_than_n_rejected(self):
        with pytest.raises(InvalidConfig):
            SymmetryConfig("x2", 5, 3)

    def test_radial_ignores_m(self):
        cfg = SymmetryConfig("radial", 5)
        assert cfg.reduced_dim == 1
        assert cfg.exponents == (4,)

    def test_radial_n1_rejected(self):
        with pytest.raises(InvalidConfig):
            SymmetryConfig("radial", 1)


class TestQuadrature:
    def test_zero(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 64, 10.0)
        assert quadrature(g, np.zeros(g.shape)) == 0.0

    def test_gaussian_r4(self):
        # int_{R^4} exp(-|x|^2) = pi^2
        g = build_grid(SymmetryConfig("x2", 4, 2), 256, 12.0)
        r1, r2 = g.coordinate_mesh()
        q = quadrature(g, np.exp(-(r1 ** 2 + r2 ** 2)))
        assert q == pytest.approx(math.pi ** 2, rel=1e-4)

    def test_gaussian_r6(self):
        # int_{R^6} exp(-|x|^2) = pi^3
        g = build_grid(SymmetryConfig("x2", 6, 2), 48, 8.0)
        r1, r2, r3 = g.coordinate_mesh()
        q = quadrature(g, np.exp(-(r1 ** 2 + r2 ** 2 + r3 ** 2)))
        assert q == pytest.approx(math.pi ** 3, rel=1e-3)

    def test_product_of_disks(self):
        # indicator of |x1| <= 1, |x2| <= 1 integrates to (pi 1^2)^2; the
        # grid places the jump mid-cell so the step error cancels to O(h^2)
        g = build_grid(SymmetryConfig("x2", 4, 2), 256, 10.0)
        r1, r2 = g.coordinate_mesh()
        ind = ((r1 <= 1.0) & (r2 <= 1.0)).astype(float)
        assert quadrature(g, ind) == pytest.approx(math.pi ** 2, rel=2e-3)

    def test_constant_volume_closed_form(self):
        # quadrature of 1 equals omega * prod int_0^L r^a dr to high accuracy
        for cfg, n, L in (
            (SymmetryConfig("x2", 4, 2), 64, 10.0),
            (SymmetryConfig("x2", 6, 2), 32, 6.0),
            (SymmetryConfig("radial", 5), 64, 7.0),
        ):
            g = build_grid(cfg, n, L)
            expected = cfg.omega
            for a in cfg.exponents:
                expected *= L ** (a + 1) / (a + 1)
            assert quadrature(g, np.ones(g.shape)) == pytest.approx(expected, rel=5e-3)

    def test_polynomial_exactness_low_degree(self):
        # r1^a r2^b with total node degree <= 3 per axis is integrated exactly
        g = build_grid(SymmetryConfig("x2", 4, 2), 64, 2.0)
        r1, r2 = g.coordinate_mesh()
        L = g.L
        for a, b in ((0, 0), (1, 0), (2, 1), (2, 2)):
            # node integrand along axis 1 is r^(a+1): degree a+1 <= 3
            vals = r1 ** a * r2 ** b
            exact = g.omega * (L ** (a + 2) / (a + 2)) * (L ** (b + 2) / (b + 2))
            assert quadrature(g, vals) == pytest.approx(exact, rel=1e-12)

    def test_refinement_second_order_or_better(self):
        cfg = SymmetryConfig("x2", 4, 2)
        errs = []
        for n in (32, 64, 128):
            g = build_grid(cfg, n, 9.0)
            r1, r2 = g.coordinate_mesh()
            # smooth compactly supported bump
            s = (r1 / 4.0) ** 2 + (r2 / 4.0) ** 2
            vals = np.where(s < 1.0, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
            errs.append(quadrature(g, vals))
        e1 = abs(errs[0] - errs[2])
        e2 = abs(errs[1] - errs[2])
        assert e2 <= e1 / 3.5  # at least ~second order

    def test_shape_mismatch(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 64, 10.0)
        with pytest.raises(ShapeMismatch):
            quadrature(g, np.zeros((3, 3)))

    def test_weights_nonnegative_zero_on_singular_axes(self):
        g = build_grid(SymmetryConfig("x2", 6, 2), 32, 6.0)
        assert np.all(g.weight >= 0.0)
        assert np.all(g.weight[0, :, :] == 0.0)
        assert np.all(g.weight[:, 0, :] == 0.0)
        assert np.all(g.weight[:, :, 0] == 0.0)
        assert np.all(g.weight[1:, 1:, 1:] > 0.0)

    def test_n_2m_plus_one_axis_has_positive_axis_weight(self):
        # N - 2M = 1: third exponent is 0, nodes at r3 = 0 carry weight
        g = build_grid(SymmetryConfig("x2", 5, 2), 32, 6.0)
        assert g.exponents == (1, 1, 0)
        assert np.all(g.weight[1:, 1:, 0] > 0.0)


class TestAntisymmetrize:
    def test_projector_fixed_point_and_kernel(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 64, 10.0)
        rng = np.random.default_rng(0)
        v = rng.normal(size=g.shape)
        a = antisymmetrize(g, v)
        assert np.array_equal(a, antisymmetrize(g, a))  # bitwise idempotent
        sym = 0.5 * (v + v.T)
        assert np.max(np.abs(antisymmetrize(g, sym))) == 0.0

    def test_linear_example(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 32, 4.0)
        r1, r2 = g.coordinate_mesh()
        np.testing.assert_allclose(antisymmetrize(g, r1), (r1 - r2) / 2, atol=1e-15)

    def test_diagonal_vanishes(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 64, 10.0)
        a = antisymmetrize(g, np.random.default_rng(1).normal(size=g.shape))
        assert np.max(np.abs(np.diagonal(a))) == 0.0

    def test_residual_pythagoras(self):
        # u = antisym + 0.1 * sym with unit weighted norms -> residual 0.1
        g = build_grid(SymmetryConfig("x2", 4, 2), 64, 10.0)
        rng = np.random.default_rng(2)
        v = rng.normal(size=g.shape)
        a = antisymmetrize(g, v)
        s = 0.5 * (v + v.T)
        a /= math.sqrt(quadrature(g, a * a))
        s /= math.sqrt(quadrature(g, s * s))
        u = a + 0.1 * s
        assert symmetry_residual(g, u) == pytest.approx(0.1, rel=1e-10)
        assert symmetry_residual(g, a) == pytest.approx(0.0, abs=1e-14)
        assert symmetry_residual(g, s) == pytest.approx(1.0, rel=1e-12)

    def test_orthogonality(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 64, 10.0)
        rng = np.random.default_rng(3)
        v = rng.normal(size=g.shape)
        a = antisymmetrize(g, v)
        s = 0.5 * (v + v.T)
        assert abs(quadrature(g, a * s)) <= 1e-10 * quadrature(g, v * v)

    def test_sector_mismatch(self):
        g = build_grid(SymmetryConfig("radial", 4), 64, 10.0)
        with pytest.raises(SectorMismatch):
            antisymmetrize(g, np.zeros(g.shape))
        with pytest.raises(SectorMismatch):
            symmetry_residual(g, np.zeros(g.shape))


class TestRadialProfile:
    def test_zero_field_deviation_zero(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 64, 10.0)
        prof = radial_profile(g, np.zeros(g.shape))
        assert prof.deviation == 0.0

    def test_antisymmetric_deviation_one(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 96, 10.0)
        r1, r2 = g.coordinate_mesh()
        u = antisymmetrize(g, np.exp(-((r1 - 3) ** 2 + (r2 - 1.5) ** 2)))
        prof = radial_profile(g, u)
        assert prof.deviation == pytest.approx(1.0, abs=1e-2)

    def test_radial_function_small_deviation(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 256, 8.0)
        r1, r2 = g.coordinate_mesh()
        prof = radial_profile(g, np.exp(-(r1 ** 2 + r2 ** 2)))
        assert prof.deviation <= 1e-2
