import math

import numpy as np
import pytest

from conftest import antisym_bump_pair, smooth_random_values
from normsol.fields import (
    Field,
    ZeroField,
    canonicalize,
    dilate_space,
    el_operator,
    energy,
    energy_of_values,
    kinetic,
    l2_gradient,
    l2_gradient_values,
    load_field,
    mass,
    normalize_mass,
    regrid,
    rescale_s,
    save_field,
    stiffness_apply,
)
from normsol.grids import SymmetryConfig, antisymmetrize, build_grid, quadrature, symmetry_residual
from normsol.nonlinearity import NonlinearitySpec, power_difference, pure_power

SPEC = pure_power(2.5, 4)


class TestMassKinetic:
    def test_zero_field(self, grid44):
        u = Field(grid44, np.zeros(grid44.shape))
        assert mass(u) == 0.0
        assert kinetic(u) == 0.0

    def test_gaussian_mass_r4(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 192, 12.0)
        r1, r2 = g.coordinate_mesh()
        u = Field(g, np.exp(-(r1 ** 2 + r2 ** 2) / 2))
        assert mass(u) == pytest.approx(math.pi ** 2, rel=1e-3)

    def test_gaussian_kinetic_r4(self):
        g = build_grid(SymmetryConfig("x2", 4, 2), 192, 12.0)
        r1, r2 = g.coordinate_mesh()
        u = Field(g, np.exp(-(r1 ** 2 + r2 ** 2) / 2))
        assert kinetic(u) == pytest.approx(2 * math.pi ** 2, rel=1e-2)

    def test_kinetic_second_order_refinement(self):
        errs = []
        for n in (64, 128, 256):
            g = build_grid(SymmetryConfig("x2", 4, 2), n, 12.0)
            r1, r2 = g.coordinate_mesh()
            u = Field(g, np.exp(-(r1 ** 2 + r2 ** 2) / 2))
            errs.append(abs(kinetic(u) - 2 * math.pi ** 2) / (2 * math.pi ** 2))
        assert errs[1] <= errs[0] / 3.0
        assert errs[2] <= errs[1] / 3.0

    def test_mass_positive_iff_nonzero(self, grid44):
        rng = np.random.default_rng(0)
        u = Field(grid44, smooth_random_values(grid44, rng))
        assert mass(u) > 0.0


class TestEnergyReport:
    def test_zero_field_report(self, grid44):
        rep = energy(Field(grid44, np.zeros(grid44.shape)), SPEC)
        assert rep.mass == rep.kinetic == rep.potential == rep.energy == rep.mu == 0.0

    def test_decomposition_identity(self, grid44):
        rng = np.random.default_rng(1)
        for _ in range(5):
            u = Field(grid44, smooth_random_values(grid44, rng))
            rep = energy(u, SPEC)
            assert rep.energy == 0.5 * rep.kinetic - rep.potential

    def test_pure_power_potential_nonnegative(self, grid44):
        rng = np.random.default_rng(2)
        u = Field(grid44, smooth_random_values(grid44, rng))
        assert energy(u, SPEC).potential >= 0.0

    def test_mu_formula(self, grid44):
        rng = np.random.default_rng(3)
        u = Field(grid44, smooth_random_values(grid44, rng))
        rep = energy(u, SPEC)
        assert rep.mu == pytest.approx((rep.fu_u - rep.kinetic) / rep.mass, rel=1e-14)


class TestGradientConsistency:
    @pytest.mark.parametrize("n", [64, 128])
    def test_directional_derivative_match(self, n):
        # <l2_gradient(u), v>_w vs central finite difference of the energy
        g = build_grid(SymmetryConfig("x2", 4, 2), n, 12.0)
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(20):
            u = smooth_random_values(g, rng)
            v = smooth_random_values(g, rng)
            lhs = quadrature(g, l2_gradient_values(g, u, SPEC) * v)
            eps = 1e-4
            Ip = energy_of_values(g, canonicalize(g, u + eps * v), SPEC).energy
            Im = energy_of_values(g, canonicalize(g, u - eps * v), SPEC).energy
            rhs = (Ip - Im) / (2 * eps)
            worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-30))
        assert worst <= 1e-5

    def test_gradient_of_zero(self, grid44):
        u = Field(grid44, np.zeros(grid44.shape))
        assert np.max(np.abs(l2_gradient(u, SPEC).values)) == 0.0

    def test_gradient_preserves_antisymmetry(self, grid44):
        u = antisym_bump_pair(grid44)
        gr = l2_gradient_values(grid44, u.values, SPEC)
        norm = math.sqrt(quadrature(grid44, gr * gr))
        assert symmetry_residual(grid44, gr) <= 1e-12 * max(norm, 1.0)


class TestElOperator:
    def test_zero_field(self, grid44):
        res = el_operator(Field(grid44, np.zeros(grid44.shape)), SPEC, 0.7)
        assert np.max(np.abs(res.values)) == 0.0

    def test_laplacian_of_gaussian_interior(self):
        # -Delta e^{-|x|^2/2} = (N - |x|^2) e^{-|x|^2/2} in R^N, N = 4
        for n, budget in ((128, 0.011), (256, 0.0031)):
            g = build_grid(SymmetryConfig("x2", 4, 2), n, 12.0)
            r1, r2 = g.coordinate_mesh()
            u = Field(g, np.exp(-(r1 ** 2 + r2 ** 2) / 2))
            Au = stiffness_apply(g, u.values)
            exact = (4 - (r1 ** 2 + r2 ** 2)) * np.exp(-(r1 ** 2 + r2 ** 2) / 2)
            interior = (r1 > 0.5) & (r2 > 0.5) & (r1 < 6) & (r2 < 6)
            assert np.max(np.abs(Au - exact)[interior]) <= budget

    def test_el_equals_gradient_plus_mu(self, grid44):
        rng = np.random.default_rng(5)
        u = Field(grid44, smooth_random_values(grid44, rng))
        mu = 0.3
        lhs = el_operator(u, SPEC, mu).values
        rhs = canonicalize(grid44, l2_gradient_values(grid44, u.values, SPEC) + mu * u.values)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestNormalizeMass:
    def test_scale_by_half(self, grid44):
        u = antisym_bump_pair(grid44)
        u4 = normalize_mass(u, 4.0)
        u1 = normalize_mass(u4, 1.0)
        np.testing.assert_allclose(u1.values, 0.5 * u4.values, atol=1e-15)

    def test_exact_target(self, grid44):
        u = normalize_mass(antisym_bump_pair(grid44), 2.0)
        assert mass(u) == pytest.approx(2.0, rel=1e-14)

    def test_idempotent_at_target(self, grid44):
        u = normalize_mass(antisym_bump_pair(grid44), 1.0)
        v = normalize_mass(u, 1.0)
        np.testing.assert_allclose(v.values, u.values, rtol=0, atol=1e-15)

    def test_zero_field_raises(self, grid44):
        with pytest.raises(ZeroField):
            normalize_mass(Field(grid44, np.zeros(grid44.shape)), 1.0)


class TestDilations:
    def setup_method(self):
        self.g = build_grid(SymmetryConfig("x2", 4, 2), 128, 12.0)
        r1, r2 = self.g.coordinate_mesh()
        self.u = Field(
            self.g,
            np.exp(-((r1 - 2.5) ** 2 + (r2 - 1.2) ** 2))
            - np.exp(-((r1 - 1.2) ** 2 + (r2 - 2.5) ** 2)),
        )

    def test_identity_factor(self):
        np.testing.assert_array_equal(dilate_space(self.u, 1.0).values, self.u.values)
        np.testing.assert_array_equal(rescale_s(self.u, 1.0).values, self.u.values)

    def test_mass_scaling_law(self):
        t = 1.25
        ratio = mass(dilate_space(self.u, t)) / mass(self.u)
        assert ratio == pytest.approx(t ** 4, rel=1e-2)

    def test_dilation_energy_identity(self):
        rep = energy(self.u, SPEC)
        for t in (0.8, 1.25):
            repv = energy(dilate_space(self.u, t), SPEC)
            pred = t ** 4 * rep.energy + 0.5 * t ** 2 * (1 - t * t) * rep.kinetic
            assert repv.energy == pytest.approx(pred, rel=2e-2)

    def test_rescale_mass_invariance(self):
        for s in (0.5, 1.3):
            assert mass(rescale_s(self.u, s)) == pytest.approx(mass(self.u), rel=1e-2)

    def test_rescale_kinetic_law(self):
        K = kinetic(self.u)
        for s in (0.5, 1.3):
            assert kinetic(rescale_s(self.u, s)) == pytest.approx(s * s * K, rel=1e-2)

    def test_dilate_invalid_factor(self):
        with pytest.raises(ValueError):
            dilate_space(self.u, 0.0)
        with pytest.raises(ValueError):
            rescale_s(self.u, -1.0)


class TestSerialization:
    def test_binary_roundtrip_lossless(self, tmp_path, grid44):
        rng = np.random.default_rng(7)
        u = Field(grid44, smooth_random_values(grid44, rng))
        p = tmp_path / "u.field"
        save_field(p, u)
        v = load_field(p)
        assert np.array_equal(u.values, v.values)
        assert v.grid.describe() == grid44.describe()

    def test_roundtrip_with_given_grid(self, tmp_path, grid44):
        u = antisym_bump_pair(grid44)
        p = tmp_path / "u.field"
        save_field(p, u)
        v = load_field(p, grid44)
        assert v.grid is grid44
        assert np.array_equal(u.values, v.values)

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "junk.field"
        p.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError):
            load_field(p)

    def test_radial_roundtrip(self, tmp_path, rgrid4):
        u = Field(rgrid4, np.exp(-rgrid4.axes[0] ** 2))
        p = tmp_path / "r.field"
        save_field(p, u)
        assert np.array_equal(load_field(p).values, u.values)


class TestRegrid:
    def test_refines_smoothly(self):
        g1 = build_grid(SymmetryConfig("x2", 4, 2), 64, 12.0)
        g2 = build_grid(SymmetryConfig("x2", 4, 2), 128, 12.0)
        r1, r2 = g1.coordinate_mesh()
        u = Field(g1, np.exp(-(r1 ** 2 + r2 ** 2) / 2))
        v = regrid(u, g2)
        assert mass(v) == pytest.approx(mass(u), rel=1e-2)

    def test_same_grid_identity(self, grid44):
        u = antisym_bump_pair(grid44)
        v = regrid(u, grid44)
        np.testing.assert_allclose(v.values, u.values, atol=1e-12)


class TestEquivariance:
    def test_operators_preserve_antisymmetry(self, grid44):
        # f odd and the reduced Laplacian swap-symmetric
        u = antisym_bump_pair(grid44)
        spec = power_difference(2.5, 3.5, 4)
        for vals in (
            l2_gradient_values(grid44, u.values, spec),
            el_operator(u, spec, 0.4).values,
            dilate_space(u, 1.2).values,
            rescale_s(u, 0.8).values,
        ):
            norm = math.sqrt(max(quadrature(grid44, vals * vals), 1e-30))
            assert symmetry_residual(grid44, vals) <= 1e-12 * max(norm, 1.0)
