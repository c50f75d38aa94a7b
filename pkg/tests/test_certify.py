import math

import numpy as np
import pytest

from conftest import antisym_bump_pair, smooth_random_values
from normsol.certify import (
    CertifyTolerances,
    MassMismatch,
    certify,
    coercivity_scan,
    pohozaev,
    random_smooth_field,
)
from normsol.fields import Field, energy, mass, normalize_mass
from normsol.flow import FlowConfig, minimize
from normsol.grids import SymmetryConfig, build_grid
from normsol.nonlinearity import NonlinearitySpec, power_difference, pure_power

SPEC = pure_power(2.5, 4)


@pytest.fixture(scope="module")
def solved():
    grid = build_grid(SymmetryConfig("x2", 4, 2), 64, 64.0)
    seed = antisym_bump_pair(grid, c=16.0, width=8.0)
    return minimize(seed, 1.0, SPEC, FlowConfig(max_iter=40_000))


class TestPohozaev:
    def test_zero_field(self, grid44):
        u = Field(grid44, np.zeros(grid44.shape))
        assert pohozaev(u, 0.7, SPEC) == 0.0

    def test_small_at_converged_minimizer(self, solved):
        P = pohozaev(solved.minimizer, solved.mu, SPEC)
        rep = solved.report
        scale = abs(rep.kinetic) + abs(solved.mu) * rep.mass + abs(rep.potential)
        assert abs(P) / scale <= 1e-2

    def test_generic_field_not_small(self, grid44):
        # smoke check only: a random field has no reason to satisfy P = 0
        rng = np.random.default_rng(0)
        u = normalize_mass(Field(grid44, smooth_random_values(grid44, rng)), 1.0)
        P = pohozaev(u, energy(u, SPEC).mu, SPEC)
        assert math.isfinite(P)


class TestCertify:
    def test_converged_minimizer_passes(self, solved):
        cert = certify(solved.minimizer, 1.0, SPEC)
        assert cert.passed
        assert cert.energy < 0.0
        assert cert.mu > 0.0
        assert cert.sign_changing
        assert cert.nonradiality >= 0.99
        assert cert.antisym_residual <= 1e-10
        assert cert.el_residual <= 1e-4

    def test_identity_I_minus_P(self, solved):
        # I - P = kinetic/N - mu/2 * mass, algebra of the stored quantities
        cert = certify(solved.minimizer, 1.0, SPEC)
        N = 4
        lhs = cert.energy - cert.pohozaev_abs
        rhs = cert.kinetic / N - 0.5 * cert.mu * cert.mass
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_mass_mismatch(self, solved):
        with pytest.raises(MassMismatch):
            certify(solved.minimizer, 2.0, SPEC)

    def test_zero_field_mass_mismatch(self, grid44):
        with pytest.raises(MassMismatch):
            certify(Field(grid44, np.zeros(grid44.shape)), 1.0, SPEC)

    def test_deterministic(self, solved):
        a = certify(solved.minimizer, 1.0, SPEC)
        b = certify(solved.minimizer, 1.0, SPEC)
        assert a == b

    def test_radial_sector_gates_skipped(self):
        g = build_grid(SymmetryConfig("radial", 4), 256, 40.0)
        r = g.axes[0]
        seed = normalize_mass(Field(g, np.exp(-r * r / 32.0)), 1.0)
        res = minimize(seed, 1.0, SPEC, FlowConfig(max_iter=60_000))
        cert = certify(res.minimizer, 1.0, SPEC)
        assert cert.sector == "radial"
        assert cert.passed  # no antisymmetry/sign gates in the radial sector
        assert not cert.sign_changing  # one-signed ground state
        assert cert.nonradiality == 0.0

    def test_random_field_fails(self, grid44):
        rng = np.random.default_rng(5)
        u = normalize_mass(Field(grid44, smooth_random_values(grid44, rng)), 1.0)
        cert = certify(u, 1.0, SPEC)
        assert not cert.passed

    def test_antisymmetric_nonzero_is_sign_changing(self, grid44):
        u = normalize_mass(antisym_bump_pair(grid44), 1.0)
        cert = certify(u, 1.0, SPEC, CertifyTolerances(el_residual=math.inf,
                                                       pohozaev_rel=math.inf))
        assert cert.sign_changing


class TestCoercivity:
    def test_zero_nonlinearity_gives_zero_constant(self, grid44):
        # truncated below any sampled amplitude: f is numerically zero
        base = power_difference(2.5, 3.5, 4)
        dead = NonlinearitySpec(kind="truncated", N=4, base=base, zeta1=1e-300)
        rep = coercivity_scan(dead, grid44, 1.0, n_samples=20, rng_seed=1)
        assert rep.empirical_C == 0.0

    def test_mass_subcritical_scan(self, grid44):
        rep = coercivity_scan(SPEC, grid44, 1.0, n_samples=60, rng_seed=2)
        assert math.isfinite(rep.empirical_C)
        assert rep.empirical_C >= 0.0
        assert rep.top_decile_max_ratio <= 0.0
        assert rep.finite

    def test_constant_monotone_in_mass(self, grid44):
        r1 = coercivity_scan(SPEC, grid44, 0.5, n_samples=40, rng_seed=3)
        r2 = coercivity_scan(SPEC, grid44, 4.0, n_samples=40, rng_seed=3)
        assert r2.empirical_C >= r1.empirical_C - 1e-12

    def test_sample_count_validated(self, grid44):
        with pytest.raises(ValueError):
            coercivity_scan(SPEC, grid44, 1.0, n_samples=5)
