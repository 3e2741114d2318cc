import warnings

import numpy as np
import pytest

from kolmolab.resolvent import (
    effective_truncation,
    ns_constant_sweep,
    ns_matrix,
    ns_ratios,
    rayleigh_constant_sweep,
    rayleigh_energy_defect,
    rayleigh_matrix,
    rayleigh_ratio,
    solve_ns_resolvent,
    solve_rayleigh,
    theta,
)
from kolmolab.spectral import ModeFunction, ShearProfile


class TestTheta:
    def test_kolmogorov_at_zero(self):
        assert theta(2.0, 0.0, ShearProfile.kolmogorov()) == pytest.approx(3.0)

    def test_at_range_edge(self):
        assert theta(5.0, 1.0) == pytest.approx(2.0)

    def test_outside_range_uses_distance(self):
        assert theta(2.0, 1.25) == pytest.approx(1 + 2 * 0.5 + 1.25)


class TestRayleigh:
    def test_zero_forcing_gives_zero(self):
        sol = solve_rayleigh(2.0, 0.2, 1e-2, ModeFunction.zeros(2.0, 16))
        assert not np.any(sol.f.coeffs)

    def test_residual_and_energy_identity(self):
        F = ModeFunction.from_function(2.0, 32, lambda y: np.exp(np.cos(y)))
        sol = solve_rayleigh(2.0, 0.3, 1e-2, F)
        assert sol.residual < 1e-12
        assert rayleigh_energy_defect(F, sol.f, 1e-2) < 1e-10

    def test_eps_zero_rejected(self):
        with pytest.raises(ValueError):
            rayleigh_matrix(2.0, 0.0, 0.0, 8)

    def test_k_mismatch(self):
        with pytest.raises(ValueError):
            solve_rayleigh(2.0, 0.0, 0.1, ModeFunction.unit(3.0, 4, 0))

    def test_truncation_grows_as_eps_shrinks(self):
        assert effective_truncation(64, 1e-1) == 64
        assert effective_truncation(64, 1e-3) == 800

    def test_ratio_is_finite_and_matches_dense_svd(self):
        k, lam, eps, N = 2.0, 0.3, 1e-1, 24
        probe = rayleigh_ratio(k, lam, eps, N)
        A = rayleigh_matrix(k, lam, eps, probe.N)
        d = np.sqrt(np.arange(-probe.N, probe.N + 1.0) ** 2 + k * k)
        S = np.linalg.svd(np.linalg.inv(A) / d[:, None] / d[None, :], compute_uv=False)[0]
        assert probe.weighted_norm_ratio == pytest.approx(theta(k, lam) * S, rel=1e-6)
        assert not probe.flagged

    def test_sweep_validates_inputs(self):
        with pytest.raises(ValueError, match="lambda grid"):
            rayleigh_constant_sweep([2.0], [0.0, 0.5], [0.1], N=16)
        with pytest.raises(ValueError, match="decreasing"):
            rayleigh_constant_sweep([2.0], np.linspace(-1.5, 1.5, 3), [0.01, 0.1], N=16)


class TestViscous:
    def test_matrix_is_dissipative(self):
        A = ns_matrix(0.1, 2.0, 0.0, 12)
        # the star-weighted real part of <Af, f> is nu ||grad f||^2 >= 0
        assert np.all(np.diag(A).real > 0)

    def test_zero_forcing(self):
        out = solve_ns_resolvent(0.1, 2.0, 0.0, ModeFunction.zeros(2.0, 8))
        assert not np.any(out.coeffs)

    def test_solution_satisfies_system(self):
        F = ModeFunction.from_function(4.0, 24, np.sin)
        f = solve_ns_resolvent(1e-2, 4.0, 0.5, F)
        A = ns_matrix(1e-2, 4.0, 0.5, 24)
        assert np.abs(A @ f.coeffs - F.coeffs).max() < 1e-12

    def test_ratios_positive(self):
        p = ns_ratios(1e-2, 2.0, 0.3, 32)
        assert p.weighted_norm_ratio > 0 and p.ratio2 > 0
        assert p.theta == pytest.approx(theta(2.0, 0.3))

    def test_nu_range(self):
        with pytest.raises(ValueError):
            ns_constant_sweep([1.5], [2.0], [0.0])
        with pytest.raises(ValueError):
            ns_matrix(0.0, 2.0, 0.0, 4)

    def test_near_singular_warns(self):
        F = ModeFunction.unit(2.0, 8, 0)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            solve_ns_resolvent(0.5, 2.0, 0.0, F)
