import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kolmolab.spectral import (
    Field2D,
    ModeFunction,
    ShearProfile,
    TorusGrid,
    from_grid,
    laplacian_inverse_k,
    project_nonzero,
    project_zero,
    sobolev_norm,
    star_inner,
    star_norm,
    to_grid,
)


class TestTorusGrid:
    def test_default_geometry(self):
        g = TorusGrid()
        assert g.p == pytest.approx(math.pi)
        assert g.alpha == pytest.approx(2.0)
        assert g.Kx == 85

    @pytest.mark.parametrize("kappa", [0.0, 1.0, 1.5, -0.2])
    def test_rejects_kappa_outside_unit_interval(self, kappa):
        with pytest.raises(ValueError, match="kappa"):
            TorusGrid(kappa=kappa)

    def test_rejects_odd_resolution(self):
        with pytest.raises(ValueError):
            TorusGrid(Nx=33)


class TestModeFunction:
    def test_even_length_rejected(self):
        with pytest.raises(ValueError):
            ModeFunction(2.0, np.zeros(4))

    def test_nonfinite_rejected(self):
        c = np.zeros(5, dtype=complex)
        c[0] = np.nan
        with pytest.raises(ValueError):
            ModeFunction(2.0, c)

    def test_coefficients_are_read_only(self):
        f = ModeFunction.unit(2.0, 3, 1)
        with pytest.raises(ValueError):
            f.coeffs[0] = 1.0

    def test_evaluation_matches_exponential(self):
        f = ModeFunction.unit(2.0, 4, 3)
        y = np.linspace(0, 2 * np.pi, 7)
        np.testing.assert_allclose(f(y), np.exp(3j * y), atol=1e-14)

    def test_from_function_recovers_cosine(self):
        f = ModeFunction.from_function(2.0, 6, np.cos)
        expected = np.zeros(13)
        expected[5] = expected[7] = 0.5
        np.testing.assert_allclose(f.coeffs, expected, atol=1e-14)

    def test_resize_roundtrip(self):
        f = ModeFunction.unit(3.0, 4, -2)
        assert f.resized(10).resized(4).coeffs.tolist() == f.coeffs.tolist()

    def test_mismatched_k_rejected(self):
        with pytest.raises(ValueError, match="different k"):
            ModeFunction.unit(2.0, 3, 0) + ModeFunction.unit(4.0, 3, 0)


class TestGridTransforms:
    @given(st.integers(min_value=2, max_value=20), st.integers(min_value=0, max_value=2**31 - 1))
    def test_roundtrip(self, N, seed):
        re, im = np.random.default_rng(seed).normal(size=(2, 2 * N + 1))
        c = re + 1j * im
        np.testing.assert_allclose(from_grid(to_grid(c), N), c, atol=1e-12)


class TestNorms:
    def test_star_inner_of_unit_mode(self):
        f = ModeFunction.unit(2.0, 8, 0)
        assert star_inner(f, f) == pytest.approx(0.75)

    def test_sobolev_norm_unit_mode(self):
        assert sobolev_norm(ModeFunction.unit(2.0, 8, 1), 1.0) == pytest.approx(math.sqrt(5.0))

    def test_sobolev_zero_is_l2(self):
        f = ModeFunction(2.0, np.arange(5) + 1j)
        assert sobolev_norm(f, 0.0) == pytest.approx(f.norm())

    def test_star_inner_needs_k_above_one(self):
        f = ModeFunction.unit(1.0, 3, 0)
        with pytest.raises(ValueError):
            star_inner(f, f)

    @given(st.floats(min_value=1.05, max_value=50.0), st.integers(min_value=0, max_value=2**31 - 1))
    def test_star_norm_equivalent_to_l2(self, k, seed):
        rng = np.random.default_rng(seed)
        f = ModeFunction(k, rng.normal(size=11) + 1j * rng.normal(size=11))
        # 1 - 1/k^2 <= weight < 1
        assert (1 - 1 / k**2) * f.norm() ** 2 <= star_norm(f) ** 2 * (1 + 1e-12)
        assert star_norm(f) <= f.norm() * (1 + 1e-12)


class TestLaplacianInverse:
    def test_constant_mode(self):
        psi = laplacian_inverse_k(ModeFunction.unit(2.0, 4, 0))
        assert psi.coeffs[4] == pytest.approx(-0.25)

    def test_k_zero_requires_mean_free(self):
        with pytest.raises(ValueError):
            laplacian_inverse_k(ModeFunction.unit(0.0, 4, 0))

    def test_inverts_symbol(self, rng):
        g = ModeFunction(3.0, rng.normal(size=9) + 0j)
        psi = laplacian_inverse_k(g)
        np.testing.assert_allclose(-(g.n**2 + 9.0) * psi.coeffs, g.coeffs, atol=1e-14)


class TestField2D:
    def test_physical_roundtrip_and_projections(self):
        grid = TorusGrid(Nx=16, Ny=32)
        f = Field2D.from_function(grid, lambda x, y: np.sin(y) + 0.5 * np.cos(2 * x + y))
        np.testing.assert_allclose(f.to_physical(), np.sin(grid.y())[None, :]
                                   + 0.5 * np.cos(2 * grid.x()[:, None] + grid.y()[None, :]), atol=1e-13)
        zero = project_zero(f)
        assert zero.coeffs[zero.N + 1] == pytest.approx(-0.5j)
        assert np.abs(project_nonzero(f).coeffs[f.Kx]).max() == 0.0
        assert f.mode(2.0).coeffs[f.Ky + 1] == pytest.approx(0.25)

    def test_rejects_nonreal_coefficients(self):
        c = np.zeros((3, 5), dtype=complex)
        c[2, 3] = 1.0
        with pytest.raises(ValueError, match="conjugate"):
            Field2D(TorusGrid(Nx=8, Ny=8), c)

    def test_missing_wavenumber(self):
        f = Field2D.from_function(TorusGrid(Nx=8, Ny=8), lambda x, y: np.cos(2 * x))
        with pytest.raises(KeyError):
            f.mode(3.0)

    def test_homogeneous_sobolev_norm(self):
        grid = TorusGrid(Nx=16, Ny=16)
        f = Field2D.from_function(grid, lambda x, y: np.cos(2 * x + y))
        # |K|^2 = 5, L^2 norm^2 = 1/2
        assert f.sobolev_norm(1.0) == pytest.approx(math.sqrt(2.5))


class TestShearProfile:
    def test_kolmogorov_derivatives(self):
        V = ShearProfile.kolmogorov()
        y = np.linspace(0, 6, 11)
        np.testing.assert_allclose(V.V(y), np.cos(y), atol=1e-14)
        np.testing.assert_allclose(V.dV(y), -np.sin(y), atol=1e-14)
        np.testing.assert_allclose(V.d3V(y), np.sin(y), atol=1e-14)
        assert V.distance_to_kolmogorov() == 0.0

    def test_cosine_series_with_sine_terms(self):
        V = ShearProfile.from_cosine_series({1: 1.0}, {2: 0.02}, mean=0.3)
        y = np.array([0.4, 2.0])
        np.testing.assert_allclose(V.V(y), 0.3 + np.cos(y) + 0.02 * np.sin(2 * y), atol=1e-14)
