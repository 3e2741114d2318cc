import numpy as np
import pytest

from kolmolab.quasilinear import (
    build_approx_solution,
    error_ledger,
    error_shapes,
    eta,
    gamma1,
    gamma1_series,
    lambda_star,
    morse_transform,
    single_mode_initial,
    split_approx,
    t_star,
    timescales,
)
from kolmolab.spectral import Field2D, ShearProfile, TorusGrid


class TestTimeFactors:
    def test_t_star_limits(self):
        assert t_star(1e-6, 1e-2) == pytest.approx(1e-6)
        assert t_star(1e6, 1e-2) == pytest.approx(100.0)

    @pytest.mark.parametrize("t", [1e-3, 0.5, 3.0, 40.0, 400.0])
    def test_gamma1_between_cubic_bounds(self, t):
        nu = 1e-3
        g = gamma1(t, nu)
        # t_*(s) <= s, and t_*(s) >= s e^{-nu s}
        assert t**3 / 3 * np.exp(-2 * nu * t) * (1 - 1e-12) <= g <= t**3 / 3 * (1 + 1e-12)
        if nu * t < 0.1:
            assert g >= t**3 / 4

    def test_series_and_closed_form_match_at_switch(self):
        nu = 1e-2
        t = 0.05 / nu
        closed = (t + (-np.expm1(-2 * nu * t)) / (2 * nu) - 2 * (-np.expm1(-nu * t)) / nu) / nu**2
        assert gamma1_series(t, nu) == pytest.approx(closed, rel=1e-9)

    def test_gamma1_matches_quadrature(self):
        from scipy.integrate import quad

        nu, t = 1e-2, 250.0
        ref = quad(lambda s: float(t_star(s, nu)) ** 2, 0, t, epsrel=1e-12)[0]
        assert gamma1(t, nu) == pytest.approx(ref, rel=1e-10)

    def test_gamma1_vectorised(self):
        out = gamma1(np.array([0.0, 1.0, 100.0]), 1e-2)
        assert out.shape == (3,) and out[0] == 0.0

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            gamma1(1.0, 0.0)
        with pytest.raises(ValueError):
            gamma1(-1.0, 0.1)

    def test_timescales(self):
        ts = timescales(1e-3)
        assert ts["T2"] == pytest.approx(1000.0)
        assert ts["T0"] < ts["T1"] < ts["T2"]


class TestCutoffs:
    def test_eta_plateaus(self):
        np.testing.assert_allclose(eta([0.0, 0.9, -1.0, 2.0, 5.0]), [1, 1, 1, 0, 0])
        assert eta(1.5) == pytest.approx(0.5)

    def test_eta_monotone(self):
        v = eta(np.linspace(1, 2, 50))
        assert np.all(np.diff(v) <= 0)

    def test_lambda_star(self):
        np.testing.assert_allclose(lambda_star(1e-3, 2.0), [2, 4, 6, 8, 10])
        assert lambda_star(0.5, 2.0).size == 0


class TestMorse:
    def test_identity_for_cosine(self):
        m = morse_transform(ShearProfile.kolmogorov())
        assert m.a == pytest.approx(1.0) and m.d == pytest.approx(0.0, abs=1e-14)
        assert m.residual() < 1e-10
        assert m.deviation() < 1e-10

    def test_perturbed_shear(self):
        V = ShearProfile.from_cosine_series({1: 1.0, 2: 0.03}, {3: 0.01}, mean=0.05)
        m = morse_transform(V)
        assert m.residual() < 1e-8
        y = np.linspace(0, 2 * np.pi, 9)
        np.testing.assert_allclose(np.exp(1j * m.theta_inverse(m.theta(y))), np.exp(1j * y), atol=1e-9)

    def test_far_from_cosine_rejected(self):
        with pytest.raises(ValueError):
            morse_transform(ShearProfile.from_cosine_series({1: 1.0, 3: 1.0}))


class TestApproxSolution:
    grid = TorusGrid(Nx=16, Ny=64)

    def test_requires_zero_x_average(self):
        w = Field2D.from_function(self.grid, lambda x, y: np.sin(y))
        with pytest.raises(ValueError, match="x-average"):
            build_approx_solution(w, ShearProfile.kolmogorov(), 1e-3, [0.0, 1.0])

    def test_initial_value_reproduced(self):
        w = single_mode_initial(self.grid)
        sol = build_approx_solution(w, ShearProfile.kolmogorov(), 1e-3, [0.0, 1.0])
        f = sol.field(0, self.grid)
        np.testing.assert_allclose(f.mode(2.0).resized(w.Ky).coeffs, w.mode(2.0).coeffs, atol=1e-10)

    def test_split_recombines(self):
        w = single_mode_initial(self.grid)
        sol = build_approx_solution(w, ShearProfile.kolmogorov(), 1e-3, [0.5, 1.0, 4.0])
        w3, ws = split_approx(sol)
        np.testing.assert_allclose(w3 + ws, sol.w2)

    def test_zero_data_has_zero_residual(self):
        w = Field2D(self.grid, np.zeros((11, 21)))
        led = error_ledger(w, ShearProfile.kolmogorov(), 1e-3, [1.0, 2.0], dt=0.05)
        assert np.all(led.er_l2 == 0.0)

    def test_ledger_residual_small_against_shapes(self):
        w = single_mode_initial(self.grid)
        led = error_ledger(w, ShearProfile.kolmogorov(), 1e-3, [1.0, 5.0, 20.0], dt=0.05)
        assert led.envelope_c < 10.0
        assert not led.flagged

    def test_shapes_positive(self):
        assert np.all(error_shapes(np.linspace(0, 100, 5), 1e-3) > 0)
