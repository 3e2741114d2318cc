import numpy as np
import pytest

from kolmolab.fitting import FitError
from kolmolab.linear_euler import (
    PhaseUnresolved,
    apply_B,
    evolve_linearized_euler,
    green_functions,
    initial_profile,
    measure_rates,
    omega1_residual,
    profile_series,
    required_quad_points,
)
from kolmolab.spectral import ModeFunction


@pytest.fixture(scope="module")
def short_traj():
    w0 = initial_profile("smooth", 2.0, 64, seed=3)
    return evolve_linearized_euler(w0, np.linspace(0.0, 10.0, 101))


class TestEvolution:
    def test_star_norm_conserved(self, short_traj):
        assert short_traj.star_drift < 1e-8

    def test_zero_data_stays_zero(self):
        tr = evolve_linearized_euler(ModeFunction.zeros(2.0, 16), [0.0, 1.0, 2.0])
        assert not np.any(tr.states)

    def test_rejects_small_k(self):
        with pytest.raises(ValueError):
            evolve_linearized_euler(ModeFunction.unit(1.0, 8, 0), [0.0, 1.0])

    def test_rejects_unsorted_times(self):
        with pytest.raises(ValueError):
            evolve_linearized_euler(ModeFunction.unit(2.0, 8, 0), [0.0, 2.0, 1.0])

    def test_short_time_taylor(self):
        # w(h) = w0 - i h k B w0 + O(h^2)
        w0 = initial_profile("cos", 3.0, 24)
        h = 1e-4
        tr = evolve_linearized_euler(w0, [0.0, h], tol=1e-13)
        pred = w0.coeffs - 1j * h * 3.0 * apply_B(w0.coeffs, 3.0)
        assert np.abs(tr.states[-1] - pred).max() < 1e-7

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="preset"):
            initial_profile("square", 2.0, 8)


class TestDiagnostics:
    def test_series_keys_and_initial_values(self, short_traj):
        s = profile_series(short_traj)
        assert s["omega_at_0"][0] == pytest.approx(abs(short_traj.states[0].sum()))
        np.testing.assert_allclose(s["star_norm"], short_traj.conserved_log)
        assert set(s) >= {"psi_sup", "omega_at_pi", "profile_H1", "profile_H2"}

    def test_window_must_start_after_k_squared(self, short_traj):
        with pytest.raises(FitError):
            measure_rates(short_traj, (1.0, 10.0))

    def test_window_past_end(self, short_traj):
        with pytest.raises(FitError):
            measure_rates(short_traj, (4.0, 40.0))


class TestOmega1Residual:
    def test_fourth_order_in_dt(self, short_traj):
        r1 = omega1_residual(short_traj, 5.0, dt=0.1)
        r2 = omega1_residual(short_traj, 5.0, dt=0.05)
        assert np.log2(r1.value / r2.value) == pytest.approx(4.0, abs=0.3)

    def test_conventions_agree(self, short_traj):
        a = omega1_residual(short_traj, 5.0, dt=0.025)
        b = omega1_residual(short_traj, 5.0, dt=0.025, rescaled=True)
        assert a.value < 1e-6 and b.value < 1e-5
        assert b.convention != a.convention

    def test_stencil_needs_room(self, short_traj):
        with pytest.raises(ValueError):
            omega1_residual(short_traj, 0.05, dt=0.05)


class TestGreenFunctions:
    def test_wronskians_and_envelopes(self):
        g = green_functions(100.0, 2.0)
        assert g.wronskian1 < 1e-12 and g.wronskian2 < 1e-12
        assert g.envelope_ratio_1() < 10 and g.envelope_ratio_2() < 20

    def test_needs_t_above_k_squared(self):
        with pytest.raises(ValueError):
            green_functions(3.0, 2.0)

    def test_under_resolved_phase(self):
        need = required_quad_points(1e4, 2.0)
        with pytest.raises(PhaseUnresolved) as info:
            green_functions(1e4, 2.0, quad_points=need // 2)
        assert info.value.needed == need

    def test_f1_matches_direct_quadrature(self):
        from scipy.integrate import quad

        t, k = 30.0, 2.0
        g = green_functions(t, k)
        j = g.y.size // 3
        y0 = g.y[j]
        re = quad(lambda s: np.cos(t * np.cos(s)), y0, 1 / k, limit=400, epsabs=1e-13)[0]
        im = quad(lambda s: np.sin(t * np.cos(s)), y0, 1 / k, limit=400, epsabs=1e-13)[0]
        assert g.f1p[j] == pytest.approx(np.exp(-1j * t * np.cos(y0)) * (re + 1j * im), abs=1e-11)
