import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kolmolab.fitting import FitError, RateFit, fit_exponential, fit_power_law


class TestPowerLaw:
    @given(st.floats(min_value=-4, max_value=2), st.floats(min_value=0.1, max_value=10))
    def test_recovers_exponent(self, p, c):
        t = np.geomspace(1, 100, 40)
        fit = fit_power_law(t, c * t**p)
        assert fit.exponent == pytest.approx(p, abs=1e-9)
        assert fit.prefactor == pytest.approx(c, rel=1e-9)
        assert fit.r_squared == pytest.approx(1.0)

    def test_window_selection(self):
        t = np.geomspace(1, 1000, 90)
        v = np.where(t < 10, t**-1.0, 10.0 * t**-2.0)
        assert fit_power_law(t, v, (20, 1000)).exponent == pytest.approx(-2.0)

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_power_law(np.arange(1, 5.0), np.ones(4))

    def test_nonpositive_values(self):
        t = np.arange(1, 20.0)
        with pytest.raises(FitError, match="positive"):
            fit_power_law(t, np.sin(t))


class TestExponential:
    def test_rate(self):
        t = np.linspace(0, 50, 60)
        fit = fit_exponential(t, 3 * np.exp(-0.2 * t))
        assert fit.rate == pytest.approx(0.2)
        assert fit.kind == "exponential"

    def test_bad_window(self):
        with pytest.raises(FitError):
            fit_exponential(np.arange(20.0), np.ones(20), (5, 5))


def test_ratefit_validation():
    with pytest.raises(ValueError):
        RateFit(1.0, 1.0, (2, 1), 0.0, 1.0)
    assert RateFit(-1.0, 1.0, (1, 2), 0.0, 1.0).as_dict()["window"] == [1, 2]
