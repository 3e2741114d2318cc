"""Least-squares rate fits on log-log and semilog axes."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["RateFit", "FitError", "fit_power_law", "fit_exponential", "MIN_POINTS"]

MIN_POINTS = 8


class FitError(ValueError):
    """Raised when a series cannot support the requested fit."""


@dataclass(frozen=True)
class RateFit:
    """A fitted law ``value ~ prefactor * t**exponent`` (power) or ``prefactor * exp(exponent * t)``.

    For exponential fits ``rate`` is ``-exponent`` so a decaying series has a
    positive rate.
    """

    exponent: float
    prefactor: float
    window: tuple
    stderr: float
    r_squared: float
    kind: str = "power"
    points: int = 0

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise ValueError("window must satisfy t_lo < t_hi")
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")

    @property
    def rate(self) -> float:
        return -self.exponent

    def as_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def _select(t, v, window):
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.shape != v.shape:
        raise FitError("t and values must have the same shape")
    lo, hi = (float(t.min()), float(t.max())) if window is None else map(float, window)
    if not lo < hi:
        raise FitError(f"empty window [{lo}, {hi}]")
    mask = (t >= lo) & (t <= hi)
    if mask.sum() < MIN_POINTS:
        raise FitError(f"window [{lo:g}, {hi:g}] holds {int(mask.sum())} points, need {MIN_POINTS}")
    tv, vv = t[mask], v[mask]
    if not np.all(np.isfinite(vv)) or np.any(vv <= 0):
        raise FitError("fit requires finite positive values")
    return (lo, hi), tv, vv


def _linear(x, y):
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = max(x.size - 2, 1)
    sxx = np.sum((x - x.mean()) ** 2)
    stderr = float(np.sqrt(np.sum(resid**2) / dof / sxx)) if sxx > 0 else float("inf")
    ss_tot = np.sum((y - y.mean()) ** 2)
    # a flat series is fitted exactly; its tiny ss_tot is pure rounding
    flat = ss_tot <= (64 * np.finfo(float).eps * max(1.0, float(np.abs(y).max()))) ** 2 * y.size
    r2 = 1.0 if flat else float(1.0 - np.sum(resid**2) / ss_tot)
    return float(coef[0]), float(coef[1]), stderr, r2


def fit_power_law(t, values, window=None) -> RateFit:
    """Slope of ``log(value)`` against ``log(t)``; requires ``t > 0`` in the window."""
    win, tv, vv = _select(t, values, window)
    if np.any(tv <= 0):
        raise FitError("power-law fit needs t > 0")
    c0, c1, se, r2 = _linear(np.log(tv), np.log(vv))
    return RateFit(c1, float(np.exp(c0)), win, se, r2, "power", int(tv.size))


def fit_exponential(t, values, window=None) -> RateFit:
    """Slope of ``log(value)`` against ``t``."""
    win, tv, vv = _select(t, values, window)
    c0, c1, se, r2 = _linear(tv, np.log(vv))
    return RateFit(c1, float(np.exp(c0)), win, se, r2, "exponential", int(tv.size))
