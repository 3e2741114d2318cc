"""Linearized Euler flow around the Kolmogorov shear, one x-wavenumber at a time.

The evolution ``d/dt w = -i k B w`` with ``B = cos y (1 + Delta_k^{-1})`` is
integrated in Fourier coefficients.  ``B`` acts in O(N) (a diagonal weight
followed by the two-term ``cos y`` convolution), and the truncated ``W B``
with ``W = diag(1 - 1/(n^2+k^2))`` is exactly symmetric, so the star norm is a
genuine invariant of the discrete flow and measures integrator error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import roots_legendre

from .fitting import FitError, RateFit, fit_power_law
from .operators import build_omega1_operator, lambda3_symbol
from .spectral import ModeFunction, from_grid, star_weight, to_grid

__all__ = [
    "apply_B",
    "initial_profile",
    "LinearTrajectory",
    "evolve_linearized_euler",
    "propagate",
    "profile_series",
    "measure_rates",
    "REFERENCE_EXPONENTS",
    "Omega1Residual",
    "omega1_residual",
    "GreenSample",
    "PhaseUnresolved",
    "green_functions",
    "required_quad_points",
]


def apply_B(coeffs: np.ndarray, k: float) -> np.ndarray:
    """``B g`` for coefficient arrays ``g`` indexed by ``n = -N..N`` on the last axis."""
    N = (coeffs.shape[-1] - 1) // 2
    w = coeffs * star_weight(k, np.arange(-N, N + 1))
    out = np.zeros_like(w)
    out[..., 1:] += 0.5 * w[..., :-1]
    out[..., :-1] += 0.5 * w[..., 1:]
    return out


def initial_profile(preset: str, k: float, N: int, seed: int = 0) -> ModeFunction:
    """Named initial data.

    ``smooth``: coefficients ``exp(-0.6|n|)`` with seeded random phases, ``|n| <= 12``.
    ``cos``: ``cos y``.  ``bump``: ``exp(cos(y - 0.7)) - I_0(1)``.
    """
    if preset == "smooth":
        rng = np.random.default_rng(seed)
        c = np.zeros(2 * N + 1, dtype=complex)
        m = min(12, N)
        n = np.arange(-m, m + 1)
        c[N - m : N + m + 1] = np.exp(-0.6 * np.abs(n)) * np.exp(2j * np.pi * rng.random(n.size))
        return ModeFunction(k, c)
    if preset == "cos":
        return ModeFunction.from_function(k, N, np.cos)
    if preset == "bump":
        return ModeFunction.from_function(k, N, lambda y: np.exp(np.cos(y - 0.7)))
    raise ValueError(f"unknown initial-data preset {preset!r}; choose smooth, cos or bump")


@dataclass(frozen=True)
class LinearTrajectory:
    k: float
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 2N+1)
    conserved_log: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.states.shape[0] != t.size:
            raise ValueError("one state per time is required")

    @property
    def N(self) -> int:
        return (self.states.shape[1] - 1) // 2

    def state(self, i: int) -> ModeFunction:
        return ModeFunction(self.k, self.states[i])

    @property
    def star_drift(self) -> float:
        s0 = self.conserved_log[0]
        if s0 == 0:
            return float(np.abs(self.conserved_log).max())
        return float(np.abs(self.conserved_log / s0 - 1.0).max())


def _star_norms(states: np.ndarray, k: float) -> np.ndarray:
    N = (states.shape[-1] - 1) // 2
    w = star_weight(k, np.arange(-N, N + 1))
    return np.sqrt(np.sum(np.abs(states) ** 2 * w, axis=-1))


def evolve_linearized_euler(omega0: ModeFunction, t_grid: Sequence[float], tol: float = 1e-10) -> LinearTrajectory:
    """Integrate ``w' = -i k B w`` with an adaptive 8th-order Runge-Kutta scheme.

    ``t_grid`` lists output times, the first being the initial time.  The step
    size is capped at ``1/(|k| max|b|) = 1/|k|`` so that every oscillation is
    sampled.
    """
    k = omega0.k
    if abs(k) <= 1.0:
        raise ValueError(f"linearized Euler around cos y needs |k| > 1, got k={k}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    y0 = np.asarray(omega0.coeffs, dtype=complex)
    if t.size == 1 or not np.any(y0):
        states = np.repeat(y0[None, :], t.size, axis=0)
        return LinearTrajectory(k, t, states, _star_norms(states, k))

    def rhs(_, w):
        return -1j * k * apply_B(w, k)

    scale = float(np.abs(y0).max())
    sol = solve_ivp(rhs, (t[0], t[-1]), y0, method="DOP853", t_eval=t, rtol=tol,
                    atol=tol * scale * 1e-3, max_step=1.0 / abs(k))
    if sol.status != 0:
        reached = sol.t[-1] if sol.t.size else t[0]
        raise RuntimeError(f"linearized Euler integration aborted near t={reached:g}: {sol.message}")
    states = sol.y.T.copy()
    return LinearTrajectory(k, t, states, _star_norms(states, k))


def propagate(coeffs: np.ndarray, k: float, h: float, tol: float = 1e-17) -> np.ndarray:
    """``exp(-i k B h) g`` by its Taylor series; intended for short steps ``|k h| <~ 1``."""
    term = np.asarray(coeffs, dtype=complex).copy()
    out = term.copy()
    ref = max(np.abs(out).max(), 1e-300)
    for j in range(1, 200):
        term = (-1j * k * h / j) * apply_B(term, k)
        out = out + term
        if np.abs(term).max() <= tol * ref:
            return out
    raise RuntimeError("Taylor propagation did not converge; shorten h")


# -- diagnostics -------------------------------------------------------------------


REFERENCE_EXPONENTS = {
    "psi_sup": -2.0,
    "dy_profile_psi_sup": -1.2,
    "omega_at_0": -1.0,
    "omega_at_pi": -1.0,
    "profile_H2": 0.0,
}


def profile_series(traj: LinearTrajectory, M: int | None = None) -> Dict[str, np.ndarray]:
    """Time series of the decay diagnostics on an ``M``-point physical grid.

    ``d_y(e^{iktb} psi)`` is evaluated as ``e^{iktb}(d_y psi - i k t sin(y) psi)``
    so no product needs to be resolved in Fourier space.
    """
    k, N = traj.k, traj.N
    M = M or 4 * N + 4
    n = np.arange(-N, N + 1).astype(float)
    y = 2 * np.pi * np.arange(M) / M
    sym = n**2 + k * k
    W = traj.states
    psi = -W / sym
    psi_g = to_grid(psi, M)
    dpsi_g = to_grid(1j * n * psi, M)
    om_g = to_grid(W, M)
    t = traj.times[:, None]
    dprof = dpsi_g - 1j * k * t * np.sin(y)[None, :] * psi_g
    prof = np.exp(1j * k * t * np.cos(y)[None, :]) * om_g
    pc = from_grid(prof, M // 2 - 1)
    pn = np.arange(-(M // 2 - 1), M // 2).astype(float)
    omega0 = W.sum(axis=1)
    omegapi = (W * (-1.0) ** np.abs(n)).sum(axis=1)
    return {
        "t": traj.times.copy(),
        "psi_sup": np.abs(psi_g).max(axis=1),
        "dy_profile_psi_sup": np.abs(dprof).max(axis=1),
        "omega_at_0": np.abs(omega0),
        "omega_at_pi": np.abs(omegapi),
        "omega_L2": np.linalg.norm(W, axis=1),
        "star_norm": traj.conserved_log.copy(),
        "profile_H1": np.sqrt(np.sum(np.abs(pc) ** 2 * (pn**2 + k * k), axis=1)),
        "profile_H2": np.sqrt(np.sum(np.abs(pc) ** 2 * (pn**2 + k * k) ** 2, axis=1)),
    }


def default_window(k: float, t_end: float) -> tuple:
    return (max(10.0, 2 * k * k), float(t_end))


def measure_rates(traj: LinearTrajectory, window: tuple | None = None, M: int | None = None) -> Dict[str, RateFit]:
    """Power-law fits of the decay diagnostics with their reference exponents in
    :data:`REFERENCE_EXPONENTS`.

    The window must span at least one decade and begin at or after ``k^2``.
    """
    win = default_window(traj.k, traj.times[-1]) if window is None else tuple(map(float, window))
    if win[0] < traj.k**2 or win[1] < 10 * win[0] * (1 - 1e-12):
        raise FitError(f"rate window {win} must start at t >= k^2 = {traj.k**2:g} and span a decade")
    if win[1] > traj.times[-1] * (1 + 1e-12):
        raise FitError(f"rate window {win} extends past the trajectory end {traj.times[-1]:g}")
    series = profile_series(traj, M)
    return {name: fit_power_law(series["t"], series[name], win) for name in REFERENCE_EXPONENTS}


# -- almost-conserved quantity -----------------------------------------------------


@dataclass(frozen=True)
class Omega1Residual:
    """Relative residual of the evolution law for ``w_1``; ``flag`` marks an absolute value."""

    t: float
    dt: float
    value: float
    absolute: float
    flag: bool = False
    convention: str = "physical"


_STENCIL = {
    3: (np.array([-1, 1]), np.array([-0.5, 0.5])),
    5: (np.array([-2, -1, 1, 2]), np.array([1, -8, 8, -1]) / 12.0),
}


def omega1_residual(traj: LinearTrajectory, t: float, dt: float = 0.05, stencil: int = 5,
                    margin: int = 8, rescaled: bool = False) -> Omega1Residual:
    """Residual of ``(d_t + i k B) w_1 = -4 t k^4 Lambda_3 w`` where
    ``w_1 = (Delta_k + i k t Lambda_1 - k^2 t^2 (1 - B^2)) w``.

    The state at ``t`` is propagated exactly from the nearest earlier
    trajectory time, stencil neighbours are obtained the same way, and
    ``d_t w_1`` is a central difference of order ``stencil - 1``.  With
    ``rescaled=True`` the same law is checked in the variable ``tau = k t``,
    where it reads ``(d_tau + i B) w_1 = -4 tau k^2 Lambda_3 w``.
    """
    k, N = traj.k, traj.N
    if stencil not in _STENCIL:
        raise ValueError("stencil must be 3 or 5")
    offs, wts = _STENCIL[stencil]
    if t - offs.max() * dt < traj.times[0] - 1e-14 or dt <= 0:
        raise ValueError("t needs neighbours inside the trajectory for differencing")
    i0 = int(np.searchsorted(traj.times, t, side="right") - 1)
    i0 = max(i0, 0)
    base = traj.states[i0]
    h0 = t - traj.times[i0]
    wt = _propagate_long(base, k, h0)

    def w1(tt, w):
        return build_omega1_operator(k, tt, N, margin).entries @ w

    if rescaled:
        # tau = k t: d_tau = d_t / k, so divide the time derivative by k.
        scale_t = 1.0 / k
        rhs_coeff = -4 * (k * t) * k * k
        bterm = 1j * apply_B(w1(t, wt), k)
    else:
        scale_t = 1.0
        rhs_coeff = -4 * t * k**4
        bterm = 1j * k * apply_B(w1(t, wt), k)
    deriv = np.zeros_like(wt)
    for o, c in zip(offs, wts):
        deriv = deriv + c * w1(t + o * dt, propagate(wt, k, o * dt))
    deriv *= scale_t / dt
    target = rhs_coeff * lambda3_symbol(k, np.arange(-N, N + 1)) * wt
    res = deriv + bterm - target
    sl = slice(2 * margin, 2 * N + 1 - 2 * margin)
    num = float(np.linalg.norm(res[sl]))
    den = float(np.linalg.norm(target[sl]))
    conv = "rescaled" if rescaled else "physical"
    if den < 1e-300 or den < 1e-14 * max(float(np.linalg.norm(wt)), 1e-300):
        return Omega1Residual(float(t), float(dt), num, num, True, conv)
    return Omega1Residual(float(t), float(dt), num / den, num, False, conv)


def _propagate_long(w: np.ndarray, k: float, h: float) -> np.ndarray:
    if h == 0:
        return np.array(w, dtype=complex)
    steps = max(1, int(math.ceil(abs(k * h) / 0.5)))
    for _ in range(steps):
        w = propagate(w, k, h / steps)
    return w


# -- oscillatory Green functions ---------------------------------------------------


class PhaseUnresolved(ValueError):
    def __init__(self, needed: int, given: int):
        super().__init__(f"quad_points={given} under-resolves the phase t*b(y); need at least {needed}")
        self.needed = needed
        self.given = given


@dataclass(frozen=True)
class GreenSample:
    t: float
    k: float
    W1: complex
    W2: complex
    y: np.ndarray
    f1p: np.ndarray
    f1m: np.ndarray
    f2p: np.ndarray
    f2m: np.ndarray
    wronskian1: float = field(default=0.0)
    wronskian2: float = field(default=0.0)

    @property
    def envelopes(self) -> Dict[str, np.ndarray]:
        return {name: np.abs(getattr(self, name)) for name in ("f1p", "f1m", "f2p", "f2m")}

    def envelope_ratio_1(self) -> float:
        """``max |f_{1+}(y)| t (t^{-1/2} + y_+)`` over the sample."""
        yp = np.maximum(self.y, 0.0)
        return float(np.max(np.abs(self.f1p) * self.t * (self.t**-0.5 + yp)))

    def envelope_ratio_2(self) -> float:
        """``max |f_{2+}(y)| (t^{-1/2} + y_+)^3 / (t^{-1/2} + y_-)^2`` over the sample."""
        s = self.t**-0.5
        yp, ym = np.maximum(self.y, 0.0), np.maximum(-self.y, 0.0)
        return float(np.max(np.abs(self.f2p) * (s + yp) ** 3 / (s + ym) ** 2))


GAUSS_ORDER = 8
POINTS_PER_PERIOD = 20


def required_quad_points(t: float, k: float) -> int:
    """Smallest node count giving ``POINTS_PER_PERIOD`` nodes per local period of ``e^{itb}``."""
    L = 2.0 / abs(k)
    h = 2 * np.pi / (POINTS_PER_PERIOD * t * math.sin(1.0 / abs(k)))
    panels = int(math.ceil(L / (h * GAUSS_ORDER)))
    return panels * GAUSS_ORDER


def _cumulative(edges: np.ndarray, func) -> np.ndarray:
    """Integrals of ``func`` over each panel between consecutive ``edges``."""
    x, w = roots_legendre(GAUSS_ORDER)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    return (0.5 * (b - a)[:, 0]) * (func(nodes) @ w)


def green_functions(t: float, k: float, quad_points: int | None = None) -> GreenSample:
    """Green-function building blocks of the ODE ``(d_y + i t b') d_y f = i t b f`` on
    ``I = [-1/|k|, 1/|k|]`` with ``b = cos y``.

    Integrals use composite Gauss-Legendre panels (order 8) with cumulative
    sums, so ``f_{1+}(y) = e^{-itb(y)} int_y^{1/|k|} e^{itb}`` is exact at the
    panel edges where it is sampled.  ``f_{1-}`` and ``f_{2-}`` are integrated
    from the left end independently, which makes the Wronskian identities
    ``f_{1+} + f_{1-} = e^{-itb} W_1`` and ``f_{2+} + f_{2-} = f_2 W_2`` real
    checks of the quadrature.
    """
    if abs(k) <= 1.0:
        raise ValueError("need |k| > 1")
    if t < k * k:
        raise ValueError(f"need t >= k^2 = {k * k:g}, got t={t:g}")
    needed = required_quad_points(t, k)
    if quad_points is None:
        quad_points = needed
    if quad_points < needed:
        raise PhaseUnresolved(needed, quad_points)
    panels = int(math.ceil(quad_points / GAUSS_ORDER))
    c = 1.0 / abs(k)
    edges = np.linspace(-c, c, panels + 1)

    def f2(y):
        return np.cos(y) - 1.0 + 1.0 / (2j * t)

    g1 = _cumulative(edges, lambda y: np.exp(1j * t * np.cos(y)))
    g2 = _cumulative(edges, lambda y: np.exp(-1j * t * np.cos(y)) / f2(y) ** 2)
    left1 = np.concatenate([[0.0], np.cumsum(g1)])
    right1 = np.concatenate([np.cumsum(g1[::-1])[::-1], [0.0]])
    left2 = np.concatenate([[0.0], np.cumsum(g2)])
    right2 = np.concatenate([np.cumsum(g2[::-1])[::-1], [0.0]])
    W1 = complex(np.sum(g1))
    W2 = complex(np.sum(g2))
    ph = np.exp(-1j * t * np.cos(edges))
    f1p, f1m = ph * right1, ph * left1
    F2 = f2(edges)
    f2p, f2m = F2 * right2, F2 * left2
    wr1 = float(np.abs(f1p + f1m - ph * W1).max())
    wr2 = float(np.abs(f2p + f2m - F2 * W2).max() / max(np.abs(F2 * W2).max(), 1e-300))
    return GreenSample(float(t), float(k), W1, W2, edges, f1p, f1m, f2p, f2m, wr1, wr2)
