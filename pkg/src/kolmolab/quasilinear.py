"""Quasilinear approximate solution built from the linearized Euler flow.

The pipeline is

1. Morse transform of the shear, ``V(y) = a cos(theta(y)) + d``;
2. transport each x-mode of the initial data through ``theta``;
3. linearized Euler evolution to the rescaled time ``a t_*``;
4. composition back with ``theta``, phase ``e^{-ikd t_*}`` and the damping
   factor ``exp(-nu k^2 gamma_1(t) |V'|^2)``;
5. restriction to ``|k| <= nu^{-1/3}``.

The error ``Er_L`` of the resulting field in the linearized Navier-Stokes
equation is measured with spectral space derivatives and 4th-order central
time differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np
from scipy.optimize import brentq

from .linear_euler import evolve_linearized_euler
from .spectral import Field2D, ModeFunction, ShearProfile, TorusGrid, from_grid, to_grid

__all__ = [
    "MorseData",
    "morse_transform",
    "t_star",
    "gamma1",
    "gamma1_series",
    "timescales",
    "lambda_star",
    "eta",
    "ApproxSolution",
    "build_approx_solution",
    "split_approx",
    "error_shapes",
    "ErrorLedger",
    "error_ledger",
    "single_mode_initial",
]


# -- Morse transform ---------------------------------------------------------------


@dataclass(frozen=True)
class MorseData:
    """``V = a cos(theta) + d`` with ``theta`` a degree-one circle map.

    ``theta`` is evaluated pointwise from closed forms; ``samples`` holds
    ``theta(y_j) - y_j`` on the construction grid, whose trigonometric
    interpolant gives a smooth periodic representation.
    """

    profile: ShearProfile
    a: float
    d: float
    y1: float
    y2: float
    grid_size: int
    samples: np.ndarray = field(repr=False)

    def _drop(self, y: np.ndarray, y0: float) -> np.ndarray:
        """``V(y0) - V(y)`` without cancellation: ``e^{in y0} - e^{in y} = 2i e^{in m} sin(n h)``."""
        n = self.profile.n
        m = 0.5 * (y + y0)
        h = 0.5 * (y0 - y)
        terms = 2j * np.exp(1j * np.multiply.outer(m, n)) * np.sin(np.multiply.outer(h, n))
        return np.real(terms @ self.profile.coeffs)

    def theta(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        # lift into the fundamental period (y2 - 2 pi, y2]
        shift = np.ceil((y - self.y2) / (2 * np.pi))
        z = y - 2 * np.pi * shift
        up = 1.0 - np.clip(self._drop(z, self.y1) / self.a, 0.0, 2.0)  # tilde V
        near_max = up >= 0
        hi = np.clip(self._drop(z, self.y1) / (2 * self.a), 0.0, 1.0)
        lo = np.clip(-self._drop(z, self.y2) / (2 * self.a), 0.0, 1.0)
        ac = np.where(near_max, 2 * np.arcsin(np.sqrt(hi)), np.pi - 2 * np.arcsin(np.sqrt(lo)))
        sign = np.where(z >= self.y1, 1.0, -1.0)
        return sign * ac + 2 * np.pi * shift

    def theta_inverse(self, z) -> np.ndarray:
        """Solve ``theta(y) = z`` branchwise by bracketed root finding."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.empty_like(z)
        for i, zi in enumerate(z):
            shift = math.floor((zi + math.pi) / (2 * math.pi))
            r = zi - 2 * math.pi * shift  # in [-pi, pi)
            if r >= 0:
                lo, hi = self.y1, self.y2
            else:
                lo, hi = self.y2 - 2 * math.pi, self.y1
            if r == 0.0:
                root = self.y1
            elif r == -math.pi:
                root = self.y2 - 2 * math.pi
            else:
                root = brentq(lambda y: float(self.theta(y)) - r, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            out[i] = root + 2 * math.pi * shift
        return out

    def residual(self, M: int = 4096) -> float:
        y = 2 * np.pi * np.arange(M) / M
        return float(np.abs(self.profile.V(y) - self.a * np.cos(self.theta(y)) - self.d).max())

    def deviation(self) -> float:
        """``sup |theta(y) - y|`` on the construction grid."""
        return float(np.abs(self.samples).max())


def morse_transform(profile: ShearProfile, grid_size: int = 1024) -> MorseData:
    """Construct ``(a, d, theta)`` for a shear with one maximum near 0 and one minimum near pi."""
    y1, y2 = profile.y1, profile.y2
    if not (profile.d2V(y1) < 0 < profile.d2V(y2)):
        raise ValueError("critical points are degenerate; the shear is too far from cos y")
    # V must decrease on (y1, y2) and increase on (y2 - 2 pi, y1)
    ys = np.linspace(y1, y2, 2049)[1:-1]
    yr = np.linspace(y2 - 2 * np.pi, y1, 2049)[1:-1]
    if np.any(profile.dV(ys) >= 0) or np.any(profile.dV(yr) <= 0):
        raise ValueError("shear is not monotone between its critical points")
    a = 0.5 * (profile.M - profile.m)
    d = 0.5 * (profile.M + profile.m)
    data = MorseData(profile, float(a), float(d), float(y1), float(y2), grid_size, np.zeros(grid_size))
    y = 2 * np.pi * np.arange(grid_size) / grid_size
    samples = data.theta(y) - y
    samples.setflags(write=False)
    return MorseData(profile, float(a), float(d), float(y1), float(y2), grid_size, samples)


# -- time factors ------------------------------------------------------------------


def t_star(t, nu: float):
    """``(1 - e^{-nu t}) / nu``."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    t = np.asarray(t, dtype=float)
    return -np.expm1(-nu * t) / nu


SERIES_SWITCH = 0.05


def gamma1_series(t: float, nu: float, terms: int = 30) -> float:
    """Taylor series ``nu^{-3} sum_{m>=3} (-1)^{m+1} (2^{m-1} - 2) x^m / m!`` with ``x = nu t``."""
    x = nu * t
    total = 0.0
    fact = 2.0
    for m in range(3, 3 + terms):
        fact *= m
        total += (-1) ** (m + 1) * (2.0 ** (m - 1) - 2.0) * x**m / fact
    return total / nu**3


def gamma1(t, nu: float):
    """``int_0^t t_*(s)^2 ds``; closed form, or its Taylor series when ``nu t`` is small.

    The series is used below ``nu t = 0.05`` (well above the 1e-4 needed to
    avoid outright cancellation) so the closed form never loses more than a
    few digits.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be non-negative")
    x = nu * t_arr
    closed = (t_arr + (-np.expm1(-2 * x)) / (2 * nu) - 2 * (-np.expm1(-x)) / nu) / nu**2
    out = np.where(x < SERIES_SWITCH, np.vectorize(lambda s: gamma1_series(s, nu))(t_arr), closed)
    return float(out) if np.ndim(out) == 0 else out


def timescales(nu: float) -> Dict[str, float]:
    return {"T0": nu ** (-1 / 6), "T1": nu ** (-4 / 9), "T2": 1.0 / nu}


def lambda_star(nu: float, alpha: float) -> np.ndarray:
    """Positive members of ``[-nu^{-1/3}, nu^{-1/3}] cap alpha Z minus {0}`` (negatives are mirrors)."""
    jmax = int(math.floor(nu ** (-1 / 3) / alpha + 1e-12))
    return alpha * np.arange(1, jmax + 1)


def _mollifier(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def eta(s):
    """Smooth cutoff, ``1`` on ``|s| <= 1`` and ``0`` on ``|s| >= 2``:
    ``eta = g(2 - |s|) / (g(2 - |s|) + g(|s| - 1))`` with ``g(x) = exp(-1/x)`` for ``x > 0``."""
    a = np.abs(np.asarray(s, dtype=float))
    p = _mollifier(2.0 - a)
    q = _mollifier(a - 1.0)
    return p / (p + q)


# -- approximate solution ----------------------------------------------------------


@dataclass(frozen=True)
class ApproxSolution:
    """``w_{k,2}(t, y_j)`` on the y-grid for each positive ``k`` in ``Lambda_*``."""

    nu: float
    times: np.ndarray
    ks: np.ndarray
    y: np.ndarray
    w2: np.ndarray  # (len(times), len(ks), Ny)
    profile: ShearProfile
    morse: MorseData
    provenance: dict = field(default_factory=dict)

    def mode_coeffs(self, N: int | None = None) -> np.ndarray:
        """y-Fourier coefficients of ``w_{k,2}``, shape (times, ks, 2N+1)."""
        Ny = self.y.size
        N = N or Ny // 2 - 1
        return from_grid(self.w2, N)

    def field(self, i: int, grid: TorusGrid) -> Field2D:
        c = self.mode_coeffs()
        return Field2D.from_modes(grid, {float(k): ModeFunction(k, c[i, j]) for j, k in enumerate(self.ks)})


def _composition_matrix(theta_vals: np.ndarray, N: int) -> np.ndarray:
    return np.exp(1j * np.multiply.outer(theta_vals, np.arange(-N, N + 1)))


def build_approx_solution(omega0: Field2D, profile: ShearProfile, nu: float, t_grid: Sequence[float],
                          Ny: int | None = None, tol: float = 1e-11) -> ApproxSolution:
    """Assemble ``w_{k,2}`` for ``k`` in ``Lambda_*`` at the requested times.

    ``omega0`` must have zero x-average.  Composition with ``theta`` and with
    its inverse is done by exact trigonometric evaluation of the Fourier series
    at the mapped points.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    if np.abs(omega0.coeffs[omega0.Kx]).max(initial=0.0) > 1e-12 * max(1.0, np.abs(omega0.coeffs).max()):
        raise ValueError("omega0 must have zero x-average; split the shear part off first")
    t = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t) <= 0) or t[0] < 0:
        raise ValueError("t_grid must be non-negative and strictly increasing")
    morse = morse_transform(profile)
    if morse.residual() > 1e-8:
        raise ValueError(f"Morse residual {morse.residual():.2e} exceeds 1e-8")
    Ny = Ny or omega0.grid.Ny
    N = Ny // 2 - 1
    y = 2 * np.pi * np.arange(Ny) / Ny
    th = morse.theta(y)
    th_inv = morse.theta_inverse(y)
    E_th = _composition_matrix(th, N)
    dV2 = profile.dV(y) ** 2
    ks = lambda_star(nu, omega0.grid.alpha)
    ts = t_star(t, nu)
    g1 = np.atleast_1d(gamma1(t, nu))
    tau = morse.a * ts
    out = np.zeros((t.size, ks.size, Ny), dtype=complex)
    interp = 0.0
    for j, k in enumerate(ks):
        try:
            w0k = omega0.mode(k).resized(N)
        except KeyError:
            continue
        if not np.any(w0k.coeffs):
            continue
        # tilde w_0(z) = w_0(theta^{-1}(z)), sampled at z_j = y_j
        tw0 = ModeFunction(k, from_grid(w0k(th_inv), N))
        # roundtrip estimate of the transport error
        interp = max(interp, float(np.abs(tw0(th) - w0k(y)).max()))
        if tau[0] > 0:
            states = evolve_linearized_euler(tw0, np.concatenate([[0.0], tau]), tol).states[1:]
        else:
            states = evolve_linearized_euler(tw0, tau, tol).states
        w1 = (states @ E_th.T) * np.exp(-1j * k * morse.d * ts)[:, None]
        out[:, j, :] = w1 * np.exp(-nu * k * k * g1[:, None] * dV2[None, :])
    prov = {"morse_a": morse.a, "morse_d": morse.d, "transport_error": interp, "N": N}
    return ApproxSolution(nu, t, ks, y, out, profile, morse, prov)


def split_approx(sol: ApproxSolution):
    """``(w_{k,3}, w_{k*})`` with ``w_{k,3} = eta(sqrt(t) V') w_{k,2}``."""
    dV = sol.profile.dV(sol.y)
    cut = eta(np.sqrt(sol.times)[:, None] * dV[None, :])[:, None, :]
    w3 = cut * sol.w2
    return w3, sol.w2 - w3


# -- error ledger ------------------------------------------------------------------


def error_shapes(t, nu: float) -> np.ndarray:
    """Sum ``nu <t> <nu t^3>^{-1} + nu^{1/3} <t>^{-2} + <t>^{-2} |nu t^3|^{1/2}``."""
    t = np.asarray(t, dtype=float)
    br = np.sqrt(1 + t * t)
    bn = np.sqrt(1 + (nu * t**3) ** 2)
    return nu * br / bn + nu ** (1 / 3) / br**2 + np.sqrt(nu * t**3) / br**2


@dataclass
class ErrorLedger:
    t: np.ndarray
    er_l2: np.ndarray
    shape: np.ndarray
    envelope: np.ndarray  # er / (shape * ||omega0||_{H^3})
    envelope_c: float
    sup_dx_omega: np.ndarray
    sup_uy: np.ndarray
    differencing_error: np.ndarray
    flagged: bool
    recommended_dt: float | None
    dt: float
    Ny: int


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def error_ledger(omega0: Field2D, profile: ShearProfile, nu: float, t_eval: Sequence[float], dt: float,
                 Ny: int | None = None, tol: float = 1e-11) -> ErrorLedger:
    """``||Er_L(t)||_{L^2}`` against the summed envelope shapes.

    Each evaluation time needs the approximate solution at ``t + j dt`` for
    ``|j| <= 4``: the ``j = +-1, +-2`` values give the 4th-order derivative
    and the ``j = +-2, +-4`` values the same stencil at ``2 dt``, whose
    difference (divided by 15) estimates the differencing error.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.min() - 4 * dt < 0:
        raise ValueError("t_eval must leave room for the time stencil (t >= 4 dt)")
    offs = np.arange(-4, 5)
    all_t = np.unique(np.round((t_eval[:, None] + offs[None, :] * dt).ravel(), 12))
    sol = build_approx_solution(omega0, profile, nu, all_t, Ny, tol)
    Ny = sol.y.size
    N = Ny // 2 - 1
    n = np.arange(-N, N + 1).astype(float)
    C = sol.mode_coeffs(N)  # (T, K, 2N+1)
    Vpad = profile.sample(2 * Ny)
    h3 = omega0.sobolev_norm(3)
    norm0 = h3 if h3 > 0 else 1.0
    ks = sol.ks

    def idx(tt):
        return int(np.argmin(np.abs(all_t - tt)))

    er, dif, sdx, suy = [], [], [], []
    for te in t_eval:
        ii = [idx(te + o * dt) for o in offs]
        c0 = C[ii[4]]
        d1 = sum(w * C[ii[4 + o]] for w, o in zip(_D1, (-2, -1, 0, 1, 2))) / dt
        d2 = sum(w * C[ii[4 + 2 * o]] for w, o in zip(_D1, (-2, -1, 0, 1, 2))) / (2 * dt)
        a = n[None, :] ** 2 + ks[:, None] ** 2
        lap = -a * c0
        phi = -c0 / a
        # e^{-nu t} V d_x (w + phi); the product is formed on a doubled grid, which is
        # alias-free because V is band-limited with P << N
        g = to_grid(c0 + phi, 2 * Ny)
        prod = from_grid(Vpad[None, :] * g, N)
        adv = math.exp(-nu * te) * 1j * ks[:, None] * prod
        res = d1 - nu * lap + adv
        # both +-k contribute equally to the L^2 norm of a real field
        er.append(math.sqrt(2.0 * float(np.sum(np.abs(res) ** 2))))
        dif.append(math.sqrt(2.0 * float(np.sum(np.abs(d1 - d2) ** 2))) / 15.0)
        sdx.append(_sup_real(ks, c0 * 1j * ks[:, None], Ny))
        suy.append(_sup_real(ks, 1j * ks[:, None] * phi, Ny))
    er = np.array(er)
    dif = np.array(dif)
    shape = error_shapes(t_eval, nu)
    env = er / (shape * norm0)
    finite = er > 0
    flagged = bool(np.any(dif[finite] > 0.1 * er[finite]))
    rec = None
    if flagged:
        worst = float(np.max(dif[finite] / er[finite]))
        rec = float(dt * (0.05 / worst) ** 0.25)
    return ErrorLedger(t_eval, er, shape, env, float(env.max()) if env.size else 0.0, np.array(sdx),
                       np.array(suy), dif, flagged, rec, float(dt), int(Ny))


def _sup_real(ks: np.ndarray, coeffs: np.ndarray, Ny: int, Nx_per_k: int = 8) -> float:
    """``sup_{x,y} |sum_k c_k(y) e^{ikx} + c.c.|`` sampled on a physical grid."""
    vals = to_grid(coeffs, Ny)  # (K, Ny)
    kmax = max(1, len(ks))
    Mx = Nx_per_k * (kmax + 1)
    x = np.arange(Mx) * 2 * np.pi / (Mx * (ks[0] if ks.size else 1.0))
    field = 2.0 * np.real(np.exp(1j * np.outer(x, ks)) @ vals)
    return float(np.abs(field).max())


def single_mode_initial(grid: TorusGrid, amplitude: float = 1.0, ky: int = 1) -> Field2D:
    """``cos(alpha x) cos(ky y)`` scaled so its homogeneous H^3 norm equals ``amplitude``."""
    f = Field2D.from_function(grid, lambda X, Y: np.cos(grid.alpha * X) * np.cos(ky * Y))
    return f.with_coeffs(f.coeffs * (amplitude / f.sobolev_norm(3)))
