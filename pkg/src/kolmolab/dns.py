"""Pseudo-spectral Navier-Stokes in vorticity form near the Kolmogorov shear.

The unknown is the vorticity ``Omega`` on ``T_p x T_{2pi}``, advanced by

    d_t Omega - nu Lap Omega + U . grad Omega = 0,   U = grad^perp Lap^{-1} Omega,

with ``grad^perp = (-d_y, d_x)`` so that ``Omega = sin y`` carries ``U = (cos y, 0)``.
Time stepping is the classical integrating-factor RK4: the viscous part is
integrated exactly, the advection term explicitly at 4th order.  Products are
dealiased with the 2/3 rule, which makes the semi-discrete scheme an exact
Galerkin truncation (energy and enstrophy are conserved when ``nu = 0``).

Internally the state is the ``rfft2`` array of the vorticity samples, divided
by the number of points so that entries are the normalised Fourier
coefficients used everywhere else in the package.
"""

from __future__ import annotations

import math
import time as _time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .fitting import FitError, RateFit, fit_exponential, fit_power_law
from .spectral import Field2D, TorusGrid

__all__ = [
    "SimConfig",
    "SimState",
    "SimulationAborted",
    "Solver",
    "PATTERNS",
    "pattern_field",
    "initial_state",
    "step",
    "run_experiment",
    "RunSeries",
    "threshold_scan",
    "ScanRow",
    "enhanced_dissipation_fit",
    "linear_phase_fit",
    "heat_solve_shear",
    "RETURNS_TO_SHEAR",
    "NOT_DECAYED",
    "INCONCLUSIVE",
]

RETURNS_TO_SHEAR = "RETURNS_TO_SHEAR"
NOT_DECAYED = "NOT_DECAYED"
INCONCLUSIVE = "INCONCLUSIVE"

CFL_MAX = 0.5


class SimulationAborted(RuntimeError):
    """Raised when the state stops being finite; carries the last good state."""

    def __init__(self, message: str, last_good: "SimState"):
        super().__init__(message)
        self.last_good = last_good


# -- configuration -----------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    grid: TorusGrid = field(default_factory=TorusGrid)
    nu: float = 2e-3
    t_end: float = 500.0
    cfl: float = 0.4
    max_dt: float = 0.05
    pattern: str = "mode21"
    amplitude_multiplier: float = 1e-3
    seed: int = 0
    output_stride: int = 10

    def __post_init__(self):
        if not 0.0 <= self.nu < 1.0:
            raise ValueError(f"nu must lie in [0, 1), got {self.nu}")
        if not 0.0 < self.cfl <= CFL_MAX:
            raise ValueError(f"CFL number must lie in (0, {CFL_MAX}], got {self.cfl}")
        if self.max_dt <= 0 or self.t_end < 0:
            raise ValueError("max_dt must be positive and t_end nonnegative")
        if self.amplitude_multiplier < 0:
            raise ValueError("amplitude multiplier must be nonnegative")
        if abs(self.grid.dealias_fraction - 2.0 / 3.0) > 1e-12:
            raise ValueError("the solver requires the 2/3 dealiasing rule")
        if self.output_stride < 1:
            raise ValueError("output_stride must be a positive integer")
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown perturbation pattern {self.pattern!r}; known: {sorted(PATTERNS)}")

    @property
    def amplitude(self) -> float:
        """Perturbation size in H^3: the multiplier times ``nu^{1/3}``."""
        return self.amplitude_multiplier * self.nu ** (1.0 / 3.0)


@dataclass
class SimState:
    """Vorticity coefficients (``rfft2`` layout, normalised) at ``time``."""

    coeffs: np.ndarray
    time: float
    grid: TorusGrid
    steps: int = 0
    diagnostics: deque = field(default_factory=lambda: deque(maxlen=256))

    def copy(self) -> "SimState":
        return SimState(self.coeffs.copy(), self.time, self.grid, self.steps, deque(self.diagnostics, maxlen=256))

    def physical(self) -> np.ndarray:
        g = self.grid
        return np.fft.irfft2(self.coeffs * (g.Nx * g.Ny), s=(g.Nx, g.Ny))

    def field(self) -> Field2D:
        """Dealiased coefficients as a :class:`Field2D` (retained modes only)."""
        g = self.grid
        Kx, Ky = g.Kx, g.Ky
        full = np.zeros((2 * Kx + 1, 2 * Ky + 1), dtype=complex)
        rows = np.r_[np.arange(g.Nx - Kx, g.Nx), np.arange(0, Kx + 1)]
        pos = self.coeffs[rows, : Ky + 1]
        full[:, Ky:] = pos
        # negative y-wavenumbers from conjugate symmetry c(-m, -n) = conj(c(m, n))
        full[:, :Ky] = np.conj(pos[::-1, Ky:0:-1])
        return Field2D(g, full, mean_free=True)


# -- perturbation presets ----------------------------------------------------------


def _mode21(X, Y, alpha, rng):
    return np.cos(alpha * X) * np.cos(Y)


def _mode11(X, Y, alpha, rng):
    return np.cos(alpha * X + Y)


def _mode22(X, Y, alpha, rng):
    return np.cos(alpha * X) * np.cos(2 * Y)


def _smooth_random(X, Y, alpha, rng):
    out = np.zeros_like(X)
    for m in range(1, 4):
        for n in range(-4, 5):
            amp = rng.standard_normal() * math.exp(-0.5 * (m * m + n * n))
            out += amp * np.cos(alpha * m * X + n * Y + rng.uniform(0, 2 * math.pi))
    return out


PATTERNS: Dict[str, Callable] = {
    "mode21": _mode21,
    "mode11": _mode11,
    "mode22": _mode22,
    "smooth_random": _smooth_random,
}


def pattern_field(grid: TorusGrid, name: str, seed: int = 0) -> np.ndarray:
    """Physical samples of a named preset, scaled to unit homogeneous H^3 norm."""
    if name not in PATTERNS:
        raise ValueError(f"unknown perturbation pattern {name!r}")
    rng = np.random.default_rng(seed)
    X, Y = np.meshgrid(grid.x(), grid.y(), indexing="ij")
    vals = PATTERNS[name](X, Y, grid.alpha, rng)
    f = Field2D.from_physical(grid, vals)
    norm = f.sobolev_norm(3.0)
    if norm == 0:
        raise ValueError(f"pattern {name!r} has no nonzero modes on this grid")
    return f.to_physical() / norm


# -- solver ------------------------------------------------------------------------


class Solver:
    """Wavenumber tables and the integrating-factor RK4 step for one grid."""

    def __init__(self, grid: TorusGrid, nu: float):
        self.grid = grid
        self.nu = nu
        Nx, Ny = grid.Nx, grid.Ny
        m = np.fft.fftfreq(Nx, 1.0 / Nx)
        n = np.fft.rfftfreq(Ny, 1.0 / Ny)
        self.kx = (grid.alpha * m)[:, None] * np.ones((1, n.size))
        self.ky = np.ones((Nx, 1)) * n[None, :]
        self.k2 = self.kx**2 + self.ky**2
        inv = np.zeros_like(self.k2)
        nz = self.k2 > 0
        inv[nz] = 1.0 / self.k2[nz]
        self.inv_k2 = inv
        self.mask = (np.abs(m)[:, None] <= grid.Kx) & (np.abs(n)[None, :] <= grid.Ky)
        self.mask[0, 0] = False
        self.scale = Nx * Ny
        self._cached_dt = None
        # spectral multipliers, including the transform scaling and the sign of -U.grad
        self._u_op = 1j * self.ky * self.inv_k2 * self.scale
        self._v_op = -1j * self.kx * self.inv_k2 * self.scale
        self._dx_op = 1j * self.kx * self.scale
        self._dy_op = 1j * self.ky * self.scale
        self._out_scale = np.where(self.mask, -1.0 / self.scale, 0.0)

    def _factors(self, dt: float):
        if self._cached_dt != dt:
            self._E = np.exp(-self.nu * self.k2 * dt)
            self._Eh = np.exp(-self.nu * self.k2 * dt / 2)
            self._cached_dt = dt
        return self._E, self._Eh

    def velocity(self, w: np.ndarray):
        s = (self.grid.Nx, self.grid.Ny)
        u = np.fft.irfft2(self._u_op * w, s=s)
        v = np.fft.irfft2(self._v_op * w, s=s)
        return u, v

    def rhs(self, w: np.ndarray) -> np.ndarray:
        """Dealiased ``-U . grad Omega`` in normalised coefficients."""
        s = (self.grid.Nx, self.grid.Ny)
        spec = np.stack([self._u_op * w, self._v_op * w, self._dx_op * w, self._dy_op * w])
        u, v, wx, wy = np.fft.irfft2(spec, s=s, axes=(1, 2))
        out = np.fft.rfft2(u * wx + v * wy)
        out *= self._out_scale
        return out

    def max_dt(self, w: np.ndarray, cfl: float) -> float:
        u, v = self.velocity(w)
        g = self.grid
        rate = np.abs(u).max() * g.Nx / g.p + np.abs(v).max() * g.Ny / (2 * math.pi)
        return math.inf if rate == 0 else cfl / rate

    def advance(self, w: np.ndarray, dt: float) -> np.ndarray:
        E, Eh = self._factors(dt)
        k1 = self.rhs(w)
        k2 = self.rhs(Eh * (w + 0.5 * dt * k1))
        k3 = self.rhs(Eh * w + 0.5 * dt * k2)
        k4 = self.rhs(E * w + dt * Eh * k3)
        new = E * w + (dt / 6.0) * (E * k1 + 2.0 * Eh * (k2 + k3) + k4)
        return _symmetrize(new, self.mask)


def _symmetrize(c: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Bit-exact Hermitian symmetry on the self-conjugate column and zero mean."""
    c = np.where(mask, c, 0.0)
    col = c[:, 0]
    mirror = np.conj(col[(-np.arange(col.size)) % col.size])
    c[:, 0] = 0.5 * (col + mirror)
    c[0, 0] = 0.0
    return c


def initial_state(config: SimConfig, base: Callable | None = None) -> SimState:
    """``Omega_0 = sin y + amplitude * pattern`` (or ``base`` in place of ``sin y``)."""
    g = config.grid
    X, Y = np.meshgrid(g.x(), g.y(), indexing="ij")
    vals = np.sin(Y) if base is None else base(X, Y)
    if config.amplitude > 0:
        vals = vals + config.amplitude * pattern_field(g, config.pattern, config.seed)
    return state_from_physical(g, vals)


def state_from_physical(grid: TorusGrid, values: np.ndarray, time: float = 0.0) -> SimState:
    solver = Solver(grid, 0.0)
    c = np.fft.rfft2(np.asarray(values, dtype=float)) / solver.scale
    return SimState(_symmetrize(c, solver.mask), time, grid)


def step(state: SimState, config: SimConfig, dt: float | None = None, solver: Solver | None = None) -> SimState:
    """One integrating-factor RK4 step; ``dt`` defaults to the CFL policy."""
    solver = solver or Solver(config.grid, config.nu)
    if dt is None:
        dt = min(config.max_dt, solver.max_dt(state.coeffs, config.cfl))
    # overflow is reported through SimulationAborted below, not as warnings
    with np.errstate(over="ignore", invalid="ignore"):
        new = solver.advance(state.coeffs, dt)
    if not np.all(np.isfinite(new)):
        raise SimulationAborted(f"non-finite vorticity at t={state.time + dt:.6g}", state.copy())
    return SimState(new, state.time + dt, state.grid, state.steps + 1, state.diagnostics)


def integrate(state: SimState, config: SimConfig, t_end: float, dt: float, solver: Solver | None = None,
              callback: Callable[[SimState], None] | None = None, stride: int = 1) -> SimState:
    """Fixed-step integration to ``t_end`` (the last step is shortened to land exactly)."""
    solver = solver or Solver(config.grid, config.nu)
    nsteps = max(1, int(math.ceil((t_end - state.time) / dt - 1e-9)))
    h = (t_end - state.time) / nsteps
    for i in range(nsteps):
        state = step(state, config, h, solver)
        if callback is not None and ((i + 1) % stride == 0 or i + 1 == nsteps):
            callback(state)
    return state


# -- diagnostics -------------------------------------------------------------------


def energy(state: SimState) -> float:
    """``||U||^2`` in the normalised convention (``||grad^perp Lap^{-1} Omega||^2``)."""
    s = Solver(state.grid, 0.0)
    return _sum_rfft(np.abs(state.coeffs) ** 2 * s.inv_k2)


def enstrophy(state: SimState) -> float:
    return _sum_rfft(np.abs(state.coeffs) ** 2)


def _sum_rfft(a: np.ndarray) -> float:
    """Sum over the full spectrum from a half spectrum (columns n > 0 count twice)."""
    return float(a[:, 0].sum() + 2.0 * a[:, 1:].sum())


@dataclass
class RunSeries:
    """Time series bundle from :func:`run_experiment`."""

    config: SimConfig
    t: np.ndarray
    omega_neq_L2: np.ndarray
    u_neq_L2: np.ndarray
    shear_deviation_L2: np.ndarray
    depletion_probe_0: np.ndarray
    depletion_probe_pi: np.ndarray
    xi_components: Dict[str, float]
    runtime: float
    dt: float
    final: SimState | None = None

    COLUMNS = ("t", "omega_neq_L2", "u_neq_L2", "shear_deviation_L2", "depletion_probe_0", "depletion_probe_pi")

    def rows(self):
        cols = [getattr(self, c) for c in self.COLUMNS]
        return [tuple(float(c[i]) for c in cols) for i in range(self.t.size)]

    @property
    def xi_norm(self) -> float:
        return float(sum(self.xi_components.values()))


class _Recorder:
    def __init__(self, config: SimConfig, solver: Solver):
        self.config = config
        self.solver = solver
        g = config.grid
        self.rows: List[tuple] = []
        self.xi_samples: List[tuple] = []
        self.y = g.y()
        self.i0 = 0
        self.ipi = g.Ny // 2
        self.absm = np.abs(np.fft.fftfreq(g.Nx, 1.0 / g.Nx))[:, None] * g.alpha

    def __call__(self, state: SimState):
        s, w = self.solver, state.coeffs
        neq = w.copy()
        neq[0, :] = 0.0
        om = math.sqrt(_sum_rfft(np.abs(neq) ** 2))
        un = math.sqrt(_sum_rfft(np.abs(neq) ** 2 * s.inv_k2))
        dev = w.copy()
        dev[0, 1] -= np.exp(-s.nu * state.time) * (-0.5j)  # sin y has c(0,1) = -i/2
        sd = math.sqrt(_sum_rfft(np.abs(dev) ** 2))
        # first nonzero x-mode profile at the critical points y = 0, pi of cos y
        g = state.grid
        row = w[1, :]
        full = np.zeros(g.Ny, dtype=complex)
        full[: row.size] = row
        full[g.Ny - row.size + 1:] = np.conj(w[-1, 1:][::-1])  # c(1,-n) = conj(c(-1,n))
        prof = np.fft.ifft(full) * g.Ny
        p0, ppi = abs(prof[self.i0]), abs(prof[self.ipi])
        self.rows.append((state.time, om, un, sd, p0, ppi))
        self.xi_samples.append((state.time,) + self._xi_terms(w, neq))
        state.diagnostics.append(self.rows[-1])

    def _xi_terms(self, w, neq):
        s = self.solver
        g = self.config.grid
        grad2 = _sum_rfft(np.abs(neq) ** 2 * s.k2)
        damp = _sum_rfft(np.abs(neq) ** 2 * self.absm * s.inv_k2)
        # weight |V'|^{1/2} with V = P_0 U^x taken from the simulated state
        zero = np.zeros_like(w)
        zero[0, :] = w[0, :]
        uzero, _ = s.velocity(zero)
        dV = np.fft.irfft(1j * s.ky[0] * np.fft.rfft(uzero[0]), n=g.Ny)
        weight = np.sqrt(np.abs(dV))[None, :]
        psi = -neq * s.inv_k2
        shape = (g.Nx, g.Ny)
        total = 0.0
        for comp in (s.kx, s.ky):
            f = np.fft.irfft2(-(s.kx * comp) * psi * s.scale, s=shape)  # d_x d_j Lap^{-1}
            total += float(np.mean((weight * f) ** 2))
        return (math.sqrt(_sum_rfft(np.abs(neq) ** 2)), grad2, damp, total)

    def xi_components(self) -> Dict[str, float]:
        if not self.xi_samples:
            return {"linf_L2": 0.0, "viscous": 0.0, "damping": 0.0, "weighted": 0.0}
        a = np.array(self.xi_samples)
        t = a[:, 0]

        def l2(col):
            return math.sqrt(float(np.trapezoid(col, t))) if t.size > 1 else 0.0

        return {
            "linf_L2": float(a[:, 1].max()),
            "viscous": math.sqrt(self.config.nu) * l2(a[:, 2]),
            "damping": l2(a[:, 3]),
            "weighted": l2(a[:, 4]),
        }


def run_experiment(config: SimConfig, dt: float | None = None, keep_final: bool = False) -> RunSeries:
    """Run from ``sin y + amplitude * pattern`` to ``t_end`` logging every ``output_stride`` steps."""
    t0 = _time.perf_counter()
    solver = Solver(config.grid, config.nu)
    state = initial_state(config)
    if dt is None:
        # the flow stays close to the shear, so the initial CFL bound is used throughout
        dt = min(config.max_dt, 0.9 * solver.max_dt(state.coeffs, config.cfl))
    rec = _Recorder(config, solver)
    rec(state)
    if config.t_end > 0:
        state = integrate(state, config, config.t_end, dt, solver, rec, config.output_stride)
    a = np.array(rec.rows)
    return RunSeries(config, *(a[:, i] for i in range(6)), rec.xi_components(),
                     _time.perf_counter() - t0, dt, state if keep_final else None)


# -- fits --------------------------------------------------------------------------


def _positive(t, v):
    """Keep finite positive samples.

    There is no absolute round-off floor to trim: the x-FFT of an x-independent
    field is exactly zero off the k = 0 row, so errors in the nonzero modes stay
    proportional to the perturbation itself.
    """
    t, v = np.asarray(t), np.asarray(v)
    keep = np.isfinite(v) & (v > 0)
    return t[keep], v[keep]


def linear_phase_fit(series: RunSeries, window: tuple[float, float] | None = None) -> RateFit:
    """Power-law fit of ``||Omega_neq||`` over the algebraic-decay phase.

    The default window is ``[nu^{-1/3}, nu^{-1/2}]``.
    """
    nu = series.config.nu
    if window is None:
        window = (nu ** (-1.0 / 3.0), nu ** (-0.5))
    t, v = _positive(series.t, series.omega_neq_L2)
    return fit_power_law(t, v, window)


def enhanced_dissipation_fit(series: RunSeries, nu: float | None = None) -> RateFit:
    """Exponential rate of ``||Omega_neq||`` on ``[nu^{-1/2}, min(t_end, 1/nu)]``."""
    nu = series.config.nu if nu is None else nu
    if nu <= 0:
        raise FitError("enhanced-dissipation fit needs nu > 0")
    lo, hi = nu ** -0.5, min(series.config.t_end, 1.0 / nu)
    if series.t[-1] < hi * (1 - 1e-9) or hi <= lo:
        raise FitError(f"run ends at t={series.t[-1]:.4g}, window needs [{lo:.4g}, {hi:.4g}]")
    if not np.any(series.omega_neq_L2 > 0):
        raise FitError("no nonzero modes: enhanced-dissipation fit is undefined")
    t, v = _positive(series.t, series.omega_neq_L2)
    return fit_exponential(t, v, (lo, hi))


# -- threshold scan ----------------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    nu: float
    multiplier: float
    initial: float
    final: float
    t_check: float
    classification: str
    note: str = ""


def threshold_scan(nu_list: Sequence[float], multiplier_list: Sequence[float], pattern: str = "mode21",
                   base: SimConfig | None = None, require_span: bool = True):
    """Classify each (nu, multiplier) run; returns rows and transition multipliers per nu.

    A run returns to the shear when ``||Omega_neq||`` at ``min(t_end, 1/nu)``
    is below 1% of its initial value.  Blow-up or non-monotone growth far
    above the initial size is reported as inconclusive rather than guessed.
    """
    mults = sorted(float(m) for m in multiplier_list)
    if require_span and (not mults or mults[0] > 0.01 or mults[-1] < 10):
        raise ValueError("multipliers must span at least [0.01, 10]")
    base = base or SimConfig()
    rows: List[ScanRow] = []
    transitions: Dict[float, float] = {}
    for nu in nu_list:
        t_check = min(base.t_end, 1.0 / nu)
        last_ok = None
        first_bad = None
        for mult in mults:
            cfg = replace(base, nu=nu, amplitude_multiplier=mult, pattern=pattern, t_end=t_check)
            if mult == 0:
                rows.append(ScanRow(nu, mult, 0.0, 0.0, t_check, RETURNS_TO_SHEAR, "zero perturbation"))
                last_ok = mult
                continue
            try:
                res = run_experiment(cfg)
            except SimulationAborted as exc:
                rows.append(ScanRow(nu, mult, math.nan, math.nan, t_check, INCONCLUSIVE, str(exc)))
                first_bad = mult if first_bad is None else first_bad
                continue
            init, fin = float(res.omega_neq_L2[0]), float(res.omega_neq_L2[-1])
            if not math.isfinite(fin):
                cls, note = INCONCLUSIVE, "non-finite norm"
            elif fin < 0.01 * init:
                cls, note = RETURNS_TO_SHEAR, ""
            else:
                cls, note = NOT_DECAYED, ""
            rows.append(ScanRow(nu, mult, init, fin, t_check, cls, note))
            if cls == RETURNS_TO_SHEAR and first_bad is None:
                last_ok = mult
            elif cls != RETURNS_TO_SHEAR and first_bad is None:
                first_bad = mult
        if last_ok is not None and first_bad is not None:
            transitions[nu] = math.sqrt(max(last_ok, 1e-300) * first_bad) if last_ok > 0 else first_bad
        else:
            transitions[nu] = math.nan
    return rows, transitions


# -- independent 1D heat check -----------------------------------------------------


def heat_solve_shear(profile0: np.ndarray, nu: float, t: float, rtol: float = 1e-12) -> np.ndarray:
    """Solve ``d_t W = nu W''`` on T_{2pi} by the method of lines (periodic 4th-order FD)."""
    W0 = np.asarray(profile0, dtype=float)
    M = W0.size
    h = 2 * math.pi / M

    def rhs(_t, w):
        return nu * (-np.roll(w, 2) + 16 * np.roll(w, 1) - 30 * w + 16 * np.roll(w, -1) - np.roll(w, -2)) / (12 * h * h)

    sol = solve_ivp(rhs, (0.0, t), W0, method="DOP853", rtol=rtol, atol=rtol * max(1.0, np.abs(W0).max()))
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:, -1]
