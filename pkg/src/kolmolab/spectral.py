"""Torus geometry and Fourier representations.

Everything lives on the torus T_p x T_{2pi} with p = 2*pi*kappa.  A function of
``y`` at fixed x-wavenumber ``k`` is held as its complex Fourier coefficients
``g(n)``, ``|n| <= N``, with the normalised convention

    g(y) = sum_n g(n) exp(i n y),   ||g||^2 = (1/2pi) int |g|^2 dy = sum_n |g(n)|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "TorusGrid",
    "ModeFunction",
    "Field2D",
    "ShearProfile",
    "laplacian_inverse_k",
    "sobolev_norm",
    "project_zero",
    "project_nonzero",
    "star_inner",
    "star_norm",
    "to_grid",
    "from_grid",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def to_grid(coeffs: np.ndarray, M: int | None = None) -> np.ndarray:
    """Evaluate ``sum_n c(n) e^{iny}`` on ``M`` equispaced points ``y_j = 2 pi j / M``.

    ``coeffs`` is indexed by n = -N..N along its last axis.  ``M`` must be at
    least ``2N+1`` so that no aliasing occurs.
    """
    coeffs = np.asarray(coeffs)
    N = (coeffs.shape[-1] - 1) // 2
    if M is None:
        M = 2 * N + 2
    if M < 2 * N + 1:
        raise ValueError(f"grid of {M} points aliases {2 * N + 1} modes")
    buf = np.zeros(coeffs.shape[:-1] + (M,), dtype=complex)
    buf[..., : N + 1] = coeffs[..., N:]
    if N:
        buf[..., M - N :] = coeffs[..., :N]
    return np.fft.ifft(buf, axis=-1) * M


def from_grid(values: np.ndarray, N: int) -> np.ndarray:
    """Inverse of :func:`to_grid`: coefficients ``n = -N..N`` from ``M`` samples."""
    values = np.asarray(values)
    M = values.shape[-1]
    if M < 2 * N + 1:
        raise ValueError(f"{M} samples cannot resolve {2 * N + 1} modes")
    c = np.fft.fft(values, axis=-1) / M
    out = np.empty(values.shape[:-1] + (2 * N + 1,), dtype=complex)
    out[..., N:] = c[..., : N + 1]
    if N:
        out[..., :N] = c[..., M - N :]
    return out


@dataclass(frozen=True)
class TorusGrid:
    """Non-square torus T_p x T_{2pi} with p = 2 pi kappa and base x-wavenumber alpha = 1/kappa."""

    kappa: float = 0.5
    Nx: int = 256
    Ny: int = 256
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa must lie in (0, 1) so that alpha > 1, got {self.kappa}")
        for name in ("Nx", "Ny"):
            v = getattr(self, name)
            if v < 8 or v % 2:
                raise ValueError(f"{name} must be even and >= 8, got {v}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def p(self) -> float:
        return 2.0 * math.pi * self.kappa

    @property
    def alpha(self) -> float:
        return 1.0 / self.kappa

    @property
    def Kx(self) -> int:
        """Largest retained x-mode index m (wavenumber alpha*m)."""
        return int(math.floor(self.dealias_fraction * self.Nx / 2))

    @property
    def Ky(self) -> int:
        return int(math.floor(self.dealias_fraction * self.Ny / 2))

    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * self.p / self.Nx

    def y(self) -> np.ndarray:
        return np.arange(self.Ny) * 2.0 * math.pi / self.Ny


@dataclass(frozen=True)
class ModeFunction:
    """One x-wavenumber slice: coefficients ``coeffs[n + N]`` for ``n = -N..N``."""

    k: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise ValueError("coeffs must be a 1-D array of odd length 2N+1")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        object.__setattr__(self, "coeffs", _frozen(c))
        object.__setattr__(self, "k", float(self.k))

    @property
    def N(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def n(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @classmethod
    def zeros(cls, k: float, N: int) -> "ModeFunction":
        return cls(k, np.zeros(2 * N + 1, dtype=complex))

    @classmethod
    def unit(cls, k: float, N: int, n: int) -> "ModeFunction":
        c = np.zeros(2 * N + 1, dtype=complex)
        c[n + N] = 1.0
        return cls(k, c)

    @classmethod
    def from_function(cls, k: float, N: int, func, M: int | None = None) -> "ModeFunction":
        """Project a callable ``func(y)`` onto modes ``|n| <= N`` by FFT on ``M`` points."""
        M = M or 4 * (N + 1)
        y = 2.0 * np.pi * np.arange(M) / M
        return cls(k, from_grid(np.asarray(func(y), dtype=complex), N))

    def to_grid(self, M: int | None = None) -> np.ndarray:
        return to_grid(self.coeffs, M)

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.exp(1j * np.multiply.outer(y, self.n)) @ self.coeffs

    def with_coeffs(self, coeffs: np.ndarray) -> "ModeFunction":
        return ModeFunction(self.k, coeffs)

    def resized(self, N: int) -> "ModeFunction":
        """Zero-pad or truncate to ``|n| <= N``."""
        out = np.zeros(2 * N + 1, dtype=complex)
        m = min(N, self.N)
        out[N - m : N + m + 1] = self.coeffs[self.N - m : self.N + m + 1]
        return ModeFunction(self.k, out)

    def __add__(self, other: "ModeFunction") -> "ModeFunction":
        _check_same(self, other)
        return ModeFunction(self.k, self.coeffs + other.coeffs)

    def __sub__(self, other: "ModeFunction") -> "ModeFunction":
        _check_same(self, other)
        return ModeFunction(self.k, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "ModeFunction":
        return ModeFunction(self.k, self.coeffs * scalar)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def _check_same(f: ModeFunction, g: ModeFunction) -> None:
    if f.k != g.k:
        raise ValueError(f"mode functions carry different k ({f.k} vs {g.k})")
    if f.N != g.N:
        raise ValueError(f"mode functions carry different truncations ({f.N} vs {g.N})")


def laplacian_inverse_k(g: ModeFunction, tol: float = 1e-14) -> ModeFunction:
    """Solve ``(d_y^2 - k^2) psi = g`` coefficientwise: ``psi(n) = -g(n)/(n^2+k^2)``.

    For ``k = 0`` the mean of ``g`` must vanish; the n = 0 output is set to 0.
    """
    n = g.n
    sym = n.astype(float) ** 2 + g.k**2
    out = np.zeros_like(g.coeffs)
    if g.k == 0.0:
        if abs(g.coeffs[g.N]) > tol * max(1.0, np.abs(g.coeffs).max()):
            raise ValueError("Delta_0 is not invertible on functions with nonzero mean")
        nz = n != 0
        out[nz] = -g.coeffs[nz] / sym[nz]
    else:
        out = -g.coeffs / sym
    return ModeFunction(g.k, out)


def sobolev_norm(g: ModeFunction, s: float) -> float:
    """``||(-Delta_k)^{s/2} g||``; ``s = 1`` gives ``||(d_y, k) g||``."""
    w = g.n.astype(float) ** 2 + g.k**2
    a2 = np.abs(g.coeffs) ** 2
    if s == 0:
        return float(np.sqrt(a2.sum()))
    zero = w == 0.0
    if np.any(zero):
        if s < 0 and np.any(a2[zero] > 0):
            return math.inf
        w = np.where(zero, 1.0, w)
        a2 = np.where(zero, 0.0, a2)
    return float(np.sqrt(np.sum(w**s * a2)))


def star_weight(k: float, n: np.ndarray) -> np.ndarray:
    """Symbol of ``1 + Delta_k^{-1}``."""
    return 1.0 - 1.0 / (np.asarray(n, dtype=float) ** 2 + k * k)


def star_inner(f: ModeFunction, g: ModeFunction) -> complex:
    """``<f, (1 + Delta_k^{-1}) g>``, linear in ``f``; positive definite for ``|k| > 1``."""
    _check_same(f, g)
    if abs(f.k) <= 1.0:
        raise ValueError(f"star inner product needs |k| > 1, got k={f.k}")
    return complex(np.sum(f.coeffs * np.conj(g.coeffs) * star_weight(f.k, f.n)))


def star_norm(f: ModeFunction) -> float:
    return math.sqrt(max(star_inner(f, f).real, 0.0))


@dataclass(frozen=True)
class Field2D:
    """Real scalar field on the torus, stored as coefficients ``c[m + Kx, n + Ky]``.

    The x-wavenumber of row ``m`` is ``alpha * m``.  Reality means
    ``c[-m, -n] = conj(c[m, n])``; it is checked at construction.
    """

    grid: TorusGrid
    coeffs: np.ndarray
    mean_free: bool = True

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        Kx, Ky = c.shape[0] // 2, c.shape[1] // 2
        if c.shape != (2 * Kx + 1, 2 * Ky + 1):
            raise ValueError("coefficient array must have odd dimensions")
        scale = max(1.0, float(np.abs(c).max(initial=0.0)))
        if np.abs(c - np.conj(c[::-1, ::-1])).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("coefficients violate conjugate symmetry (field is not real)")
        c = 0.5 * (c + np.conj(c[::-1, ::-1]))
        if self.mean_free:
            c[Kx, Ky] = 0.0
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def Kx(self) -> int:
        return self.coeffs.shape[0] // 2

    @property
    def Ky(self) -> int:
        return self.coeffs.shape[1] // 2

    @property
    def ks(self) -> np.ndarray:
        return self.grid.alpha * np.arange(-self.Kx, self.Kx + 1)

    def mode(self, k: float) -> ModeFunction:
        m = int(round(k / self.grid.alpha))
        if abs(m * self.grid.alpha - k) > 1e-9 * max(1.0, abs(k)) or abs(m) > self.Kx:
            raise KeyError(f"k={k} is not a retained wavenumber")
        return ModeFunction(m * self.grid.alpha, self.coeffs[m + self.Kx])

    @property
    def modes(self) -> Dict[float, ModeFunction]:
        return {float(k): ModeFunction(k, row) for k, row in zip(self.ks, self.coeffs)}

    @classmethod
    def from_modes(cls, grid: TorusGrid, modes: Mapping[float, ModeFunction], mean_free: bool = True) -> "Field2D":
        """Assemble from a mapping; mirrors ``-k`` are filled from ``k`` when absent."""
        Kx = max(int(round(abs(k) / grid.alpha)) for k in modes)
        Ky = max(m.N for m in modes.values())
        c = np.zeros((2 * Kx + 1, 2 * Ky + 1), dtype=complex)
        for k, mf in modes.items():
            m = int(round(k / grid.alpha))
            row = mf.resized(Ky).coeffs
            c[m + Kx] = row
            if -k not in modes:
                c[-m + Kx] = np.conj(row[::-1])
        return cls(grid, c, mean_free)

    @classmethod
    def from_physical(cls, grid: TorusGrid, values: np.ndarray, Kx: int | None = None,
                      Ky: int | None = None, mean_free: bool = True) -> "Field2D":
        """Coefficients of samples ``values[i, j] = f(x_i, y_j)`` on the grid."""
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.Nx, grid.Ny):
            raise ValueError(f"expected samples of shape {(grid.Nx, grid.Ny)}")
        Kx = grid.Kx if Kx is None else Kx
        Ky = grid.Ky if Ky is None else Ky
        c = np.fft.fft2(values) / values.size
        rows = np.r_[np.arange(grid.Nx - Kx, grid.Nx), np.arange(0, Kx + 1)]
        cols = np.r_[np.arange(grid.Ny - Ky, grid.Ny), np.arange(0, Ky + 1)]
        return cls(grid, c[np.ix_(rows, cols)], mean_free)

    @classmethod
    def from_function(cls, grid: TorusGrid, func, mean_free: bool = True) -> "Field2D":
        X, Y = np.meshgrid(grid.x(), grid.y(), indexing="ij")
        return cls.from_physical(grid, func(X, Y), mean_free=mean_free)

    def to_physical(self, Nx: int | None = None, Ny: int | None = None) -> np.ndarray:
        Nx = Nx or self.grid.Nx
        Ny = Ny or self.grid.Ny
        if Nx < 2 * self.Kx + 1 or Ny < 2 * self.Ky + 1:
            raise ValueError("physical grid too coarse for the retained modes")
        buf = np.zeros((Nx, Ny), dtype=complex)
        rows = np.r_[np.arange(Nx - self.Kx, Nx), np.arange(0, self.Kx + 1)]
        cols = np.r_[np.arange(Ny - self.Ky, Ny), np.arange(0, self.Ky + 1)]
        buf[np.ix_(rows, cols)] = self.coeffs
        return np.real(np.fft.ifft2(buf) * (Nx * Ny))

    def l2_norm(self) -> float:
        """Normalised L^2 norm, ``(mean |f|^2)^{1/2}`` over the torus."""
        return float(np.linalg.norm(self.coeffs))

    def sobolev_norm(self, s: float) -> float:
        kx = self.ks[:, None]
        ny = np.arange(-self.Ky, self.Ky + 1)[None, :]
        w = kx**2 + ny**2
        a2 = np.abs(self.coeffs) ** 2
        w = np.where(w == 0, 1.0, w)
        a2 = np.where((kx**2 + ny**2) == 0, 0.0, a2)
        return float(np.sqrt(np.sum(w**s * a2)))

    def with_coeffs(self, coeffs: np.ndarray) -> "Field2D":
        return Field2D(self.grid, coeffs, self.mean_free)


def project_zero(f: Field2D) -> ModeFunction:
    """x-average ``P_0 f``: the k = 0 slice."""
    return ModeFunction(0.0, f.coeffs[f.Kx])


def project_nonzero(f: Field2D) -> Field2D:
    c = np.array(f.coeffs)
    c[f.Kx] = 0.0
    return Field2D(f.grid, c, f.mean_free)


@dataclass(frozen=True)
class ShearProfile:
    """Background shear ``V(y) = sum_n v(n) e^{iny}`` (Hermitian ``v``, so V is real).

    Critical points are located by bracketing V' inside ``|y| <= 1/10`` and
    ``|y - pi| <= 1/10``; any other sign change of V' rejects the profile.
    """

    coeffs: np.ndarray
    window: float = 0.1
    y1: float = field(init=False)
    y2: float = field(init=False)
    M: float = field(init=False)
    m: float = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise ValueError("profile coefficients must have odd length")
        if np.abs(c - np.conj(c[::-1])).max() > 1e-13 * max(1.0, np.abs(c).max()):
            raise ValueError("profile coefficients are not Hermitian (V not real)")
        object.__setattr__(self, "coeffs", _frozen(0.5 * (c + np.conj(c[::-1]))))
        y1, y2 = self._critical_points()
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y2", y2)
        object.__setattr__(self, "M", float(self.V(y1)))
        object.__setattr__(self, "m", float(self.V(y2)))

    @classmethod
    def kolmogorov(cls, amplitude: float = 1.0) -> "ShearProfile":
        return cls.from_cosine_series({1: amplitude})

    @classmethod
    def from_cosine_series(cls, cos_terms: Mapping[int, float], sin_terms: Mapping[int, float] | None = None,
                           mean: float = 0.0) -> "ShearProfile":
        """``V = mean + sum a_j cos(j y) + sum b_j sin(j y)``."""
        sin_terms = sin_terms or {}
        P = max([1, *cos_terms.keys(), *sin_terms.keys()])
        c = np.zeros(2 * P + 1, dtype=complex)
        c[P] = mean
        for j, a in cos_terms.items():
            c[P + j] += a / 2
            c[P - j] += a / 2
        for j, b in sin_terms.items():
            c[P + j] += b / 2j
            c[P - j] -= b / 2j
        return cls(c)

    @property
    def P(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def n(self) -> np.ndarray:
        return np.arange(-self.P, self.P + 1)

    def derivative(self, y, order: int = 0) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        c = self.coeffs * (1j * self.n) ** order
        return np.real(np.exp(1j * np.multiply.outer(y, self.n)) @ c)

    def V(self, y):
        return self.derivative(y, 0)

    def dV(self, y):
        return self.derivative(y, 1)

    def d2V(self, y):
        return self.derivative(y, 2)

    def d3V(self, y):
        return self.derivative(y, 3)

    def sample(self, M: int, order: int = 0) -> np.ndarray:
        return self.derivative(2 * np.pi * np.arange(M) / M, order)

    def distance_to_kolmogorov(self, s: float = 4.0) -> float:
        """``||V - cos y||_{H^s}`` in the normalised convention."""
        d = np.array(self.coeffs)
        P = self.P
        d[P + 1] -= 0.5
        d[P - 1] -= 0.5
        w = (1.0 + self.n.astype(float) ** 2) ** s
        return float(np.sqrt(np.sum(w * np.abs(d) ** 2)))

    def _critical_points(self) -> tuple[float, float]:
        M = max(4096, 64 * self.P)
        y = -np.pi / 2 + 2 * np.pi * np.arange(M + 1) / M
        d = self.dV(y)
        changes = int(np.count_nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)
                      + np.count_nonzero(d[:-1] == 0.0))
        if changes != 2:
            raise ValueError(f"profile has {changes} critical points, expected exactly 2")
        w = self.window
        roots = []
        for centre, sign in ((0.0, -1), (np.pi, 1)):
            a, b = centre - w, centre + w
            fa, fb = float(self.dV(a)), float(self.dV(b))
            # a maximum needs V' going + to -, a minimum - to +
            if not (sign * fa < 0 < sign * fb):
                raise ValueError(f"no critical point of the expected type within {w} of y={centre:.3f}")
            roots.append(brentq(lambda t: float(self.dV(t)), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
        return roots[0], roots[1]
