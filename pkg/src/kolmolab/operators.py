"""Truncated matrix realisations of the fixed-k operator algebra.

Indices run over ``n = -N..N``.  Multiplication by ``e^{iy}`` shifts
coefficients up by one, so ``sin y`` and ``cos y`` are tridiagonal and every
product below is exact except in a strip of rows/columns next to the
truncation edge.  Identity checks therefore look only at the interior block
``|n| <= N - margin``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import ModeFunction, star_weight

__all__ = [
    "OperatorMatrix",
    "index",
    "shift",
    "d_y",
    "build_laplacian",
    "build_delta_shift",
    "build_A",
    "build_B",
    "build_lambda",
    "build_omega1_operator",
    "interior_error",
    "identity_errors",
]


def index(N: int) -> np.ndarray:
    return np.arange(-N, N + 1)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense ``(2N+1) x (2N+1)`` matrix acting on y-Fourier coefficients at fixed ``k``."""

    k: float
    N: int
    entries: np.ndarray
    margin: int = 8

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (2 * self.N + 1, 2 * self.N + 1):
            raise ValueError(f"entries must be {(2 * self.N + 1,) * 2}, got {e.shape}")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> np.ndarray:
        return index(self.N)

    @property
    def bandwidth(self) -> int:
        i, j = np.nonzero(self.entries)
        return int(np.abs(i - j).max(initial=0))

    def interior(self, margin: int | None = None) -> np.ndarray:
        m = self.margin if margin is None else margin
        if 2 * m >= 2 * self.N + 1:
            raise ValueError("margin leaves no interior block")
        return self.entries[m : 2 * self.N + 1 - m, m : 2 * self.N + 1 - m]

    def apply(self, g: ModeFunction) -> ModeFunction:
        if g.N != self.N:
            g = g.resized(self.N)
        return ModeFunction(self.k, self.entries @ g.coeffs)

    def _wrap(self, e: np.ndarray) -> "OperatorMatrix":
        return OperatorMatrix(self.k, self.N, e, self.margin)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self._wrap(self.entries @ other.entries)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self._wrap(self.entries + other.entries)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return self._wrap(self.entries - other.entries)

    def __mul__(self, scalar) -> "OperatorMatrix":
        return self._wrap(self.entries * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "OperatorMatrix":
        return self._wrap(-self.entries)


def shift(N: int, s: int) -> np.ndarray:
    """Matrix of multiplication by ``e^{isy}``: ``(e^{isy} g)(n) = g(n - s)``."""
    return np.eye(2 * N + 1, k=-s)


def d_y(N: int) -> np.ndarray:
    return np.diag(1j * index(N).astype(float))


def _diag(k: float, N: int, values: np.ndarray, margin: int) -> OperatorMatrix:
    return OperatorMatrix(k, N, np.diag(values.astype(complex)), margin)


def build_laplacian(k: float, N: int, margin: int = 8) -> OperatorMatrix:
    return build_delta_shift(k, 0, N, margin)


def delta_shift_symbol(k: float, s: float, n: np.ndarray) -> np.ndarray:
    """Symbol of ``Delta_{k,s} = (d_y + i s)^2 - k^2``."""
    return -((np.asarray(n, dtype=float) + s) ** 2 + k * k)


def build_delta_shift(k: float, s: float, N: int, margin: int = 8, inverse: bool = False) -> OperatorMatrix:
    """``Delta_{k,s} = e^{-isy} Delta_k e^{isy}``, diagonal with symbol ``-((n+s)^2 + k^2)``."""
    sym = delta_shift_symbol(k, s, index(N))
    if inverse:
        bad = np.flatnonzero(sym == 0.0)
        if bad.size:
            raise ZeroDivisionError(f"Delta_(k={k}, s={s}) is singular at n={int(index(N)[bad[0]])}")
        sym = 1.0 / sym
    return _diag(k, N, sym, margin)


def _check_k(k: float) -> None:
    if abs(k) <= 1.0:
        raise ValueError(f"A and B need |k| > 1, got k={k}")


def build_B(k: float, N: int, margin: int = 8) -> OperatorMatrix:
    """``B = cos y (1 + Delta_k^{-1})``."""
    _check_k(k)
    cos = 0.5 * (shift(N, 1) + shift(N, -1))
    return OperatorMatrix(k, N, cos * star_weight(k, index(N))[None, :], margin)


def build_A(k: float, N: int, margin: int = 8) -> OperatorMatrix:
    """``A = sin y (1 + Delta_k^{-1})``."""
    _check_k(k)
    sin = (shift(N, 1) - shift(N, -1)) / 2j
    return OperatorMatrix(k, N, sin * star_weight(k, index(N))[None, :], margin)


def lambda3_symbol(k: float, n: np.ndarray) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    a = n**2 + k * k
    return (1.0 + 1.0 / a) / (((n - 1) ** 2 + k * k) * ((n + 1) ** 2 + k * k))


def build_lambda(j: int, k: float, N: int, margin: int = 8) -> OperatorMatrix:
    """``Lambda_1 = [Delta_k, B]``, ``Lambda_2 = [Lambda_1, B]`` and the diagonal ``Lambda_3``."""
    if j == 1:
        L, B = build_laplacian(k, N, margin), build_B(k, N, margin)
        return L @ B - B @ L
    if j == 2:
        L1, B = build_lambda(1, k, N, margin), build_B(k, N, margin)
        return L1 @ B - B @ L1
    if j == 3:
        _check_k(k)
        return _diag(k, N, lambda3_symbol(k, index(N)), margin)
    raise ValueError(f"Lambda_j is defined for j in {{1, 2, 3}}, got {j}")


def build_omega1_operator(k: float, t: float, N: int, margin: int = 8) -> OperatorMatrix:
    """``Delta_k + i k t Lambda_1 - k^2 t^2 (1 - B^2)`` (physical-time convention)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    L = build_laplacian(k, N, margin)
    L1 = build_lambda(1, k, N, margin)
    B = build_B(k, N, margin)
    eye = OperatorMatrix(k, N, np.eye(2 * N + 1), margin)
    return L + (1j * k * t) * L1 - (k * k * t * t) * (eye - B @ B)


def interior_error(lhs: OperatorMatrix, rhs: OperatorMatrix, margin: int | None = None) -> float:
    """Max-abs difference of two operators on the interior block."""
    return float(np.abs(lhs.interior(margin) - rhs.interior(margin)).max())


def identity_errors(k: float = 2.0, N: int = 128, margin: int = 8) -> dict:
    """Interior-block max errors of the four structural identities at fixed ``k``.

    Keys: ``lambda1`` (``Lambda_1 = -2 A d_y - B``), ``lambda2``
    (``Lambda_2 = 2(1 - B^2) - 4k^2 Lambda_3``), ``commutator``
    (``[A, B] = 2 d_y Delta_{k,1}^{-1} Delta_{k,-1}^{-1} (1 + Delta_k^{-1})``) and
    ``sum_of_squares`` (``A^2 + B^2 = (2 + Delta_{k,-1}^{-1} + Delta_{k,1}^{-1})(1 + Delta_k^{-1}) / 2``).
    """
    A, B = build_A(k, N, margin), build_B(k, N, margin)
    eye = OperatorMatrix(k, N, np.eye(2 * N + 1), margin)
    Dy = OperatorMatrix(k, N, d_y(N), margin)
    star = _diag(k, N, star_weight(k, index(N)), margin)
    inv_p = build_delta_shift(k, 1, N, margin, inverse=True)
    inv_m = build_delta_shift(k, -1, N, margin, inverse=True)
    return {
        "lambda1": interior_error(build_lambda(1, k, N, margin), -2.0 * (A @ Dy) - B),
        "lambda2": interior_error(build_lambda(2, k, N, margin),
                                  2.0 * (eye - B @ B) - (4 * k * k) * build_lambda(3, k, N, margin)),
        "commutator": interior_error(A @ B - B @ A, 2.0 * (Dy @ inv_p @ inv_m @ star)),
        "sum_of_squares": interior_error(A @ A + B @ B, 0.5 * ((2.0 * eye + inv_m + inv_p) @ star)),
    }
