"""Rayleigh and linearized Navier-Stokes resolvents at fixed x-wavenumber.

Both equations are solved in y-Fourier coefficients, where multiplication by
the shear ``V`` is a banded convolution matrix.  Stability constants are the
largest singular values of weighted solution maps.  With
``D = diag(sqrt(n^2 + k^2))`` one has ``||(d_y, k) Delta_k^{-1} f|| = ||D^{-1} f||``
and ``||(d_y, k) F|| = ||D F||``, so every weight in the estimates is either
diagonal or a pointwise multiplier evaluated on an oversampled grid.

The truncated Rayleigh operator has a discrete spectrum with spacing about
``1/N`` inside ``[m, M]``.  It only mimics the limiting-absorption behaviour of
the continuous problem once ``eps * N`` is of order one, so the constant sweep
enlarges the truncation to ``max(N, ceil(N / (80 eps)))`` and uses sparse LU.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .spectral import ModeFunction, ShearProfile, star_weight

__all__ = [
    "ResolventProbe",
    "theta",
    "lambda0",
    "multiplication_matrix",
    "rayleigh_matrix",
    "RayleighSolution",
    "solve_rayleigh",
    "rayleigh_energy_defect",
    "rayleigh_ratio",
    "rayleigh_constant_sweep",
    "effective_truncation",
    "ns_matrix",
    "solve_ns_resolvent",
    "ns_ratios",
    "ns_constant_sweep",
    "CONDITION_LIMIT",
]

CONDITION_LIMIT = 1e14
ABSORPTION_FACTOR = 1.0 / 80.0


def lambda0(lam: float, profile: ShearProfile) -> float:
    return max(0.0, min(abs(lam - profile.m), abs(lam - profile.M)))


def theta(k: float, lam: float, profile: ShearProfile | None = None) -> float:
    """``1 + |k| lambda_0^{1/2} + |lambda|`` with ``lambda_0 = min(|lambda - m|, |lambda - M|)``."""
    profile = profile or ShearProfile.kolmogorov()
    return 1.0 + abs(k) * math.sqrt(lambda0(lam, profile)) + abs(lam)


@dataclass(frozen=True)
class ResolventProbe:
    k: float
    lam: float
    eps_or_nu: float
    theta: float
    weighted_norm_ratio: float
    condition_estimate: float
    ratio2: float = float("nan")
    N: int = 0
    flagged: bool = False

    def row(self) -> list:
        return [self.k, self.lam, self.eps_or_nu, self.theta, self.weighted_norm_ratio, self.ratio2,
                self.condition_estimate]


def multiplication_matrix(profile: ShearProfile, N: int, sparse: bool = False):
    """Convolution matrix of ``g -> V g`` on modes ``|n| <= N``."""
    P = profile.P
    offsets = [j for j in range(-P, P + 1) if profile.coeffs[P + j] != 0]
    diags = [np.full(2 * N + 1 - abs(j), profile.coeffs[P + j]) for j in offsets]
    # (V g)(n) = sum_j v(j) g(n - j): coefficient v(j) sits on sub-diagonal j
    mat = sp.diags(diags, [-j for j in offsets], shape=(2 * N + 1, 2 * N + 1), format="csc", dtype=complex)
    return mat if sparse else mat.toarray()


def _check_k(k: float) -> None:
    if abs(k) <= 1.0:
        raise ValueError(f"need |k| > 1, got k={k}")


def rayleigh_matrix(k: float, lam: float, eps: float, N: int, profile: ShearProfile | None = None,
                    sparse: bool = False):
    """``V (1 + Delta_k^{-1}) - (lambda + i eps)`` on modes ``|n| <= N``."""
    _check_k(k)
    if eps == 0:
        raise ValueError("eps must be non-zero; the eps -> 0 limit is probed by a decreasing ladder")
    profile = profile or ShearProfile.kolmogorov()
    Vm = multiplication_matrix(profile, N, sparse=True)
    w = star_weight(k, np.arange(-N, N + 1))
    op = (Vm @ sp.diags(w) - (lam + 1j * eps) * sp.identity(2 * N + 1)).tocsc()
    return op if sparse else op.toarray()


@dataclass(frozen=True)
class RayleighSolution:
    f: ModeFunction
    residual: float
    condition: float
    flagged: bool


def solve_rayleigh(k: float, lam: float, eps: float, F: ModeFunction,
                   profile: ShearProfile | None = None) -> RayleighSolution:
    """Dense solve of ``V (f + Delta_k^{-1} f) - (lambda + i eps) f = F``.

    A 2-norm condition number above :data:`CONDITION_LIMIT` sets ``flagged``
    and emits a warning; the solution is still returned for inspection.
    """
    if F.k != k:
        raise ValueError("F carries a different wavenumber")
    A = rayleigh_matrix(k, lam, eps, F.N, profile)
    f = np.linalg.solve(A, F.coeffs)
    res = float(np.linalg.norm(A @ f - F.coeffs) / max(np.linalg.norm(F.coeffs), 1e-300))
    cond = float(np.linalg.cond(A))
    flagged = not np.isfinite(cond) or cond > CONDITION_LIMIT
    if flagged:
        warnings.warn(f"Rayleigh system near-singular (condition {cond:.2e}) at k={k}, lambda={lam}, eps={eps}")
    return RayleighSolution(ModeFunction(k, f), res, cond, flagged)


def rayleigh_energy_defect(F: ModeFunction, f: ModeFunction, eps: float) -> float:
    """Relative mismatch in ``Im <F, w> = eps (||w||^2 + ||(d_y, kt) Delta_kt^{-1} w||^2)``,
    ``w = f + Delta_k^{-1} f``, ``kt^2 = k^2 - 1``, ``<F, w> = sum conj(F) w``."""
    k = f.k
    n = f.n.astype(float)
    a = n**2 + k * k
    w = f.coeffs * (1 - 1 / a)
    phi = -w / (a - 1)  # Delta_{kt}^{-1} w
    lhs = float(np.imag(np.vdot(F.coeffs, w)))
    rhs = eps * float(np.sum(np.abs(w) ** 2) + np.sum((a - 1) * np.abs(phi) ** 2))
    return abs(lhs - rhs) / max(abs(rhs), 1e-300)


def effective_truncation(N: int, eps: float, factor: float = ABSORPTION_FACTOR) -> int:
    return int(max(N, math.ceil(factor * N / abs(eps))))


def _sigma_max(apply, apply_h, dim: int, dtype=complex) -> float:
    op = spla.LinearOperator((dim, dim), matvec=lambda x: apply(np.ravel(x)),
                             rmatvec=lambda x: apply_h(np.ravel(x)), dtype=dtype)
    v0 = np.ones(dim, dtype=complex) / math.sqrt(dim)
    s = spla.svds(op, k=1, return_singular_vectors=False, v0=v0, tol=1e-8)
    return float(s[0])


def _power_norm(lu, luh, dim: int, iters: int = 12) -> float:
    """Deterministic power-iteration estimate (from below) of ``||A^{-1}||_2``."""
    x = np.exp(1j * np.arange(dim) * 0.7) / math.sqrt(dim)
    est = 0.0
    for _ in range(iters):
        y = lu.solve(x)
        est = float(np.linalg.norm(y))
        z = luh.solve(y)
        nz = np.linalg.norm(z)
        if nz == 0:
            break
        x = z / nz
    return est


def rayleigh_ratio(k: float, lam: float, eps: float, N: int, profile: ShearProfile | None = None,
                   factor: float = ABSORPTION_FACTOR) -> ResolventProbe:
    """Best constant ``C`` in ``theta ||(d_y,k) Delta_k^{-1} f|| <= C ||(d_y,k) F||``."""
    profile = profile or ShearProfile.kolmogorov()
    Ne = effective_truncation(N, eps, factor)
    A = rayleigh_matrix(k, lam, eps, Ne, profile, sparse=True)
    lu = spla.splu(A)
    luh = spla.splu(A.conj().T.tocsc())
    dinv = 1.0 / np.sqrt(np.arange(-Ne, Ne + 1).astype(float) ** 2 + k * k)
    s = _sigma_max(lambda x: dinv * lu.solve(dinv * x), lambda x: dinv * luh.solve(dinv * x), 2 * Ne + 1)
    cond = float(math.sqrt(spla.norm(A, 1) * spla.norm(A, np.inf)) * _power_norm(lu, luh, 2 * Ne + 1))
    th = theta(k, lam, profile)
    return ResolventProbe(float(k), float(lam), float(eps), th, th * s, cond, N=Ne,
                          flagged=cond > CONDITION_LIMIT)


def rayleigh_constant_sweep(k_set: Iterable[float], lam_grid: Sequence[float], eps_list: Sequence[float],
                            N: int = 128, profile: ShearProfile | None = None,
                            factor: float = ABSORPTION_FACTOR) -> List[ResolventProbe]:
    profile = profile or ShearProfile.kolmogorov()
    lam_grid = list(lam_grid)
    if min(lam_grid) > profile.m - 0.5 + 1e-12 or max(lam_grid) < profile.M + 0.5 - 1e-12:
        raise ValueError(f"lambda grid must cover [{profile.m - 0.5:g}, {profile.M + 0.5:g}]")
    eps_list = list(eps_list)
    if any(abs(b) >= abs(a) for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be decreasing in magnitude")
    return [rayleigh_ratio(k, lam, eps, N, profile, factor)
            for eps in eps_list for k in k_set for lam in lam_grid]


# -- viscous resolvent -------------------------------------------------------------


def ns_matrix(nu: float, k: float, lam: float, N: int, profile: ShearProfile | None = None) -> np.ndarray:
    """``-nu Delta_k + i k V (1 + Delta_k^{-1}) - i k lambda`` on modes ``|n| <= N``."""
    _check_k(k)
    if not 0 < nu:
        raise ValueError("nu must be positive")
    profile = profile or ShearProfile.kolmogorov()
    n = np.arange(-N, N + 1).astype(float)
    a = n**2 + k * k
    Vm = multiplication_matrix(profile, N)
    return np.diag(nu * a + 0j) + 1j * k * Vm * star_weight(k, n)[None, :] - 1j * k * lam * np.eye(2 * N + 1)


def solve_ns_resolvent(nu: float, k: float, lam: float, F: ModeFunction,
                       profile: ShearProfile | None = None) -> ModeFunction:
    if F.k != k:
        raise ValueError("F carries a different wavenumber")
    if not np.any(F.coeffs):
        return ModeFunction.zeros(k, F.N)
    A = ns_matrix(nu, k, lam, F.N, profile)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        warnings.warn(f"NS resolvent near-singular (condition {cond:.2e})")
    return ModeFunction(k, np.linalg.solve(A, F.coeffs))


def weight_gram(profile: ShearProfile, k: float, N: int, M: int) -> np.ndarray:
    """Gram matrix ``G`` with ``f^H G f = |||V'|^{1/2} (d_y, k) Delta_k^{-1} f||^2``.

    ``|V'|`` is sampled on ``M`` points and its Fourier coefficients ``c(j)``
    assemble ``G[n, m] = c(m - n) (n m + k^2) phi_n phi_m`` with
    ``phi_n = 1/(n^2 + k^2)``.
    """
    n = np.arange(-N, N + 1).astype(float)
    phi = 1.0 / (n**2 + k * k)
    if M < 4 * N + 1:
        raise ValueError("grid too coarse for the weight Gram matrix")
    c = np.fft.fft(np.abs(profile.dV(2 * np.pi * np.arange(M) / M))) / M
    diff = (np.arange(2 * N + 1)[None, :] - np.arange(2 * N + 1)[:, None]) % M
    return c[diff] * (np.outer(n, n) + k * k) * np.outer(phi, phi)


def _norm_bound(X: np.ndarray) -> float:
    return math.sqrt(np.abs(X).sum(axis=0).max() * np.abs(X).sum(axis=1).max())


def ns_ratios(nu: float, k: float, lam: float, N: int, profile: ShearProfile | None = None,
              oversample: int = 4) -> ResolventProbe:
    """Best constants of the two viscous estimates as largest singular values.

    ``ratio1`` bounds ``|k| theta ||(d_y,k) Delta^{-1} f|| (+) |k|^{3/2} |||V'|^{1/2} (d_y,k) Delta^{-1} f||``
    by ``||(d_y,k) F||``.  ``ratio2`` bounds ``|nu k theta|^{1/2} ||..|| (+) nu^{1/2} |k| |||V'|^{1/2} ..||``
    by ``||(d_y,k) Delta_k^{-1} F||``.  Here ``(+)`` is the Euclidean combination
    of the two terms, which is within a factor ``sqrt(2)`` of their sum.
    """
    profile = profile or ShearProfile.kolmogorov()
    A = ns_matrix(nu, k, lam, N, profile)
    n = np.arange(-N, N + 1).astype(float)
    d = np.sqrt(n**2 + k * k)
    R = np.linalg.inv(A)
    G = weight_gram(profile, k, N, oversample * (2 * N + 2))
    th = theta(k, lam, profile)

    def top(Rin, c_diag, c_weight):
        X = Rin / d[:, None]

        def normal(v):
            v = np.ravel(v)
            Xv, Rv = X @ v, Rin @ v
            return c_diag * (X.conj().T @ Xv) + c_weight * (Rin.conj().T @ (G @ Rv))

        op = spla.LinearOperator((2 * N + 1,) * 2, matvec=normal, dtype=complex)
        v0 = np.ones(2 * N + 1, dtype=complex)
        lam_max = spla.eigsh(op, k=1, which="LA", v0=v0, tol=1e-10, return_eigenvectors=False)[0]
        return float(math.sqrt(max(lam_max, 0.0)))

    r1 = top(R / d[None, :], (k * th) ** 2, abs(k) ** 3)
    r2 = top(R * d[None, :], nu * abs(k) * th, nu * k * k)
    cond = _norm_bound(A) * _norm_bound(R)
    return ResolventProbe(float(k), float(lam), float(nu), th, r1, cond, ratio2=r2, N=N,
                          flagged=cond > CONDITION_LIMIT)


def ns_constant_sweep(nu_list: Sequence[float], k_set: Iterable[float], lam_grid: Sequence[float],
                      N: int = 128, profile: ShearProfile | None = None) -> List[ResolventProbe]:
    for nu in nu_list:
        if not 0 < nu < 1:
            raise ValueError(f"nu must lie in (0, 1), got {nu}")
    return [ns_ratios(nu, k, lam, N, profile) for nu in nu_list for k in k_set for lam in lam_grid]
