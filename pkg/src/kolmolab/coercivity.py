"""Coercive estimate for the operator combination built from Lambda_1, A and B.

Two levels are checked:

* the Fourier-symbol sequences ``a_n, b_n, c_n`` and the inequalities
  ``b_n >= k^2 a_n^s``, ``c_n >= delta(s) a_n^s``;
* the matrix identity ``LHS = 4 A H_0 A + H_*`` (H_0, H_* diagonal with symbols
  b_n, c_n) and positivity of the full operator inequality in the star inner
  product.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .operators import build_A, build_B, build_lambda, index

__all__ = [
    "S_MAX",
    "SequenceTriple",
    "delta_s",
    "sequence_abc",
    "sequences",
    "SequenceBoundReport",
    "check_sequence_bounds",
    "CoerciveCheck",
    "coercive_matrix_check",
    "sweep_rows",
    "write_sweep_csv",
]

S_MAX = 0.4


def delta_s(s: float) -> float:
    """``4 - max((8s^2 + 7s + 2) s / 2, 8s^2 + 8s - 1)`` for ``s`` in ``[0, 0.4]``."""
    if not 0.0 <= s <= S_MAX + 1e-12:
        raise ValueError(f"delta(s) is only defined for s in [0, {S_MAX}], got {s}")
    return 4.0 - max((8 * s * s + 7 * s + 2) * s / 2, 8 * s * s + 8 * s - 1)


@dataclass(frozen=True)
class SequenceTriple:
    n: int
    k: float
    s: float
    a: float
    b: float
    c: float


def sequences(n, k: float, s: float, dtype=float):
    """Vectorised ``(a_n, b_n, c_n)`` for integer array ``n``.

    ``dtype`` may be ``np.longdouble`` for the extended-precision residual check.
    """
    n = np.asarray(n, dtype=dtype)
    k2 = dtype(k) * dtype(k)
    s = dtype(s)

    def a(m):
        return m * m + k2

    def b(m):
        return (a(m - 1) ** (1 + s) + a(m + 1) ** (1 + s)) / 2 + (0.25 - m * m) * a(m) ** s

    an, am, ap = a(n), a(n - 1), a(n + 1)
    wn, wm, wp = 1 - 1 / an, 1 - 1 / am, 1 - 1 / ap
    c = (
        -((n - 0.5) ** 2) * wm * am**s * wn
        - (n + 0.5) ** 2 * wp * ap**s * wn
        + (4 - (2 - 1 / am - 1 / ap) * wn) * an ** (1 + s)
        - wm * b(n - 1) * wn
        - wp * b(n + 1) * wn
    )
    return an, b(n), c


def sequence_abc(n: int, k: float, s: float) -> SequenceTriple:
    if abs(k) <= 1.0:
        raise ValueError(f"sequences need |k| > 1, got k={k}")
    a, b, c = sequences(np.array([n]), k, s)
    return SequenceTriple(int(n), float(k), float(s), float(a[0]), float(b[0]), float(c[0]))


@dataclass
class SequenceBoundReport:
    min_slack_b: float
    min_slack_c: float
    argmin_b: tuple
    argmin_c: tuple
    points: int

    @property
    def ok(self) -> bool:
        return self.min_slack_b >= -1e-9 and self.min_slack_c >= -1e-9


def check_sequence_bounds(k_set: Iterable[float], n_max: int, s_grid: Iterable[float]) -> SequenceBoundReport:
    """Minimum of ``b_n - k^2 a_n^s`` and ``c_n - delta(s) a_n^s`` over a sweep.

    Failures are reported through negative slacks, never raised.
    """
    n = np.arange(-n_max, n_max + 1)
    best_b = (np.inf, None)
    best_c = (np.inf, None)
    count = 0
    for k in k_set:
        for s in s_grid:
            a, b, c = sequences(n, k, s)
            sb = b - k * k * a**s
            sc = c - delta_s(s) * a**s
            ib, ic = int(np.argmin(sb)), int(np.argmin(sc))
            if sb[ib] < best_b[0]:
                best_b = (float(sb[ib]), (int(n[ib]), float(k), float(s)))
            if sc[ic] < best_c[0]:
                best_c = (float(sc[ic]), (int(n[ic]), float(k), float(s)))
            count += n.size
    return SequenceBoundReport(best_b[0], best_c[0], best_b[1], best_c[1], count)


def sweep_rows(k_set: Iterable[float], n_max: int, s_grid: Iterable[float]):
    """Rows ``(n, k, s, a, b, c, slack_b, slack_c)`` for the CSV export."""
    n = np.arange(-n_max, n_max + 1)
    for k in k_set:
        for s in s_grid:
            a, b, c = sequences(n, k, s)
            sb = b - k * k * a**s
            sc = c - delta_s(s) * a**s
            for row in zip(n, a, b, c, sb, sc):
                yield (int(row[0]), float(k), float(s), *map(float, row[1:]))


def write_sweep_csv(stream, k_set, n_max, s_grid) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["n", "k", "s", "a", "b", "c", "slack_b", "slack_c"])
    for row in sweep_rows(k_set, n_max, s_grid):
        w.writerow([row[0], repr(row[1]), repr(row[2])] + [repr(v) for v in row[3:]])


def _lhs(A, B, L1, P, P1, I) -> np.ndarray:
    # Lambda_1 P Lambda_1 + 2 (1 - B^2) P1 + 2 P1 (1 - B^2) with P = (-Delta_k)^s, P1 = (-Delta_k)^{1+s}
    IB = I - B @ B
    return L1 @ P @ L1 + 2 * IB @ P1 + 2 * P1 @ IB


@dataclass
class CoerciveCheck:
    k: float
    s: float
    N: int
    decomposition_residual: float
    relative_residual: float
    min_eig: float
    asymmetry: float
    flagged: bool


def _decomposition_residual(k: float, s: float, N: int, margin: int, dtype) -> tuple:
    """Max interior ``|lhs - rhs|`` and ``max |lhs|`` of the decomposition identity in ``dtype``.

    ``lhs`` entries grow like ``n^{2+2s}``, so in double precision the
    comparison is limited by round-off near 1e-9 already at ``N = 128``.
    """
    cdtype = np.clongdouble if dtype is np.longdouble else complex
    Ne = N + margin
    ne = index(Ne).astype(dtype)
    a = ne * ne + dtype(k) * dtype(k)
    w = 1 - 1 / a
    up = np.eye(ne.size, k=-1, dtype=cdtype)
    down = np.eye(ne.size, k=1, dtype=cdtype)
    B = (up + down) / 2 * w[None, :]
    A = (up - down) * cdtype(-0.5j) * w[None, :]
    L1 = (a[None, :] - a[:, None]) * B  # [Delta_k, B] with Delta_k = -diag(a)
    I = np.eye(ne.size, dtype=cdtype)
    P = np.diag(a ** dtype(s)).astype(cdtype)
    P1 = np.diag(a ** (1 + dtype(s))).astype(cdtype)
    lhs = _lhs(A, B, L1, P, P1, I)
    _, bn, cn = sequences(ne, k, s, dtype)
    rhs = 4 * A @ np.diag(bn).astype(cdtype) @ A + np.diag(cn).astype(cdtype)
    inner = slice(2 * margin, ne.size - 2 * margin)
    diff = np.abs(lhs[inner, inner] - rhs[inner, inner]).max()
    return float(diff), float(np.abs(lhs[inner, inner]).max())


def coercive_matrix_check(k: float, s: float, N: int = 128, margin: int = 8,
                          symmetry_tol: float = 1e-8, precision: str = "extended") -> CoerciveCheck:
    """Assemble the coercive operator and check both its decomposition and its sign.

    All products are formed on the enlarged range ``|n| <= N + margin`` and then
    restricted to ``|n| <= N``.  The restriction is a compression of the exact
    operator (its bandwidth is at most 2), so the minimum eigenvalue of the
    star-symmetrised block bounds the quadratic form on functions supported in
    ``|n| <= N`` with no truncation artefact.

    The decomposition residual is evaluated in x87 extended precision by
    default (``precision="double"`` keeps everything in float64); the
    eigenvalue test always runs in double precision.
    """
    if abs(k) <= 1.0:
        raise ValueError(f"need |k| > 1, got {k}")
    if not 0.0 <= s <= S_MAX + 1e-12:
        raise ValueError(f"s must lie in [0, {S_MAX}]")
    if N < 64:
        raise ValueError("N must be at least 64")
    if precision not in ("extended", "double"):
        raise ValueError("precision must be 'extended' or 'double'")
    diff, scale = _decomposition_residual(k, s, N, margin, np.longdouble if precision == "extended" else float)

    Ne = N + margin
    ne = index(Ne).astype(float)
    a = ne**2 + k * k
    A = build_A(k, Ne).entries
    B = build_B(k, Ne).entries
    L1 = build_lambda(1, k, Ne).entries
    I = np.eye(ne.size)
    P = np.diag(a**s)
    P1 = np.diag(a ** (1 + s))
    lhs = _lhs(A, B, L1, P, P1, I)

    sl = slice(margin, margin + 2 * N + 1)
    Mfull = lhs - 4 * k * k * A @ P @ A - delta_s(s) * P
    W = np.diag(1.0 - 1.0 / a)
    WM = (W @ Mfull)[sl, sl]
    asym = float(np.abs(WM - WM.conj().T).max() / max(1.0, np.abs(WM).max()))
    H = 0.5 * (WM + WM.conj().T)
    min_eig = float(np.linalg.eigvalsh(H).min())
    return CoerciveCheck(float(k), float(s), int(N), diff, diff / scale, min_eig, asym,
                         bool(asym > symmetry_tol))
