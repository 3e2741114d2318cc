"""Acceptance checks shared by the test suite and the ``run_suite`` harness.

Each ``criterion_N`` function runs its experiment at the default parameters,
compares against fixed tolerances and returns a :class:`CriterionResult`.
A criterion may be made of several parts; ``passed`` requires all of them,
and ``parts`` keeps the individual verdicts so a partial failure is visible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence

import numpy as np

from . import coercivity, dns, linear_euler, operators, quasilinear, resolvent
from .fitting import fit_power_law
from .spectral import ShearProfile, TorusGrid

__all__ = ["CriterionResult", "CRITERIA", "run_criterion"]


@dataclass
class CriterionResult:
    number: int
    title: str
    parts: Dict[str, bool]
    metrics: Dict[str, object]
    runtime: float = 0.0
    notes: List[str] = field(default_factory=list)
    data: Dict[str, object] = field(default_factory=dict, repr=False)  # raw objects for CSV export

    @property
    def passed(self) -> bool:
        return all(self.parts.values())

    @property
    def failing_parts(self) -> List[str]:
        return [k for k, v in self.parts.items() if not v]

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = "" if self.passed else f" (failing: {', '.join(self.failing_parts)})"
        return f"CRITERION {self.number:>2} {verdict}: {self.title}{extra} [{self.runtime:.1f}s]"

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "title": self.title,
            "passed": self.passed,
            "parts": dict(self.parts),
            "metrics": _jsonable(self.metrics),
            "runtime_s": self.runtime,
            "notes": list(self.notes),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _within(value: float, target: float, tol: float) -> bool:
    return bool(abs(value - target) <= tol)


# -- 1-3: coercivity and operator algebra ------------------------------------------


def criterion_1(k_set: Sequence[float] = tuple(range(2, 81, 2)), n_max: int = 500,
                s_grid: Sequence[float] = tuple(np.round(np.arange(0, 0.4001, 0.05), 10))) -> CriterionResult:
    t0 = time.perf_counter()
    rep = coercivity.check_sequence_bounds(k_set, n_max, s_grid)
    rt = time.perf_counter() - t0
    return CriterionResult(1, "sequence inequalities over the (n, k, s) sweep", {
        "slack_b": rep.min_slack_b >= -1e-9,
        "slack_c": rep.min_slack_c >= -1e-9,
        "runtime": rt < 10.0,
    }, {"min_slack_b": rep.min_slack_b, "min_slack_c": rep.min_slack_c, "argmin_b": rep.argmin_b,
        "argmin_c": rep.argmin_c, "points": rep.points}, rt, data={"report": rep})


def criterion_2(k: float = 2.0, N: int = 128, margin: int = 8) -> CriterionResult:
    t0 = time.perf_counter()
    e1 = operators.identity_errors(k, N, margin)
    e2 = operators.identity_errors(k, N, 2 * margin)
    drift = max(abs(e1[key] - e2[key]) for key in e1)
    return CriterionResult(2, "operator identities on the interior block", {
        "identities": max(e1.values()) <= 1e-10,
        "margin_doubling": max(e2.values()) <= 1e-10 and drift <= 1e-10,
    }, {"errors": e1, "errors_margin_doubled": e2}, time.perf_counter() - t0)


def criterion_3(k_set: Sequence[float] = (2.0, 4.0), s_set: Sequence[float] = (0.0, 0.2, 0.4),
                N: int = 128) -> CriterionResult:
    t0 = time.perf_counter()
    checks = [coercivity.coercive_matrix_check(k, s, N) for k in k_set for s in s_set]
    res = max(c.decomposition_residual for c in checks)
    eig = min(c.min_eig for c in checks)
    return CriterionResult(3, "decomposition residual and coercive-matrix sign", {
        "residual": res <= 1e-9,
        "min_eigenvalue": eig >= -1e-8,
    }, {"max_residual": res, "min_eig": eig,
        "cases": [[c.k, c.s, c.decomposition_residual, c.relative_residual, c.min_eig] for c in checks]},
        time.perf_counter() - t0, data={"checks": checks})


# -- 4, 5, 7: linearized Euler -----------------------------------------------------


def criterion_4(k: float = 2.0, Ny: int = 512, t_end: float = 100.0, preset: str = "smooth",
                seed: int = 0, window: tuple = (10.0, 100.0)) -> CriterionResult:
    t0 = time.perf_counter()
    N = Ny // 2
    w0 = linear_euler.initial_profile(preset, k, N, seed)
    traj = linear_euler.evolve_linearized_euler(w0, np.linspace(0.0, t_end, int(10 * t_end) + 1))
    rt = time.perf_counter() - t0
    series = linear_euler.profile_series(traj)
    fits = {name: fit_power_law(series["t"], series[name], window)
            for name in ("psi_sup", "omega_at_0", "omega_at_pi")}
    l2 = series["omega_L2"] / series["omega_L2"][0]
    return CriterionResult(4, "linearized Euler conservation and decay exponents", {
        "star_drift": traj.star_drift <= 1e-6,
        "psi_exponent": _within(fits["psi_sup"].exponent, -2.0, 0.3),
        "omega_0_exponent": _within(fits["omega_at_0"].exponent, -1.0, 0.3),
        "omega_pi_exponent": _within(fits["omega_at_pi"].exponent, -1.0, 0.3),
        "l2_bounded": bool(l2.max() <= 3.0 and l2.min() >= 1.0 / 3.0),
        "runtime": rt < 60.0,
    }, {"star_drift": traj.star_drift, "exponents": {k_: f.exponent for k_, f in fits.items()},
        "stderr": {k_: f.stderr for k_, f in fits.items()}, "l2_range": [float(l2.min()), float(l2.max())],
        "Ny": Ny, "evolve_runtime_s": rt}, time.perf_counter() - t0,
        data={"series": series, "fits": fits, "trajectory": traj})


def criterion_5(k: float = 2.0, t: float = 5.0, dts: Sequence[float] = (0.1, 0.05, 0.025),
                N: int = 128) -> CriterionResult:
    t0 = time.perf_counter()
    w0 = linear_euler.initial_profile("smooth", k, N, 0)
    traj = linear_euler.evolve_linearized_euler(w0, np.linspace(0.0, t + 1.0, int(10 * (t + 1)) + 1), 1e-12)
    vals = [linear_euler.omega1_residual(traj, t, dt).value for dt in dts]
    orders = [math.log(vals[i] / vals[i + 1]) / math.log(dts[i] / dts[i + 1]) for i in range(len(vals) - 1)]
    return CriterionResult(5, "w_1 evolution residual under time refinement", {
        "order": min(orders) >= 3.0,
    }, {"residuals": vals, "orders": orders, "dts": list(dts)}, time.perf_counter() - t0,
        data={"dts": list(dts), "residuals": vals})


def criterion_7(k: float = 2.0, t_range: tuple = (1e2, 1e4), points: int = 41) -> CriterionResult:
    t0 = time.perf_counter()
    ts = np.logspace(math.log10(t_range[0]), math.log10(t_range[1]), points)
    gs = [linear_euler.green_functions(t, k) for t in ts]
    f1 = fit_power_law(ts, [abs(g.W1) for g in gs])
    f2 = fit_power_law(ts, [abs(g.W2) for g in gs])
    wr = max(max(abs(g.wronskian1), abs(g.wronskian2)) for g in gs)
    return CriterionResult(7, "oscillatory Green function exponents and Wronskians", {
        "W1_exponent": _within(f1.exponent, -0.5, 0.05),
        "W2_exponent": _within(f2.exponent, 1.5, 0.05),
        "wronskian": wr <= 1e-9,
    }, {"W1_exponent": f1.exponent, "W2_exponent": f2.exponent, "max_wronskian_error": wr},
        time.perf_counter() - t0, data={"t": ts, "samples": gs})


# -- 6: resolvent ------------------------------------------------------------------

DEFAULT_LAMBDAS = tuple(np.linspace(-1.5, 1.5, 13))
RESOLVENT_KS = (2.0, 4.0, 6.0, 10.0, 14.0, 20.0)


def _ladder(sups: Dict[float, float]) -> float:
    vals = list(sups.values())
    return max(vals) / min(vals)


def criterion_6(k_set: Sequence[float] = RESOLVENT_KS, lam_grid: Sequence[float] = DEFAULT_LAMBDAS,
                eps_list: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4), nu_list: Sequence[float] = (1e-1, 1e-2, 1e-3),
                N_pair: tuple = (128, 256)) -> CriterionResult:
    t0 = time.perf_counter()
    raw: Dict[str, list] = {"rayleigh": [], "ns": []}
    ray: Dict[int, Dict[float, float]] = {}
    ns1: Dict[int, Dict[float, float]] = {}
    ns2: Dict[int, Dict[float, float]] = {}
    flagged = 0
    for N in N_pair:
        probes = resolvent.rayleigh_constant_sweep(k_set, lam_grid, eps_list, N)
        ray[N] = {e: max(p.weighted_norm_ratio for p in probes if p.eps_or_nu == e) for e in eps_list}
        flagged += sum(p.flagged for p in probes)
        raw["rayleigh"] += [(N, p) for p in probes]
        nsp = resolvent.ns_constant_sweep(nu_list, k_set, lam_grid, N)
        ns1[N] = {v: max(p.weighted_norm_ratio for p in nsp if p.eps_or_nu == v) for v in nu_list}
        ns2[N] = {v: max(p.ratio2 for p in nsp if p.eps_or_nu == v) for v in nu_list}
        flagged += sum(p.flagged for p in nsp)
        raw["ns"] += [(N, p) for p in nsp]
    lo, hi = N_pair

    def n_stable(d):
        return all(0.5 < d[hi][key] / d[lo][key] < 2.0 for key in d[lo])

    finite = all(math.isfinite(v) for d in (ray, ns1, ns2) for m in d.values() for v in m.values())
    tail = list(eps_list)[1:]
    return CriterionResult(6, "uniform resolvent constants", {
        "finite_and_well_conditioned": finite and flagged == 0,
        "rayleigh_eps_ladder": _ladder(ray[lo]) < 2.0 and _ladder(ray[hi]) < 2.0,
        "rayleigh_N_doubling": n_stable(ray),
        "ns_nu_ladder": all(_ladder(d[N]) < 2.0 for d in (ns1, ns2) for N in N_pair),
        "ns_N_doubling": n_stable(ns1) and n_stable(ns2),
    }, {"rayleigh_sup": ray, "ns_sup_ratio1": ns1, "ns_sup_ratio2": ns2,
        "rayleigh_ladder_ratio": _ladder(ray[lo]), "ns_ladder_ratio1": _ladder(ns1[lo]),
        "ns_ladder_ratio2": _ladder(ns2[lo]),
        "rayleigh_ladder_ratio_from_second_rung": _ladder({e: ray[lo][e] for e in tail}),
        "flagged_probes": flagged}, time.perf_counter() - t0, data=raw)


# -- 8, 9: quasilinear --------------------------------------------------------------


def criterion_8() -> CriterionResult:
    t0 = time.perf_counter()
    pert = quasilinear.morse_transform(ShearProfile.from_cosine_series({1: 1.0, 2: 0.01}))
    affine = [ShearProfile.kolmogorov(), ShearProfile.from_cosine_series({1: 1.05}, mean=0.02),
              ShearProfile.from_cosine_series({1: 0.7}, mean=-0.3)]
    aff = [quasilinear.morse_transform(p) for p in affine]
    aff_dev = max(m.deviation() for m in aff)
    aff_res = max(m.residual() for m in aff)
    return CriterionResult(8, "Morse transform residual and affine recovery", {
        "perturbed_residual": pert.residual() <= 1e-8,
        "affine_exact": aff_dev <= 1e-12 and aff_res <= 1e-12,
    }, {"perturbed_residual": pert.residual(), "perturbed_deviation": pert.deviation(),
        "affine_max_deviation": aff_dev, "affine_max_residual": aff_res}, time.perf_counter() - t0,
        data={"perturbed": pert, "affine": aff})


def criterion_9(nu: float = 1e-3, base: tuple = (128, 0.05), n_eval: int = 12) -> CriterionResult:
    t0 = time.perf_counter()
    grid = TorusGrid(0.5, 32, 64)
    w0 = quasilinear.single_mode_initial(grid, nu ** (1.0 / 3.0) / 10.0)
    t_eval = np.linspace(1.0, nu ** (-4.0 / 9.0), n_eval)
    Ny, dt = base
    coarse = quasilinear.error_ledger(w0, ShearProfile.kolmogorov(), nu, t_eval, dt, Ny)
    fine = quasilinear.error_ledger(w0, ShearProfile.kolmogorov(), nu, t_eval, dt / 2, 2 * Ny)
    ratio = fine.envelope_c / coarse.envelope_c
    return CriterionResult(9, "quasilinear error envelope under refinement", {
        "envelope_stable": 0.5 < ratio < 2.0,
    }, {"envelope_c": [coarse.envelope_c, fine.envelope_c], "ratio": ratio,
        "resolutions": [[Ny, dt], [2 * Ny, dt / 2]], "flagged": [coarse.flagged, fine.flagged]},
        time.perf_counter() - t0, data={"ledgers": [coarse, fine]})


# -- 10, 11: DNS ----------------------------------------------------------------------


def criterion_10(nu: float = 1e-2, inviscid_steps: int = 10_000) -> CriterionResult:
    t0 = time.perf_counter()
    # exact shear decay on the default 256^2 grid
    g = TorusGrid(0.5, 256, 256)
    cfg = dns.SimConfig(grid=g, nu=nu, amplitude_multiplier=0.0)
    T = 10.0 / nu * 0.01
    st = dns.integrate(dns.initial_state(cfg), cfg, T, 0.05)
    Y = np.meshgrid(g.x(), g.y(), indexing="ij")[1]
    exact = math.exp(-nu * T) * np.sin(Y)
    shear_err = float(np.abs(st.physical() - exact).max() / np.abs(exact).max())

    # inviscid conservation on a coarse grid with moderate data
    gi = TorusGrid(0.5, 32, 32)
    Yi = np.meshgrid(gi.x(), gi.y(), indexing="ij")[1]
    cfg0 = dns.SimConfig(grid=gi, nu=0.0, amplitude_multiplier=0.0)
    s0 = dns.state_from_physical(gi, np.sin(Yi) + dns.pattern_field(gi, "smooth_random", 3))
    dt0 = 2e-3
    s1 = dns.integrate(s0, cfg0, inviscid_steps * dt0, dt0)
    e_drift = abs(dns.energy(s1) / dns.energy(s0) - 1)
    z_drift = abs(dns.enstrophy(s1) / dns.enstrophy(s0) - 1)

    # time-step refinement against a fine reference
    gr = TorusGrid(0.5, 64, 64)
    Yr = np.meshgrid(gr.x(), gr.y(), indexing="ij")[1]
    cfgr = dns.SimConfig(grid=gr, nu=1e-2, amplitude_multiplier=0.0)
    sr = dns.state_from_physical(gr, np.sin(Yr) + 20.0 * dns.pattern_field(gr, "smooth_random", 3))
    solver = dns.Solver(gr, 1e-2)
    ref = dns.integrate(sr, cfgr, 1.0, 0.0025, solver)
    errs = [float(np.abs(dns.integrate(sr, cfgr, 1.0, h, solver).coeffs - ref.coeffs).max())
            for h in (0.04, 0.02, 0.01)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    return CriterionResult(10, "DNS solver verification", {
        "shear_decay": shear_err <= 1e-10,
        "inviscid_conservation": max(e_drift, z_drift) <= 1e-8,
        "fourth_order": min(orders) >= 3.5,
    }, {"shear_relative_error": shear_err, "energy_drift": e_drift, "enstrophy_drift": z_drift,
        "refinement_errors": errs, "orders": orders}, time.perf_counter() - t0)


# The reduced grid resolves these runs: the fits agree to three digits with 32 x 256.
SCALING_GRID = (16, 128)


def criterion_11(nu_pair: tuple = (2e-3, 8e-3), grid: tuple = SCALING_GRID,
                 check_grid: tuple | None = (32, 256)) -> CriterionResult:
    t0 = time.perf_counter()
    runs = {}
    for nu in nu_pair:
        cfg = dns.SimConfig(grid=TorusGrid(0.5, *grid), nu=nu, t_end=1.0 / nu, output_stride=5)
        runs[nu] = dns.run_experiment(cfg)
    lin = dns.linear_phase_fit(runs[nu_pair[0]])
    rates = {nu: dns.enhanced_dissipation_fit(r).rate for nu, r in runs.items()}
    ratio = rates[nu_pair[1]] / rates[nu_pair[0]]
    metrics = {"linear_phase_exponent": lin.exponent, "linear_phase_window": list(lin.window),
               "rates": rates, "rate_ratio": ratio, "grid": list(grid),
               "faster_than_viscous": {nu: rates[nu] > nu for nu in nu_pair}}
    parts = {
        "linear_phase_exponent": _within(lin.exponent, -3.0, 1.0),
        "rate_ratio": _within(ratio, 2.0, 0.6),
        "faster_than_viscous": all(rates[nu] > nu for nu in nu_pair),
    }
    if check_grid is not None:
        nu = nu_pair[1]
        cfg = dns.SimConfig(grid=TorusGrid(0.5, *check_grid), nu=nu, t_end=1.0 / nu, output_stride=5)
        fine = dns.enhanced_dissipation_fit(dns.run_experiment(cfg)).rate
        metrics["resolution_check"] = {"grid": list(check_grid), "nu": nu, "rate": fine,
                                       "relative_change": abs(fine / rates[nu] - 1)}
        parts["resolved"] = abs(fine / rates[nu] - 1) < 0.05
    return CriterionResult(11, "DNS scaling at desk scale", parts, metrics, time.perf_counter() - t0,
                           data={"runs": runs})


CRITERIA: Dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
}


def run_criterion(number: int, **kwargs) -> CriterionResult:
    if number not in CRITERIA:
        raise KeyError(f"no acceptance criterion {number}")
    return CRITERIA[number](**kwargs)
