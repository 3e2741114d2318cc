"""Experiment registry, manifests, suite runner and report assembly.

Every experiment writes its CSV/SVG outputs plus ``result.json`` (criterion
verdicts and metrics) and ``manifest.json`` (config digest, versions, seed,
timestamps, output list with SHA-256 digests) into ``<out_dir>/<experiment>/``.
The report is a reduction over those result files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Sequence

import numpy as np
import scipy

from . import __version__, acceptance, config as cfgmod, dns
from .fitting import RateFit, fit_exponential, fit_power_law  # re-exported harness utilities
from .spectral import TorusGrid
from .svg import line_chart

__all__ = [
    "ExperimentManifest",
    "config_digest",
    "run_experiment",
    "run_suite",
    "build_report",
    "EXPERIMENT_CRITERIA",
    "REPORT_SCHEMA",
    "fit_power_law",
    "fit_exponential",
    "RateFit",
]

log = logging.getLogger("kolmolab")

REPORT_SCHEMA = "kolmolab-report/1"

EXPERIMENT_CRITERIA: Dict[str, tuple] = {
    "coercivity": (1, 2, 3),
    "linear-euler": (4, 5, 7),
    "resolvent": (6,),
    "quasilinear": (8, 9),
    "dns": (10, 11),
}


# -- manifests -----------------------------------------------------------------------


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=float)


def config_digest(section: dict) -> str:
    """SHA-256 of the canonical JSON form; independent of key order."""
    return hashlib.sha256(_canonical(section).encode("utf-8")).hexdigest()


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _stamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class ExperimentManifest:
    name: str
    config_digest: str
    seed: int
    started: str
    finished: str = ""
    versions: Dict[str, str] = field(default_factory=lambda: {
        "kolmolab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    })
    outputs: Dict[str, str] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    runtime_s: float = 0.0

    def record(self, path: Path) -> None:
        self.outputs[path.name] = _file_digest(path)

    def write(self, directory: Path) -> Path:
        p = directory / "manifest.json"
        p.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8")
        return p


class _Writer:
    """Writes outputs into one experiment directory and lists them in the manifest."""

    def __init__(self, directory: Path, manifest: ExperimentManifest):
        self.dir = directory
        self.manifest = manifest
        directory.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        p = self.dir / name
        with p.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])
        self.manifest.record(p)
        return p

    def svg(self, name: str, text: str) -> Path:
        p = self.dir / name
        p.write_text(text, encoding="utf-8")
        self.manifest.record(p)
        return p

    def json(self, name: str, obj) -> Path:
        p = self.dir / name
        p.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.manifest.record(p)
        return p


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# -- experiments ---------------------------------------------------------------------


def _coercivity(c: dict, w: _Writer) -> List[acceptance.CriterionResult]:
    from .coercivity import delta_s, sequences

    r1 = acceptance.criterion_1(c["k_set"], c["n_max"], c["s_grid"])
    r2 = acceptance.criterion_2(c["operators_k"], c["N"], c["margin"])
    r3 = acceptance.criterion_3(c["matrix_k"], c["matrix_s"], c["N"])
    n = np.arange(-c["n_max"], c["n_max"] + 1)
    rows = []
    for k in c["k_set"]:
        for s in c["s_grid"]:
            a, b, cc = sequences(n, k, s)
            sb, sc = b - k * k * a**s, cc - delta_s(s) * a**s
            rows.append((float(k), float(s), float(sb.min()), int(n[sb.argmin()]), float(sc.min()), int(n[sc.argmin()])))
    w.csv("sequence_minima.csv", ["k", "s", "min_slack_b", "argmin_b_n", "min_slack_c", "argmin_c_n"], rows)
    w.csv("operator_identities.csv", ["identity", "error_margin", "error_margin_doubled"],
          [(key, r2.metrics["errors"][key], r2.metrics["errors_margin_doubled"][key]) for key in r2.metrics["errors"]])
    w.csv("coercive_matrix.csv", ["k", "s", "N", "decomposition_residual", "relative_residual", "min_eig", "asymmetry"],
          [(x.k, x.s, x.N, x.decomposition_residual, x.relative_residual, x.min_eig, x.asymmetry)
           for x in r3.data["checks"]])
    ks = sorted({r[0] for r in rows})[:4]
    w.svg("min_slack_c.svg", line_chart(
        [(f"k={k:g}", [r[1] for r in rows if r[0] == k], [r[4] for r in rows if r[0] == k]) for k in ks],
        "minimum slack c_n - delta(s) a_n^s", "s", "min slack"))
    return [r1, r2, r3]


def _linear_euler(c: dict, w: _Writer) -> List[acceptance.CriterionResult]:
    r4 = acceptance.criterion_4(c["k"], c["Ny"], c["t_end"], c["preset"], c["seed"], tuple(c["window"]))
    r5 = acceptance.criterion_5(c["k"], c["residual_t"], tuple(c["residual_dts"]))
    r7 = acceptance.criterion_7(c["k"], tuple(c["green_t"]), c["green_points"])
    s = r4.data["series"]
    names = ["t", "psi_sup", "dy_profile_psi_sup", "omega_at_0", "omega_at_pi", "omega_L2", "star_norm",
             "profile_H1", "profile_H2"]
    w.csv("series.csv", names, zip(*(s[n] for n in names)))
    w.csv("rates.csv", ["quantity", "exponent", "stderr", "r_squared", "window_lo", "window_hi"],
          [(k, f.exponent, f.stderr, f.r_squared, f.window[0], f.window[1]) for k, f in r4.data["fits"].items()])
    w.csv("omega1_residual.csv", ["dt", "relative_residual"], zip(r5.data["dts"], r5.data["residuals"]))
    w.csv("green_functions.csv", ["t", "abs_W1", "abs_W2", "wronskian1", "wronskian2"],
          [(t, abs(g.W1), abs(g.W2), g.wronskian1, g.wronskian2) for t, g in zip(r7.data["t"], r7.data["samples"])])
    keep = s["t"] > 0
    w.svg("decay.svg", line_chart(
        [(n, s["t"][keep], s[n][keep]) for n in ("psi_sup", "omega_at_0", "omega_at_pi", "omega_L2")],
        "linearized Euler decay", "t", "value", logx=True, logy=True))
    return [r4, r5, r7]


def _resolvent(c: dict, w: _Writer) -> List[acceptance.CriterionResult]:
    lams = tuple(np.linspace(c["lambda_min"], c["lambda_max"], c["lambda_count"]))
    r6 = acceptance.criterion_6(c["k_set"], lams, c["eps_list"], c["nu_list"], tuple(c["N"]))
    head = ["N", "k", "lambda", "eps_or_nu", "theta", "ratio1", "ratio2", "condition_estimate"]
    w.csv("rayleigh_probes.csv", head, [[N] + p.row() for N, p in r6.data["rayleigh"]])
    w.csv("ns_probes.csv", head, [[N] + p.row() for N, p in r6.data["ns"]])
    sup = r6.metrics["rayleigh_sup"]
    w.svg("rayleigh_sup.svg", line_chart(
        [(f"N={N}", list(d.keys()), list(d.values())) for N, d in sup.items()],
        "sup of weighted ratio across the absorption ladder", "eps", "sup ratio", logx=True))
    return [r6]


def _quasilinear(c: dict, w: _Writer) -> List[acceptance.CriterionResult]:
    r8 = acceptance.criterion_8()
    r9 = acceptance.criterion_9(c["nu"], (c["Ny"], c["dt"]), c["n_eval"])
    pert = r8.data["perturbed"]
    w.csv("morse.csv", ["case", "a", "d", "residual", "deviation"],
          [("perturbed", pert.a, pert.d, pert.residual(), pert.deviation())]
          + [(f"affine_{i}", m.a, m.d, m.residual(), m.deviation()) for i, m in enumerate(r8.data["affine"])])
    rows = []
    for L in r9.data["ledgers"]:
        rows += [(L.Ny, L.dt, t, e, sh, env, d) for t, e, sh, env, d in
                 zip(L.t, L.er_l2, L.shape, L.envelope, L.differencing_error)]
    w.csv("error_ledger.csv", ["Ny", "dt", "t", "er_L2", "shape", "envelope", "differencing_error"], rows)
    w.svg("error_ledger.svg", line_chart(
        [(f"Ny={L.Ny} dt={L.dt:g}", L.t, L.er_l2) for L in r9.data["ledgers"]],
        "quasilinear error", "t", "||Er_L||", logy=True))
    return [r8, r9]


def sim_config(c: dict, seed: int | None = None) -> dns.SimConfig:
    return dns.SimConfig(grid=TorusGrid(c["kappa"], c["Nx"], c["Ny"]), nu=c["nu"], t_end=c["t_end"],
                         cfl=c["cfl"], max_dt=c["max_dt"], pattern=c["pattern"],
                         amplitude_multiplier=c["amplitude_multiplier"],
                         seed=c["seed"] if seed is None else seed, output_stride=c["output_stride"])


def _write_run(w: _Writer, name: str, res: dns.RunSeries) -> None:
    w.csv(f"{name}.csv", list(dns.RunSeries.COLUMNS), res.rows())
    w.json(f"{name}_summary.json", {"dt": res.dt, "xi_components": res.xi_components, "xi_norm": res.xi_norm,
                                    "config": _sim_dict(res.config)})


def _sim_dict(cfg: dns.SimConfig) -> dict:
    g = cfg.grid
    return {"kappa": g.kappa, "Nx": g.Nx, "Ny": g.Ny, "nu": cfg.nu, "t_end": cfg.t_end, "cfl": cfg.cfl,
            "max_dt": cfg.max_dt, "pattern": cfg.pattern, "amplitude_multiplier": cfg.amplitude_multiplier,
            "seed": cfg.seed, "output_stride": cfg.output_stride}


def _dns(c: dict, w: _Writer) -> List[acceptance.CriterionResult]:
    results: List[acceptance.CriterionResult] = []
    if c["run"]:
        res = dns.run_experiment(sim_config(c))
        _write_run(w, "run", res)
        w.svg("run.svg", line_chart(
            [("||Omega_neq||", res.t, res.omega_neq_L2), ("||U_neq||", res.t, res.u_neq_L2),
             ("probe y=0", res.t, res.depletion_probe_0)], "DNS diagnostics", "t", "norm", logy=True))
    scan = c["scan"]
    if scan["nu_list"]:
        t_end = scan["t_end"] if scan["t_end"] > 0 else c["t_end"]
        base = replace(sim_config(c), grid=TorusGrid(c["kappa"], scan["Nx"], scan["Ny"]), t_end=t_end)
        rows, transitions = dns.threshold_scan(scan["nu_list"], scan["multipliers"], c["pattern"], base)
        w.csv("scan.csv", ["nu", "multiplier", "initial", "final", "t_check", "classification", "note"],
              [(r.nu, r.multiplier, r.initial, r.final, r.t_check, r.classification, r.note) for r in rows])
        w.csv("scan_transitions.csv", ["nu", "transition_multiplier"], sorted(transitions.items()))
    if c["acceptance"]:
        r10 = acceptance.criterion_10()
        r11 = acceptance.criterion_11()
        for nu, run in r11.data["runs"].items():
            _write_run(w, f"scaling_nu{nu:g}", run)
        w.svg("scaling.svg", line_chart(
            [(f"nu={nu:g}", r.t, r.omega_neq_L2) for nu, r in r11.data["runs"].items()],
            "||Omega_neq|| in the scaling runs", "t", "norm", logy=True))
        results += [r10, r11]
    return results


EXPERIMENTS: Dict[str, Callable[[dict, _Writer], List[acceptance.CriterionResult]]] = {
    "coercivity": _coercivity,
    "linear-euler": _linear_euler,
    "resolvent": _resolvent,
    "quasilinear": _quasilinear,
    "dns": _dns,
}


def _apply_seed(conf: dict, seed: int | None) -> dict:
    if seed is None:
        return conf
    conf = json.loads(json.dumps(conf))
    conf["linear_euler"]["seed"] = seed
    conf["dns"]["seed"] = seed
    return conf


def run_experiment(name: str, conf: dict, out_dir: str | Path, seed: int | None = None) -> dict:
    """Run one experiment and return its ``result.json`` content."""
    if name not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}")
    conf = _apply_seed(conf, seed)
    section = conf[cfgmod.SECTION_FOR[name]]
    manifest = ExperimentManifest(name, config_digest(section), int(section.get("seed", 0)), _stamp(),
                                  config=section)
    w = _Writer(Path(out_dir) / name, manifest)
    t0 = time.perf_counter()
    log.info("running %s", name)
    crits = EXPERIMENTS[name](section, w)
    result = {
        "experiment": name,
        "config_digest": manifest.config_digest,
        "criteria": {str(r.number): r.as_dict() for r in crits},
    }
    w.json("result.json", result)
    manifest.runtime_s = time.perf_counter() - t0
    manifest.finished = _stamp()
    manifest.write(w.dir)
    for r in crits:
        log.info(r.line())
    return result


def _run_one(args):
    name, conf, out_dir, seed = args
    return run_experiment(name, conf, out_dir, seed)


def build_report(results: Sequence[dict], out_dir: str | Path) -> dict:
    """Aggregate experiment results into ``report.json``; every number keeps its experiment tag."""
    criteria = {}
    for res in results:
        for num, body in res["criteria"].items():
            criteria[num] = dict(body, experiment=res["experiment"], config_digest=res["config_digest"],
                                 manifest=f"{res['experiment']}/manifest.json")
    ordered = {k: criteria[k] for k in sorted(criteria, key=int)}
    failing = [int(k) for k, v in ordered.items() if not v["passed"]]
    report = {
        "schema": REPORT_SCHEMA,
        "status": "FAIL" if failing else "PASS",
        "failing": failing,
        "experiments": [r["experiment"] for r in results],
        "criteria": ordered,
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return report


def collect_results(out_dir: str | Path) -> List[dict]:
    """Read every ``<out_dir>/*/result.json`` (in experiment order)."""
    out = Path(out_dir)
    found = []
    for name in cfgmod.EXPERIMENTS:
        p = out / name / "result.json"
        if p.exists():
            found.append(json.loads(p.read_text(encoding="utf-8")))
    return found


def run_suite(config_path: str | Path | None, out_dir: str | Path = "out", threads: int = 1,
              seed: int | None = None, experiments: Sequence[str] | None = None) -> int:
    """Run the configured experiments and write ``report.json``.

    Returns 0 when every evaluated criterion passes, 1 when any fails (the
    failing criteria are named on stderr) and 2 for configuration errors.
    """
    try:
        conf = cfgmod.load(config_path)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    names = list(experiments if experiments is not None else conf["suite"]["experiments"])
    jobs = [(n, conf, str(out_dir), seed) for n in names]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    report = build_report(results, out_dir)
    for num, body in report["criteria"].items():
        verdict = "PASS" if body["passed"] else "FAIL"
        print(f"criterion {num}: {verdict}")
    if report["failing"]:
        names = ", ".join(f"{n} ({report['criteria'][str(n)]['title']})" for n in report["failing"])
        print(f"failing criteria: {names}", file=sys.stderr)
        return 1
    return 0


def report_from_outputs(out_dir: str | Path) -> int:
    """Rebuild ``report.json`` from existing experiment results without rerunning."""
    results = collect_results(out_dir)
    report = build_report(results, out_dir)
    if report["failing"]:
        print("failing criteria: " + ", ".join(map(str, report["failing"])), file=sys.stderr)
        return 1
    return 0
