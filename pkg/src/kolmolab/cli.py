"""Command-line entry point: ``kolmolab <subcommand> [--config FILE] [--out-dir DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__, config as cfgmod, harness

SUBCOMMANDS = ("coercivity", "linear-euler", "resolvent", "quasilinear", "dns", "report")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file (defaults apply to omitted keys)")
    common.add_argument("--out-dir", default="out", help="output directory (default: out)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for independent experiments")
    common.add_argument("--seed", type=int, default=None, help="override the seed of every seeded experiment")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    p = argparse.ArgumentParser(prog="kolmolab", description=__doc__, parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("coercivity", parents=[common], help="sequence sweep, operator identities, coercive matrix")
    sub.add_parser("linear-euler", parents=[common], help="linearized Euler rates, w_1 residual, Green functions")
    sub.add_parser("resolvent", parents=[common], help="Rayleigh and Navier-Stokes resolvent sweeps")
    sub.add_parser("quasilinear", parents=[common], help="Morse transform and quasilinear error ledger")
    sub.add_parser("dns", parents=[common], help="nonlinear simulation, threshold scan, solver checks")
    rep = sub.add_parser("report", parents=[common],
                         help="run the [suite] experiments of --config, or rebuild report.json from --out-dir")
    rep.add_argument("--collect", action="store_true", help="only aggregate existing results in --out-dir")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", stream=sys.stderr)
    if args.command == "report":
        if args.collect:
            return harness.report_from_outputs(args.out_dir)
        return harness.run_suite(args.config, args.out_dir, args.threads, args.seed)
    try:
        conf = cfgmod.load(args.config)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    result = harness.run_experiment(args.command, conf, args.out_dir, args.seed)
    failing = []
    for num, body in result["criteria"].items():
        verdict = "PASS" if body["passed"] else "FAIL"
        print(f"criterion {num}: {verdict}  {body['title']}")
        if not body["passed"]:
            failing.append(num)
    if failing:
        print(f"failing criteria: {', '.join(failing)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
