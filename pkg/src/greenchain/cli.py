"""Command line entry point: ``greenchain run|validate|sweep``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .formats import FormatError
from .model import ModelError
from .oracle import BudgetExceeded, InstanceTooLarge
from .scenarios import ConfigParseError, InfeasibleCounts

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

log = logging.getLogger("greenchain")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="greenchain",
                                description="Energy-aware function placement and routing.")
    p.add_argument("--log-level", default="WARNING",
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="generate a scenario, solve it and write reports")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=Path("out"))
    run.add_argument("--seed", type=int)
    run.add_argument("--psi", type=int, help="beam width (paths kept per node)")
    run.add_argument("--oracle", action="store_true",
                     help="also solve exactly and write oracle.csv (small instances only)")

    val = sub.add_parser("validate", help="check a solution file against every constraint")
    val.add_argument("solution", type=Path)

    sw = sub.add_parser("sweep", help="run one experiment per parameter value")
    sw.add_argument("config", type=Path)
    sw.add_argument("--param", required=True, help="name=v1,v2,... e.g. psi=1,4,16")
    sw.add_argument("--out", type=Path, default=Path("out"))
    sw.add_argument("--seed", type=int)
    return p


def _cmd_run(args) -> int:
    result = harness.run_experiment(args.config, args.out, args.seed, args.psi)
    print(f"{result.scenario_id}: served {len(result.solve.assignments)}/"
          f"{len(result.scenario.flows)} flows, eta={result.eta:.6f}, "
          f"violations={len(result.report.violations)}")
    if args.oracle:
        cmp = harness.compare_scenario(result.scenario, result.spec.psi, result.scenario_id)
        harness.write_atomic(args.out / "oracle.csv", harness.oracle_csv([cmp]))
        print(f"oracle: status={cmp.status} ratio={cmp.ratio}")
    return EXIT_OK if result.report.ok else EXIT_VIOLATION


def _cmd_validate(args) -> int:
    report = harness.validate_file(args.solution)
    sys.stdout.write(report.to_text())
    print("ok" if report.ok else f"{len(report.violations)} violation(s)")
    return EXIT_OK if report.ok else EXIT_VIOLATION


def _cmd_sweep(args) -> int:
    if "=" not in args.param:
        raise ConfigParseError("--param expects name=v1,v2,...")
    name, raw = args.param.split("=", 1)
    values = [v.strip() for v in raw.split(",") if v.strip()]
    if not values:
        raise ConfigParseError("--param needs at least one value")
    text, violations = harness.sweep(args.config, name.strip(), values, args.out, args.seed)
    sys.stdout.write(text)
    return EXIT_OK if violations == 0 else EXIT_VIOLATION


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "sweep": _cmd_sweep}
    try:
        return handlers[args.command](args)
    except (ConfigParseError, FormatError, ModelError, InfeasibleCounts, OSError,
            InstanceTooLarge, BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
