"""Command-line entry point.

``cavity-adder run --scenario fig4a --out fig4a.csv`` reproduces one of the
built-in studies; ``run --config my.cfg`` runs a scenario described by a
flat key = value file.  Exit codes: 0 success, 1 configuration error,
2 numerical failure in at least one grid point, 3 reference-band violation
in ``--check`` mode.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

from .dynamics import IntegratorSpec
from .errors import CavityAdderError, ConfigError
from .harness import (
    Scenario,
    builtin_scenarios,
    check_against_reference,
    parse_config,
    sweep_kind,
    write_csv,
    write_json,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavity-adder",
        description="Transmon-qutrit/two-cavity adder simulation harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep scenario")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="built-in scenario id (see 'list')")
    src.add_argument("--config", type=Path, help="scenario config file (key = value)")
    run.add_argument("--theta-steps", type=int, help="override the theta grid size")
    run.add_argument("--k", type=float, help="override the cavity-decay scale")
    run.add_argument("--truncation", type=int, help="override the Fock truncation")
    run.add_argument("--hamiltonian", choices=("effective", "full"),
                     help="override the Hamiltonian path")
    run.add_argument("--unit-convention", choices=("angular", "cyclic"),
                     help="how quoted MHz values are read")
    run.add_argument("--out", type=Path, help="output path (default: stdout)")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--threads", type=int, default=1,
                     help="worker threads for independent sweep combos")
    run.add_argument("--seed", type=int, default=None,
                     help="reserved; recorded in metadata (no stochastic paths)")
    run.add_argument("--check", action="store_true",
                     help="compare averages against the reference table")
    run.add_argument("--rel-tol", type=float, default=None,
                     help="integrator relative tolerance")

    sub.add_parser("list", help="list built-in scenarios")
    return parser


def _scenario_from_args(args: argparse.Namespace) -> Scenario:
    if args.scenario is not None:
        registry = builtin_scenarios()
        if args.scenario not in registry:
            raise ConfigError(
                f"unknown scenario {args.scenario!r}; available: "
                f"{', '.join(sorted(registry))}"
            )
        scenario = registry[args.scenario]
    else:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        scenario = parse_config(text)

    overrides = {}
    if args.theta_steps is not None:
        overrides["theta_steps"] = args.theta_steps
    if args.k is not None:
        overrides["decay_scale_k"] = args.k
    if args.truncation is not None:
        overrides["truncation"] = args.truncation
    if args.hamiltonian is not None:
        overrides["hamiltonian_path"] = args.hamiltonian
    if args.unit_convention is not None:
        overrides["unit_convention"] = args.unit_convention
    if args.rel_tol is not None:
        overrides["integrator"] = IntegratorSpec(
            rel_tol=args.rel_tol, abs_tol=min(args.rel_tol * 1e-2, 1e-10)
        )
    if overrides:
        scenario = dataclasses.replace(scenario, **overrides)
    return scenario


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    if args.command == "list":
        for sid, sc in sorted(builtin_scenarios().items()):
            grids = (f"theta x {sc.theta_steps}"
                     + (f", crosstalk {sc.crosstalk_over_g}" if len(sc.crosstalk_over_g) > 1 else "")
                     + (f", coupling grid x {len(sc.coupling_grid)}" if len(sc.coupling_grid) > 1 else ""))
            print(f"{sid:8s} {sc.variant.value:14s} k1={sc.k1} k2={sc.k2}  {grids}")
        return 0

    try:
        scenario = _scenario_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        runner = sweep_kind(scenario)
        result = runner(scenario, threads=max(1, args.threads))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CavityAdderError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2

    if args.seed is not None:
        result.metadata["seed"] = args.seed

    if args.out is not None:
        with open(args.out, "w") as fh:
            (write_csv if args.format == "csv" else write_json)(result, fh)
    else:
        (write_csv if args.format == "csv" else write_json)(result, sys.stdout)

    bad_rows = [r for r in result.rows if r.error is not None or math.isnan(r.fidelity)]
    if bad_rows:
        print(f"warning: {len(bad_rows)} grid point(s) failed numerically",
              file=sys.stderr)
        return 2

    if args.check:
        findings = check_against_reference(result)
        for f in findings:
            print(f"check: {f}", file=sys.stderr)
        if findings:
            return 3

    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
