"""Command-line interface.

Subcommands::

    splitbeam run    --config cfg.yaml --out DIR [--mode ct|st] [--branch d1|d2]
    splitbeam verify --config cfg.yaml [--out DIR]
    splitbeam oracle --config cfg.yaml

Exit codes: 0 success, 1 validation error, 2 runtime physics-guard
violation, 3 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

import yaml

from .config import load_config
from .errors import ConfigError, GeometryError
from .io import write_yaml
from .runner import run_experiment, write_artifacts
from .verify import oracle_predictions, run_verification, verification_summary

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PHYSICS = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitbeam",
        description="Beam-splitter experiment simulator with forward and backward wave evolution.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment and write its artifacts")
    run_p.add_argument("--config", required=True, help="YAML configuration file")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--mode", choices=("ct", "st"), help="override the configured mode")
    run_p.add_argument("--branch", choices=("d1", "d2"), help="override the configured branch")

    ver_p = sub.add_parser("verify", help="run the invariant suite and print pass/fail lines")
    ver_p.add_argument("--config", required=True)
    ver_p.add_argument("--out", help="also write verification.yaml into this directory")

    ora_p = sub.add_parser("oracle", help="print analytic predictions for a configuration")
    ora_p.add_argument("--config", required=True)

    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.mode:
        overrides["mode"] = args.mode
    if args.branch:
        overrides["branch"] = args.branch
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    artifacts = run_experiment(cfg)
    paths = write_artifacts(artifacts, args.out)
    print(f"report: {paths['report']}")
    print(f"snapshots: {len(paths['snapshots'])}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    cfg = load_config(args.config)
    checks = run_verification(cfg)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name}: measured={c.measured:.6g} threshold={c.threshold}")
    summary = verification_summary(checks)
    print(f"{'all checks passed' if summary['all_passed'] else 'SOME CHECKS FAILED'}")
    if args.out:
        import os

        os.makedirs(args.out, exist_ok=True)
        write_yaml(summary, os.path.join(args.out, "verification.yaml"))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    print(yaml.safe_dump(oracle_predictions(cfg), sort_keys=False), end="")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_oracle(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"physics guard violation: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
