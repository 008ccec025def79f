"""Command-line entry point.

Exit codes: 0 on success, 1 on a runtime failure (tuning, sampling, missing
oracle, missing artifacts), 2 on bad usage or a malformed config file.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from . import __version__
from .config import parse_config
from .errors import (ConfigError, FactorizationFailure, NotInterior, OracleUnavailable,
                     StepTooLarge, TuningFailed, ZeroVariance)
from .harness import compute_ground_truth, resolve_step_sizes, run_experiment, summarize_run

_RUNTIME_ERRORS = (TuningFailed, OracleUnavailable, NotInterior, StepTooLarge,
                   FactorizationFailure, ZeroVariance)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dikin-sampler",
        description="Constrained Langevin samplers with barrier-induced metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from an INI config")
    run_p.add_argument("config", help="path to the experiment config")
    run_p.add_argument("--out", help="output directory (overrides the config)")
    run_p.add_argument("--seed", type=int, help="master seed override")
    run_p.add_argument("--chains", type=int, help="chain count override")
    run_p.add_argument("--iters", type=int,
                       help="iteration count override (warmup shrinks to fit)")

    truth_p = sub.add_parser("truth", help="print ground-truth functional values")
    truth_p.add_argument("config")

    tune_p = sub.add_parser("tune", help="run only the step-size tuning phase")
    tune_p.add_argument("config")
    tune_p.add_argument("--seed", type=int, help="master seed override")

    diag_p = sub.add_parser("diagnose", help="recompute diagnostics from persisted traces")
    diag_p.add_argument("run_dir", help="directory produced by the run command")

    sub.add_parser("version", help="print the package version")
    return parser


def _load_config(path: str, args: argparse.Namespace):
    config = parse_config(path)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "chains", None) is not None:
        overrides["chains"] = args.chains
    if getattr(args, "iters", None) is not None:
        overrides["iterations"] = args.iters
    if getattr(args, "out", None) is not None:
        overrides["output_dir"] = args.out
    return config.with_overrides(**overrides) if overrides else config


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False))


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    try:
        if args.command == "version":
            print(__version__)
            return 0

        if args.command == "diagnose":
            try:
                _emit(summarize_run(args.run_dir, write_outputs=True))
            except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
                print(f"diagnose failed: {exc}", file=sys.stderr)
                return 1
            return 0

        config = _load_config(args.config, args)

        if args.command == "truth":
            truths = compute_ground_truth(config)
            _emit({name: asdict(gt) for name, gt in truths.items()})
            return 0

        if args.command == "tune":
            _emit(resolve_step_sizes(config))
            return 0

        if args.command == "run":
            summary = run_experiment(config)
            _emit(summary)
            return 0

        raise AssertionError(f"unhandled command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc.__class__.__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
