"""Command line entry point: ``sample {run,sweep,plan,validate}``."""

from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .potentials import ContractViolation
from .samplers import DivergenceError


def main(argv=None) -> int:
    try:
        return _dispatch(argv)
    except (ContractViolation, harness.ConfigError, DivergenceError,
            OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sample",
        description="Langevin sampling experiments for log-concave targets "
                    "with possibly nonsmooth energies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")

    p_sweep = sub.add_parser("sweep", help="repeat a config along one axis")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values")
    p_sweep.add_argument("--out", default=None)

    p_plan = sub.add_parser("plan", help="print planner output as JSON")
    p_plan.add_argument("config")
    p_plan.add_argument("--eps", type=float, required=True)
    p_plan.add_argument("--mode", required=True, choices=harness.PLAN_MODES)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config")

    args = parser.parse_args(argv)
    cfg = harness.load_config(args.config)

    if args.command == "validate":
        diags = harness.validate(cfg)
        for diag in diags:
            print(diag)
        return 0 if not diags else 1

    if args.command == "plan":
        pot = harness.build_potential(cfg["potential"])
        cfg.setdefault("sampler", {}).setdefault("planner", {})
        plan, _ = harness.resolve_plan(cfg, pot, mode=args.mode, eps=args.eps)
        print(json.dumps(plan.to_dict(), sort_keys=True, indent=2))
        return 0

    if args.command == "run":
        report = harness.run_experiment(cfg, out_dir=args.out)
        print(report.to_json())
        return 0

    if args.command == "sweep":
        values = []
        for token in args.values.split(","):
            token = token.strip()
            values.append(int(token) if args.axis in ("K", "n_chains")
                          else float(token))
        rows = harness.sweep(cfg, args.axis, values, out_dir=args.out)
        print(json.dumps(rows, sort_keys=True, indent=2))
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
