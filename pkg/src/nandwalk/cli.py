"""Command-line entry point: ``nandwalk run --config cfg.json`` plus overrides.

Exit codes: 0 when every executed decision agrees with the classical value,
1 when a disagreement was found, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .formula import FormulaError
from .graphs import GraphError
from .runner import ExperimentConfig, ExperimentError, report_to_csv, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nandwalk",
        description="Evaluate NAND formula trees with quantum-walk simulations "
        "and cross-check against the classical evaluator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment sweep")
    run.add_argument("--config", help="JSON config file (flags below override it)")
    run.add_argument(
        "--algorithm",
        choices=["scattering", "tail", "reflections", "coined-long", "coined-short", "classical", "all"],
        help="decision procedure to run",
    )
    run.add_argument("--depth", help="full binary tree depth, e.g. 2 or 2..8")
    run.add_argument("--formula", help="formula text, e.g. 'NAND(x1,x2)'")
    run.add_argument(
        "--assignment",
        help="exhaustive | all-ones | all-zeros | worst-case | canonical-f1 | "
        "bit string like 1010 | random:COUNT[:SEED]",
    )
    run.add_argument("--seed", type=int, help="seed for sampling and phase estimation")
    run.add_argument("--L-mult", dest="l_mult", type=float, help="tail length multiplier")
    run.add_argument("--M-mult", dest="m_mult", type=float, help="runway length multiplier")
    run.add_argument("--t-mult", dest="t_mult", type=float, help="evolution time multiplier")
    run.add_argument("--out", help="write the JSON report here")
    run.add_argument("--csv", help="also write the CSV projection here")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    raw: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    if args.algorithm:
        raw["algorithm"] = args.algorithm
    if args.depth and args.formula:
        raise ExperimentError("--depth and --formula are mutually exclusive")
    if args.depth:
        if ".." in args.depth:
            lo, hi = args.depth.split("..", 1)
            raw["tree"] = {"full_binary": [int(lo), int(hi)]}
        else:
            raw["tree"] = {"full_binary": int(args.depth)}
    if args.formula:
        raw["tree"] = {"formula": args.formula}
    if args.assignment:
        raw["assignment"] = args.assignment
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.l_mult is not None:
        raw["l_multiplier"] = args.l_mult
    if args.m_mult is not None:
        raw["m_multiplier"] = args.m_mult
    if args.t_mult is not None:
        raw["time_multiplier"] = args.t_mult
    if args.out:
        raw["out"] = args.out
    return ExperimentConfig.from_dict(raw)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run_experiment(cfg)
    except (ExperimentError, FormulaError, GraphError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report_to_csv(report))
    rate = report["aggregate"]["agreement_rate"]
    n = len(report["instances"])
    print(f"{n} instances, agreement rate {rate:.4f}")
    if cfg.out:
        print(f"report written to {cfg.out}")
    return 0 if rate == 1.0 else 1


if __name__ == "__main__":
    sys.exit(main())
