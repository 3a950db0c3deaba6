"""Argument parsing and dispatch for the ``mulink`` command.

Exit codes: 0 on success, 2 for configuration problems (bad JSON, unknown
preset or analytic name, schema violations), 3 for numeric or domain
failures while running.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigError, DomainError, NumericError
from .analytic import analytic_names, parse_params, run_analytic, write_reports
from .presets import BetaJob, figure_preset, preset_names
from .runner import run_beta_job, run_scenario, write_rows
from .scenario import load_scenarios


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mulink",
        description="Multi-antenna downlink simulations: multi-stream "
                    "multiplexing versus receive combining.")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for Monte Carlo trials")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run scenarios from a JSON config")
    sim.add_argument("--config", required=True, help="scenario JSON (object or array)")
    sim.add_argument("--seed", type=int, default=None, help="override every scenario seed")
    sim.add_argument("--trials", type=int, default=None, help="override every trial count")
    sim.add_argument("--out", required=True, help="output CSV path")
    sim.set_defaults(func=_cmd_simulate)

    ana = sub.add_parser("analytic", help="evaluate a named closed form")
    ana.add_argument("--name", required=True,
                     help=f"one of: {', '.join(analytic_names())}")
    ana.add_argument("--params", default="", help="comma-separated key=value pairs")
    ana.add_argument("--out", default=None, help="output CSV path (default stdout)")
    ana.set_defaults(func=_cmd_analytic)

    fig = sub.add_parser("figure", help="run a named figure preset")
    fig.add_argument("--preset", required=True,
                     help=f"one of: {', '.join(preset_names())}")
    fig.add_argument("--out", required=True, help="output directory")
    fig.add_argument("--trials", type=int, default=None,
                     help="override the preset trial count")
    fig.add_argument("--seed", type=int, default=None,
                     help="override the preset seed")
    fig.set_defaults(func=_cmd_figure)
    return parser


def _cmd_simulate(args) -> int:
    scenarios = load_scenarios(
        args.config, seed_override=args.seed, trials_override=args.trials)
    rows = [run_scenario(sc, threads=args.threads) for sc in scenarios]
    write_rows(rows, args.out)
    return 0


def _cmd_analytic(args) -> int:
    reports = run_analytic(args.name, parse_params(args.params))
    write_reports(reports, args.out)
    return 0


def _cmd_figure(args) -> int:
    jobs = figure_preset(args.preset, trials=args.trials, seed=args.seed)
    rows = []
    for job in jobs:
        if isinstance(job, BetaJob):
            rows.append(run_beta_job(job))
        else:
            rows.append(run_scenario(job, threads=args.threads))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_rows(rows, out_dir / f"{args.preset}.csv")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, NumericError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
