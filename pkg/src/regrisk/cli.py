"""``regrisk`` command line: theory, simulate, sweep, compare."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_sweep_spec
from .errors import RegriskError
from .simulate import run_trials, write_trial_csv
from .sweep import (
    THEORY_FIELDS,
    MCSettings,
    compare_report,
    grid_point,
    point_config,
    read_csv,
    run_sweep,
)
from .theory import ESTIMATORS, Regime

log = logging.getLogger("regrisk")


def _common(p: argparse.ArgumentParser, mc: bool = True):
    p.add_argument("config", nargs="?", help="INI config file (see configs/)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override any config field; repeatable")
    p.add_argument("--regime", choices=ESTIMATORS + ("all",), help="restrict to one estimator")
    p.add_argument("--lambda", dest="lam", type=float, help="ridge parameter")
    p.add_argument("--out-csv", help="CSV output path")
    if mc:
        p.add_argument("--seed", type=int, help="Monte Carlo seed")
        p.add_argument("--trials", type=int, help="Monte Carlo trials per grid point")
        p.add_argument("--workers", type=int, help="worker processes (default: $REGRISK_WORKERS or CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regrisk", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="evaluate the asymptotic formulas only")
    _common(p, mc=False)

    p = sub.add_parser("simulate", help="Monte Carlo means and standard errors only")
    _common(p)
    p.add_argument("--dump-trials", metavar="DIR", help="write per-trial CSV records into DIR")

    p = sub.add_parser("sweep", help="theory + Monte Carlo over the grid, CSV and plot")
    _common(p)
    p.add_argument("--out-plot", help="SVG output path (a .dat gnuplot file is written alongside)")
    p.add_argument("--no-mc", action="store_true", help="theory columns only")

    p = sub.add_parser("compare", help="z-score report for a sweep CSV")
    p.add_argument("csv")
    return parser


def _spec_from_args(args, force_no_mc: bool = False):
    overrides = list(args.overrides)
    if args.lam is not None:
        overrides.append(f"model.lambda={args.lam}")
    if args.regime and args.regime != "all":
        overrides.append(f"model.regimes={args.regime}")
    if getattr(args, "no_mc", False) or force_no_mc:
        overrides.append("mc.enabled=false")
    spec = load_sweep_spec(args.config, overrides)
    if spec.mc is not None:
        mc = spec.mc
        if getattr(args, "seed", None) is not None:
            mc = replace(mc, seed=args.seed)
        if getattr(args, "trials", None) is not None:
            mc = replace(mc, trials=args.trials)
        spec = replace(spec, mc=mc)
    if args.out_csv:
        spec = replace(spec, out_csv=args.out_csv)
    if getattr(args, "out_plot", None):
        spec = replace(spec, out_plot=args.out_plot)
    return spec


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.6g}"


def cmd_theory(args) -> int:
    spec = _spec_from_args(args, force_no_mc=True)
    table = run_sweep(spec)
    for row in table.rows:
        head = f"{table.axis}={row['axis_value']:g} (n={row['n']}, m={row['m']})"
        for r in table.regimes:
            status = row.get(f"{r}_status")
            if status != "OK":
                print(f"{head} {r}: {status}")
                continue
            vals = " ".join(f"{q}={_fmt(row.get(f'{r}_{q}_theory'))}" for q in THEORY_FIELDS)
            print(f"{head} {r}: gamma={_fmt(row.get(f'{r}_gamma_hat'))} {vals}")
    return 0


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    if spec.mc is None:
        spec = replace(spec, mc=MCSettings())
    dump = Path(args.dump_trials) if args.dump_trials else None
    if dump:
        dump.mkdir(parents=True, exist_ok=True)
    for i, value in enumerate(spec.grid):
        pt = grid_point(spec, value)
        cfg = point_config(spec, pt)
        regimes = []
        for name in spec.model.regimes:
            if name == "gls" and pt.m >= pt.n or name == "ls" and pt.m <= pt.n:
                print(f"{spec.axis}={value:g} {name}: INFEASIBLE")
                continue
            regimes.append(Regime(name, cfg.cov_rows is not None, pt.lam if name == "ridge" else 0.0))
        if not regimes:
            continue
        for regime, summ in zip(regimes, run_trials(cfg, regimes, args.workers)):
            parts = " ".join(f"{q}={e.mean:.6g}±{e.stderr:.2g}" for q, e in summ.estimates.items())
            print(f"{spec.axis}={value:g} (n={pt.n}, m={pt.m}) {regime.estimator}: {parts}")
            if dump:
                write_trial_csv(summ, dump / f"trials_{i:03d}_{regime.estimator}.csv")
    return 0


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    if spec.out_csv is None:
        spec = replace(spec, out_csv="sweep.csv")
    table = run_sweep(spec, workers=args.workers)
    print(f"wrote {spec.out_csv} ({len(table.rows)} rows)")
    if spec.out_plot:
        from .plot import emit_plot

        art = emit_plot(table, spec.out_plot)
        print(f"wrote {art.svg_path} and {art.data_path}")
    if spec.mc is not None:
        for line in compare_report(table).lines():
            print(line)
    return 0


def cmd_compare(args) -> int:
    report = compare_report(read_csv(args.csv))
    for line in report.lines():
        print(line)
    return report.exit_status


COMMANDS = {"theory": cmd_theory, "simulate": cmd_simulate, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except RegriskError as exc:
        print(f"regrisk: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
