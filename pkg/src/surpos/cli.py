"""Command-line interface.

Subcommands: ``pos`` (one POS estimate from a JSON run configuration),
``curve`` (POS across a sample-size grid), ``simulate`` (operating
characteristics for the built-in scenario grid), and ``synthesize``
(template historical datasets to CSV).  Worker-process count is capped by
the ``POS_SUR_THREADS`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys

from surpos.engine import THREADS_ENV
from surpos.io import emit_report, load_run_config, run_curve_from_config, run_from_config
from surpos.simulate import REGIONS, SCENARIOS, run_scenario
from surpos.templates import CORRELATIONS, TEMPLATES, synthesize_historical
from surpos.io import save_dataset


def _parse_grid(text: str) -> list[int]:
    """Parse 'start:stop:step' (stop inclusive) or a comma list of sizes."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("grid must be start:stop:step")
        start, stop, step = (int(p) for p in parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError("grid needs stop >= start and step > 0")
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--desk-scale", action="store_true",
                     help="reduced Monte Carlo presets for quick desk checks")
    sub.add_argument("--workers", type=int, default=None,
                     help=f"worker processes (default: {THREADS_ENV} or CPU count)")
    sub.add_argument("--out", default=None, help="write the report to this path")
    sub.add_argument("--format", choices=("json", "csv"), default="json",
                     help="report format when --out is given")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surpos",
        description="Bayesian probability of success for multi-endpoint trials",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_pos = subs.add_parser("pos", help="estimate POS from a run configuration")
    p_pos.add_argument("--config", required=True, help="JSON run configuration (or emitted report)")
    _add_common(p_pos)

    p_curve = subs.add_parser("curve", help="POS across a sample-size grid")
    p_curve.add_argument("--config", required=True)
    p_curve.add_argument("--n-grid", required=True, type=_parse_grid,
                         help="'start:stop:step' (stop inclusive) or 'n1,n2,...'")
    _add_common(p_curve)

    p_sim = subs.add_parser("simulate", help="operating-characteristic scenarios")
    p_sim.add_argument("--scenario", required=True, choices=SCENARIOS)
    p_sim.add_argument("--region", required=True, choices=REGIONS)
    p_sim.add_argument("--correlation", default="ind", choices=tuple(CORRELATIONS))
    p_sim.add_argument("--replicates", type=int, default=1000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--n", type=int, default=300, help="future trial sample size")
    p_sim.add_argument("--n0", type=int, default=981, help="historical trial sample size")
    p_sim.add_argument("--inner-draws", type=int, default=1000)
    _add_common(p_sim)

    p_syn = subs.add_parser("synthesize", help="write a template historical dataset to CSV")
    p_syn.add_argument("--template", required=True, choices=TEMPLATES)
    p_syn.add_argument("--n", type=int, required=True)
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--correlation", default="ind", choices=tuple(CORRELATIONS))
    p_syn.add_argument("--out", required=True, help="output CSV path")
    return parser


def _print_report(report, label: str = "") -> None:
    prefix = f"{label} " if label else ""
    comp = "" if report.comparator_rate is None else f"  holm={report.comparator_rate:.4f}"
    print(
        f"{prefix}pos={report.pos_unadjusted:.4f}  adjusted={report.pos_adjusted:.4f}  "
        f"mc_se={report.mc_se:.4f}{comp}"
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "pos":
        cfg = load_run_config(args.config)
        report = run_from_config(cfg, desk_scale=args.desk_scale, n_workers=args.workers)
        _print_report(report)
        if args.out:
            emit_report(report, args.out, fmt=args.format)
    elif args.command == "curve":
        cfg = load_run_config(args.config)
        points = run_curve_from_config(
            cfg, args.n_grid, desk_scale=args.desk_scale, n_workers=args.workers
        )
        for n, report in points:
            _print_report(report, label=f"n={n}")
        if args.out:
            emit_report([r for _, r in points], args.out, fmt=args.format)
    elif args.command == "simulate":
        inner = 500 if args.desk_scale else args.inner_draws
        replicates = min(args.replicates, 200) if args.desk_scale else args.replicates
        row, report = run_scenario(
            scenario=args.scenario,
            region_name=args.region,
            correlation=args.correlation,
            replicates=replicates,
            seed=args.seed,
            n=args.n,
            n0=args.n0,
            inner_draws=inner,
            n_workers=args.workers,
        )
        print(json.dumps(row))
        if args.out:
            emit_report(report, args.out, fmt=args.format)
    elif args.command == "synthesize":
        trial = synthesize_historical(
            args.template, args.n, seed=args.seed, correlation=args.correlation
        )
        save_dataset(trial.dataset, args.out)
        print(f"wrote {args.n} rows ({args.template}, correlation={args.correlation}) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
