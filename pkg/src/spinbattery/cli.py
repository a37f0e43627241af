"""Command-line front-end.

Verbs: ``sweep`` (CSV + figures), ``verify`` (theorem suite over a grid),
``plot`` (figures from an existing CSV), ``oracle`` (small-chain brute-force
comparison). Exit codes: 0 success, 2 config error, 3 theorem-check
violation, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, TheoremViolationError
from .plots import emit_plots
from .sweep import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_THEOREM,
    parse_config,
    read_rows,
    run_oracle,
    run_sweep,
    run_verification,
    write_csv,
    write_verification,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value sweep configuration file")
    parser.add_argument("--preset", help="named parameter preset (paper-default)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, help="parallel workers over the temperature grid")
    parser.add_argument("--kappa-b", dest="kappa_b", help="battery-charger coupling override")
    parser.add_argument("--phi", action="append",
                        help="measurement angle (accepts 'pi', '5pi/4'); repeatable")
    parser.add_argument("--site", action="append", help="measured charger site; repeatable")
    parser.add_argument("--theta", action="append",
                        help="unmeasured extraction phase; repeatable")
    parser.add_argument("--t-min", dest="t_min", help="lowest temperature")
    parser.add_argument("--t-max", dest="t_max", help="highest temperature")
    parser.add_argument("--t-points", dest="t_points", help="number of grid points")
    parser.add_argument("--order", action="append",
                        choices=["measure-first", "disconnect-first"],
                        help="event ordering; repeatable")


def _spec_from_args(args: argparse.Namespace):
    overrides = {
        "preset": args.preset,
        "out": args.out,
        "jobs": args.jobs,
        "kappa_b": args.kappa_b,
        "phi": args.phi,
        "site": args.site,
        "theta": args.theta,
        "t_min": args.t_min,
        "t_max": args.t_max,
        "t_points": args.t_points,
        "order": args.order,
    }
    return parse_config(args.config, overrides)


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    rows = run_sweep(spec)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = write_csv(rows, out_dir / "results.csv")
    print(f"wrote {len(rows)} rows to {csv_path}")
    if len({r.temperature for r in rows}) >= 2:
        for path in emit_plots(rows, out_dir):
            print(f"wrote {path}")
    else:
        print("plots skipped: single-temperature grid")
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    report = run_verification(spec)
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = write_verification(report, out_dir / "verify.txt")
    for line in report.summary_lines():
        print(line)
    print(f"wrote {path}")
    return EXIT_THEOREM if report.violations else EXIT_OK


def _cmd_plot(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    csv_path = Path(args.csv) if args.csv else Path(spec.out_dir) / "results.csv"
    rows = read_rows(csv_path)
    for path in emit_plots(rows, spec.out_dir):
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_oracle(args: argparse.Namespace) -> int:
    worst = run_oracle(n_charger=args.n_charger)
    width = max(len(k) for k in worst)
    for key in sorted(worst):
        print(f"{key:<{width}}  {worst[key]:.3e}")
    overall = max(worst.values())
    print(f"max discrepancy: {overall:.3e}")
    return EXIT_OK if overall <= args.tol else EXIT_THEOREM


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="spinbattery",
        description="Measurement-assisted spin-chain battery cycle simulator",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, func in (("sweep", _cmd_sweep), ("verify", _cmd_verify), ("plot", _cmd_plot)):
        p = sub.add_parser(verb)
        _add_common(p)
        if verb == "plot":
            p.add_argument("--csv", help="existing results CSV (default <out>/results.csv)")
        p.set_defaults(func=func)
    p = sub.add_parser("oracle")
    p.add_argument("--n-charger", dest="n_charger", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_oracle)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TheoremViolationError as exc:
        print(f"theorem check failed: {exc}", file=sys.stderr)
        return EXIT_THEOREM
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
