"""Command-line interface.

    horolab run --config cfg.json [--out report.json] [--seed N] [--strict]
    horolab series --report report.json --name tau
    horolab validate --config cfg.json
    horolab plot --report report.json --out-dir figures/ [--name tau]

Exit codes: 0 success, 1 validation failure, 2 runtime error, 3 when
--strict is set and any experiment verdict is FAIL.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, load_config, validate_config
from .runner import report_json, run_experiment, series_csv

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_STRICT_FAIL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="horolab",
        description="Numerical experiments on iterates of nonexpansive maps",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiments of a config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="write the JSON report here (default: stdout)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--strict", action="store_true",
                     help="exit 3 when any experiment verdict is FAIL")
    run.add_argument("--trajectory-csv", help="also export the orbit as CSV")

    series = sub.add_parser("series", help="emit one report series as CSV")
    series.add_argument("--report", required=True)
    series.add_argument("--name", required=True)

    validate = sub.add_parser("validate", help="validate a config and exit")
    validate.add_argument("--config", required=True)

    plot = sub.add_parser("plot", help="render report series to CSV + PNG files")
    plot.add_argument("--report", required=True)
    plot.add_argument("--out-dir", required=True)
    plot.add_argument("--name", action="append",
                      help="series to render (repeatable; default: all available)")
    return parser


def _cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = validate_config(raw)
    report, wall = run_experiment(cfg)
    text = report_json(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"report written to {args.out} (wall time {wall:.3f} s)", file=sys.stderr)
    else:
        sys.stdout.write(text)
        print(f"wall time {wall:.3f} s", file=sys.stderr)
    if args.trajectory_csv:
        from .dynamics import iterate

        traj = iterate(cfg.build_map(), cfg.start, cfg.iterations, cfg.support_window)
        Path(args.trajectory_csv).write_text(traj.to_csv(), encoding="utf-8")
    if args.strict and any(r.get("verdict") == "FAIL" for r in report["results"]):
        return EXIT_STRICT_FAIL
    return EXIT_OK


def _cmd_series(args) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        report = json.load(fh)
    sys.stdout.write(series_csv(report, args.name))
    return EXIT_OK


def _cmd_validate(args) -> int:
    load_config(args.config)
    print("configuration valid")
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .plotting import export_figures

    with open(args.report, "r", encoding="utf-8") as fh:
        report = json.load(fh)
    written = export_figures(report, args.out_dir, args.name)
    for path in written:
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "series": _cmd_series,
        "validate": _cmd_validate,
        "plot": _cmd_plot,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    except json.JSONDecodeError as exc:
        print(f"config error: not valid JSON: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
