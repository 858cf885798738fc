"""Command-line driver: ingest data, run detection or estimation, emit reports.

Exit codes: 0 success, 1 configuration error, 2 ingestion error, 3 partial
success (the report was produced but some state rows errored).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import DomainError, IngestionError, UndercountError
from .ingest import filter_and_split, load_raw, load_reference, read_mapping
from .report import (
    MEASURE_CHOICES,
    RunConfig,
    detect_events,
    estimate,
    render_events,
    render_report,
    write_plots,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INGESTION = 2
EXIT_PARTIAL = 3


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--data", required=True, help="weekly surveillance CSV")
    sub.add_argument("--reference", help="per-state confirmed totals CSV")
    sub.add_argument("--mapping", help="canonical=source column mapping file")
    sub.add_argument("--measure", choices=MEASURE_CHOICES, default="both")
    sub.add_argument("--state", default="all", help="state code, or 'all'")
    sub.add_argument("--p", type=int, default=4, dest="terms",
                     help="seasonal term count for the baseline")
    sub.add_argument("--s", type=int, default=52, dest="period",
                     help="season length in weeks")
    sub.add_argument("--t", default="584", dest="start",
                     help="rupture start week index, or 'auto' to take each "
                          "state's earliest 2020 change point")
    sub.add_argument("--horizon", type=int, default=590,
                     help="last analysed week index")
    sub.add_argument("--detection-p", type=int, default=30, dest="detection_terms",
                     help="term count used by the event detectors")
    sub.add_argument("--window", type=int, default=30,
                     help="regression window of the change-point detector")
    sub.add_argument("--reps", type=int, default=1000, help="bootstrap resamples")
    sub.add_argument("--level", type=float, default=0.95, help="bootstrap CI level")
    sub.add_argument("--alpha", type=float, default=0.05,
                     help="significance level of the rate gates")
    sub.add_argument("--seed", type=int, default=1, help="global RNG seed")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--plots", metavar="DIR", help="write one SVG per series here")
    sub.add_argument("--output", help="report sink (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="undercount",
        description="Detect ruptures in weekly surveillance series and "
                    "estimate under-reporting against a seasonal baseline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    events = sub.add_parser("events", help="anomaly and change-point report")
    estimate_cmd = sub.add_parser("estimate", help="under-reporting rate report")
    _add_common_flags(events)
    _add_common_flags(estimate_cmd)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.start == "auto":
        start = None
    else:
        try:
            start = int(args.start)
        except ValueError:
            raise DomainError(f"--t must be an index or 'auto', got {args.start!r}")
    return RunConfig(
        terms=args.terms,
        period=args.period,
        start=start,
        horizon=args.horizon,
        detection_terms=args.detection_terms,
        window=args.window,
        reps=args.reps,
        level=args.level,
        alpha=args.alpha,
        seed=args.seed,
        measure=args.measure,
        state=args.state,
    )


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    try:
        Path(output).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DomainError(f"cannot write report to {output}: {exc}") from exc


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    try:
        config = _config_from_args(args)
    except DomainError as exc:
        print(f"undercount: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        mapping = read_mapping(args.mapping) if args.mapping else None
        loaded = load_raw(args.data, mapping)
        dataset = filter_and_split(loaded.records)
        reference = load_reference(args.reference) if args.reference else None
        for reject in loaded.rejects:
            print(
                f"undercount: rejected line {reject['line']}: {reject['reason']}",
                file=sys.stderr,
            )
    except IngestionError as exc:
        print(f"undercount: ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGESTION

    try:
        if args.command == "events":
            rows = detect_events(dataset, config)
            _emit(render_events(rows, args.format), args.output)
            errored = False
        else:
            report_rows = estimate(dataset, config, reference)
            _emit(render_report(report_rows, args.format), args.output)
            errored = any(r.gate == "error" for r in report_rows)
            for r in report_rows:
                if r.gate == "error":
                    print(
                        f"undercount: {r.state} {r.measure}: analysis failed",
                        file=sys.stderr,
                    )
        if args.plots:
            Path(args.plots).mkdir(parents=True, exist_ok=True)
            write_plots(
                dataset, config, args.plots, with_baseline=args.command == "estimate"
            )
    except UndercountError as exc:
        print(f"undercount: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    return EXIT_PARTIAL if errored else EXIT_OK


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
