"""Batch drivers and serializers: run detection/estimation across states,
shape the results into report rows, and render CSV or JSON.

Rendering is deterministic: identical inputs and configuration produce
byte-identical output.  CSV rounds rates and margins to three decimals and
cumulative counts to integers; JSON carries full-precision numbers under
the same field names.
"""

from __future__ import annotations

import csv
import io
import json
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .detect import adaptive_normalization, change_finder, collapse_runs, consolidate_events
from .errors import DomainError, UndercountError
from .ingest import ReferenceTotals, StateDataset
from .novelty import analyze, build_baseline
from .series import TimeSeries

__all__ = [
    "RunConfig",
    "ReportRow",
    "EventRow",
    "REPORT_COLUMNS",
    "EVENT_COLUMNS",
    "derive_seed",
    "detect_events",
    "estimate",
    "render_report",
    "render_events",
    "write_plots",
]

MEASURE_CHOICES = ("cases", "deaths", "both")

REPORT_COLUMNS = (
    "state",
    "measure",
    "cum_novelty",
    "cum_reported",
    "rate",
    "margin",
    "gate",
    "reference_total",
)

EVENT_COLUMNS = ("state", "measure", "kind", "index", "year", "week")


@dataclass(frozen=True)
class RunConfig:
    """Everything a batch run needs beyond the dataset itself.

    ``start`` is the rupture week index shared by all states; ``None``
    anchors each state at its earliest 2020 change point instead.  The
    analysis evaluates weeks ``start..horizon``.
    """

    terms: int = 4
    period: int = 52
    start: int | None = 584
    horizon: int = 590
    detection_terms: int = 30
    window: int = 30
    reps: int = 1000
    level: float = 0.95
    alpha: float = 0.05
    seed: int = 1
    measure: str = "both"
    state: str = "all"
    noise_gate: str = "mean"
    noise_window: tuple[int, int] | None = None
    workers: int = 8

    def __post_init__(self) -> None:
        for name in ("terms", "period", "horizon", "detection_terms", "reps", "workers"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.window < 2:
            raise DomainError(f"window must be >= 2, got {self.window}")
        for name in ("level", "alpha"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise DomainError(f"{name} must be in (0, 1), got {getattr(self, name)}")
        if self.seed < 0:
            raise DomainError(f"seed must be non-negative, got {self.seed}")
        if self.start is not None and not 1 <= self.start < self.horizon:
            raise DomainError(
                f"rupture week {self.start} must satisfy 1 <= start < horizon={self.horizon}"
            )
        if self.measure not in MEASURE_CHOICES:
            raise DomainError(f"measure must be one of {MEASURE_CHOICES}, got {self.measure!r}")

    @property
    def measures(self) -> tuple[str, ...]:
        return ("cases", "deaths") if self.measure == "both" else (self.measure,)


@dataclass(frozen=True)
class ReportRow:
    """One state and measure of the estimation report.

    A numeric rate appears only when both significance gates passed and
    something was reported; otherwise ``gate`` carries the withheld code
    (or ``"error"`` for rows whose analysis failed).
    """

    state: str
    measure: str
    cum_novelty: float | None
    cum_reported: float | None
    rate: float | None
    margin: float | None
    gate: str
    reference_total: int | None

    def __post_init__(self) -> None:
        if self.rate is not None:
            if self.gate:
                raise DomainError("a row with a rate cannot carry a withheld code")
            if not self.cum_reported or self.cum_reported <= 0:
                raise DomainError("a rate requires a positive cumulative reported count")


@dataclass(frozen=True)
class EventRow:
    """One detected event, labelled with its (year, week)."""

    state: str
    measure: str
    kind: str
    index: int
    year: int
    week: int


def derive_seed(seed: int, state: str, measure: str) -> int:
    """Deterministic per-(state, measure) child seed from the global one."""
    ss = np.random.SeedSequence(
        [seed, zlib.crc32(state.encode("utf-8")), zlib.crc32(measure.encode("utf-8"))]
    )
    return int(ss.generate_state(1)[0])


def _selected_states(dataset: StateDataset, config: RunConfig) -> list[str]:
    if config.state == "all":
        return dataset.states()
    if config.state not in dataset.series:
        raise DomainError(f"state {config.state!r} not present in dataset")
    return [config.state]


def _check_range(dataset: StateDataset, config: RunConfig) -> None:
    if config.horizon > dataset.n_weeks:
        raise DomainError(
            f"horizon {config.horizon} beyond dataset length {dataset.n_weeks}"
        )
    if config.start is not None and config.start > dataset.n_weeks:
        raise DomainError(
            f"rupture week {config.start} beyond dataset length {dataset.n_weeks}"
        )


def _auto_start(dataset: StateDataset, config: RunConfig, y: TimeSeries) -> int:
    """Earliest collapsed change point falling in 2020."""
    events = change_finder(y, config.detection_terms, config.window)
    candidates = [
        i
        for i in collapse_runs(events.change_points)
        if dataset.week_label(i)[0] == 2020
    ]
    if not candidates:
        raise DomainError("no 2020 change point found to anchor the rupture week")
    start = min(candidates)
    if start >= config.horizon:
        raise DomainError(
            f"auto rupture week {start} is not before the horizon {config.horizon}"
        )
    return start


def detect_events(dataset: StateDataset, config: RunConfig) -> list[EventRow]:
    """Run both detectors over every selected series.

    Anomaly rows keep raw indices; change-point rows are collapsed to the
    first index of each consecutive run.
    """
    _check_range(dataset, config)
    rows: list[EventRow] = []
    for state in _selected_states(dataset, config):
        for measure in config.measures:
            y, _ = dataset.series[state].pair(measure)
            y = y.truncated(config.horizon)
            try:
                merged = consolidate_events(
                    adaptive_normalization(y, config.detection_terms),
                    change_finder(y, config.detection_terms, config.window),
                )
            except UndercountError as exc:
                raise DomainError(f"{state} {measure}: {exc}") from exc
            for i in merged.anomalies:
                year, week = dataset.week_label(i)
                rows.append(EventRow(state, measure, "anomaly", i, year, week))
            for i in collapse_runs(merged.change_points):
                year, week = dataset.week_label(i)
                rows.append(EventRow(state, measure, "change_point", i, year, week))
    rows.sort(key=lambda r: (r.state, r.measure, r.kind, r.index))
    return rows


def _estimate_one(
    dataset: StateDataset,
    config: RunConfig,
    reference: ReferenceTotals | None,
    state: str,
    measure: str,
) -> ReportRow:
    ref_total = None
    if reference is not None:
        pool = reference.cases if measure == "cases" else reference.deaths
        ref_total = pool.get(state)
    try:
        y, cov = dataset.series[state].pair(measure)
        y = y.truncated(config.horizon)
        cov = cov.truncated(config.horizon)
        start = config.start if config.start is not None else _auto_start(dataset, config, y)
        result = analyze(
            y,
            cov,
            terms=config.terms,
            period=config.period,
            start=start,
            reps=config.reps,
            level=config.level,
            alpha=config.alpha,
            seed=derive_seed(config.seed, state, measure),
            noise_window=config.noise_window,
            noise_gate=config.noise_gate,
        )
    except UndercountError:
        return ReportRow(
            state=state,
            measure=measure,
            cum_novelty=None,
            cum_reported=None,
            rate=None,
            margin=None,
            gate="error",
            reference_total=ref_total,
        )
    code = result.withheld_code
    return ReportRow(
        state=state,
        measure=measure,
        cum_novelty=result.cum_novelty,
        cum_reported=result.cum_reported,
        rate=result.rate if not code else None,
        margin=result.margin if not code else None,
        gate=code,
        reference_total=ref_total,
    )


def estimate(
    dataset: StateDataset,
    config: RunConfig,
    reference: ReferenceTotals | None = None,
) -> list[ReportRow]:
    """Full estimation across selected states and measures.

    Analyses fan out to a bounded worker pool; failures isolate to their
    row with ``gate="error"`` instead of aborting the batch.  Rows come
    back sorted by state code then measure, deterministically for a fixed
    seed.
    """
    _check_range(dataset, config)
    tasks = [
        (state, measure)
        for state in _selected_states(dataset, config)
        for measure in config.measures
    ]
    workers = max(1, min(config.workers, len(tasks) or 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(
            pool.map(
                lambda task: _estimate_one(dataset, config, reference, *task), tasks
            )
        )
    rows.sort(key=lambda r: (r.state, r.measure))
    return rows


def _csv_int(value: float | None) -> str:
    return "" if value is None else str(int(round(value)))


def _csv_rate(value: float | None) -> str:
    return "" if value is None else f"{value:.3f}"


def render_report(rows: list[ReportRow], fmt: str) -> str:
    """Serialize estimation rows as ``csv`` or ``json``."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.state,
                    r.measure,
                    _csv_int(r.cum_novelty),
                    _csv_int(r.cum_reported),
                    _csv_rate(r.rate),
                    _csv_rate(r.margin),
                    r.gate,
                    "" if r.reference_total is None else str(r.reference_total),
                ]
            )
        return buf.getvalue()
    if fmt == "json":
        payload = [
            {column: getattr(r, column) for column in REPORT_COLUMNS} for r in rows
        ]
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    raise DomainError(f"format must be 'csv' or 'json', got {fmt!r}")


def render_events(rows: list[EventRow], fmt: str) -> str:
    """Serialize event rows as ``csv`` or ``json``."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(EVENT_COLUMNS)
        for r in rows:
            writer.writerow([r.state, r.measure, r.kind, r.index, r.year, r.week])
        return buf.getvalue()
    if fmt == "json":
        payload = [
            {column: getattr(r, column) for column in EVENT_COLUMNS} for r in rows
        ]
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    raise DomainError(f"format must be 'csv' or 'json', got {fmt!r}")


def write_plots(
    dataset: StateDataset,
    config: RunConfig,
    directory,
    with_baseline: bool = True,
) -> list[str]:
    """Render one SVG per selected series into ``directory``.

    Each plot shows the observed series, detected events, and (for
    estimation runs) the inertial baseline over the rupture window.
    Returns the written file paths.
    """
    from .plot import render_series_plot  # matplotlib import deferred

    _check_range(dataset, config)
    written: list[str] = []
    for state in _selected_states(dataset, config):
        for measure in config.measures:
            y, _ = dataset.series[state].pair(measure)
            y = y.truncated(config.horizon)
            events = None
            baseline = None
            try:
                events = consolidate_events(
                    adaptive_normalization(y, config.detection_terms),
                    change_finder(y, config.detection_terms, config.window),
                )
                if with_baseline:
                    start = (
                        config.start
                        if config.start is not None
                        else _auto_start(dataset, config, y)
                    )
                    baseline = build_baseline(
                        y, config.terms, config.period, start, len(y)
                    )
            except UndercountError:
                pass  # plot whatever is available for short or odd series
            path = f"{directory}/{state}_{measure}.svg"
            render_series_plot(path, y, events=events, baseline=baseline)
            written.append(path)
    return written
