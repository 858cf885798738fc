"""Load, filter, and pivot weekly surveillance exports into aligned series.

Input is delimited text (comma or semicolon, auto-detected from the header
line, UTF-8, header required).  A column mapping adapts arbitrary export
layouts to the canonical fields; the canonical internal schema is

    year, week, state, measure, total, sars_cov_2

with optional ``region_type`` / ``gender`` / ``scale`` columns used only for
filtering (absent columns default to the kept values).  Malformed rows are
collected into a rejects report with reason codes, never silently dropped.
Weeks missing for a (state, measure) are zero-filled and noted in an
imputation report: surveillance exports routinely omit zero-count weeks.

Week indexing is positional over the dataset's own sorted week sequence
rather than calendar arithmetic, because epidemiological calendars contain
53-week years.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, IngestionError
from .series import SeriesLabel, TimeSeries

__all__ = [
    "BR_STATES",
    "RawRecord",
    "LoadResult",
    "StateSeries",
    "StateDataset",
    "ReferenceTotals",
    "read_mapping",
    "load_raw",
    "filter_and_split",
    "load_reference",
    "write_report",
]

BR_STATES = frozenset(
    "AC AL AM AP BA CE DF ES GO MA MG MS MT PA PB PE PI PR "
    "RJ RN RO RR RS SC SE SP TO".split()
)

REQUIRED_FIELDS = ("year", "week", "region", "total", "sars_cov_2", "measure")
OPTIONAL_FIELDS = ("region_type", "gender", "scale")
OPTIONAL_DEFAULTS = {"region_type": "State", "gender": "Total", "scale": "Cases"}

DEFAULT_MAPPING = {
    "year": "year",
    "week": "week",
    "region": "state",
    "region_type": "region_type",
    "gender": "gender",
    "scale": "scale",
    "total": "total",
    "sars_cov_2": "sars_cov_2",
    "measure": "measure",
}


@dataclass(frozen=True)
class RawRecord:
    """One validated input row prior to filtering and pivoting."""

    year: int
    week: int
    region: str
    region_type: str
    gender: str
    scale: str
    total: int
    sars_cov_2: int
    measure: str


@dataclass(frozen=True)
class LoadResult:
    """Parsed records plus the rejects report (reason-coded bad rows)."""

    records: tuple[RawRecord, ...]
    rejects: tuple[dict, ...]


@dataclass(frozen=True)
class StateSeries:
    """The four aligned weekly series of one state."""

    cases: TimeSeries
    cases_reported: TimeSeries
    deaths: TimeSeries
    deaths_reported: TimeSeries

    def pair(self, measure: str) -> tuple[TimeSeries, TimeSeries]:
        """(observed, reported) series for ``measure``."""
        if measure == "cases":
            return self.cases, self.cases_reported
        if measure == "deaths":
            return self.deaths, self.deaths_reported
        raise DomainError(f"measure must be 'cases' or 'deaths', got {measure!r}")


@dataclass(frozen=True)
class StateDataset:
    """Aligned per-state weekly series sharing one week axis."""

    weeks: tuple[tuple[int, int], ...]
    series: dict[str, StateSeries]
    origin: tuple[int, int]
    filtered: dict[str, int] = field(default_factory=dict)
    imputed: tuple[dict, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.weeks)
        for state, group in self.series.items():
            for ts in (group.cases, group.cases_reported, group.deaths, group.deaths_reported):
                if len(ts) != n:
                    raise DomainError(
                        f"series for {state} has {len(ts)} weeks, axis has {n}"
                    )
        object.__setattr__(
            self, "_positions", {wk: j + 1 for j, wk in enumerate(self.weeks)}
        )

    @property
    def n_weeks(self) -> int:
        return len(self.weeks)

    def states(self) -> list[str]:
        return sorted(self.series)

    def week_index(self, year: int, week: int) -> int:
        """1-based position of (year, week) in the dataset's week axis."""
        try:
            return self._positions[(year, week)]
        except KeyError:
            raise DomainError(f"week ({year}, {week}) not present in dataset") from None

    def week_label(self, index: int) -> tuple[int, int]:
        """(year, week) of a 1-based position."""
        if not 1 <= index <= self.n_weeks:
            raise DomainError(f"index {index} outside 1..{self.n_weeks}")
        return self.weeks[index - 1]

    def write_canonical(self, path: str | Path) -> None:
        """Serialize to the canonical CSV schema (re-ingestable round trip)."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["year", "week", "state", "measure", "total", "sars_cov_2"])
            for state in self.states():
                group = self.series[state]
                for measure, (totals, reported) in (
                    ("cases", (group.cases, group.cases_reported)),
                    ("deaths", (group.deaths, group.deaths_reported)),
                ):
                    for j, (year, week) in enumerate(self.weeks):
                        writer.writerow(
                            [
                                year,
                                week,
                                state,
                                measure,
                                int(round(totals.values[j])),
                                int(round(reported.values[j])),
                            ]
                        )


@dataclass(frozen=True)
class ReferenceTotals:
    """Per-state cumulative confirmed counts used as a comparison column."""

    cases: dict[str, int] = field(default_factory=dict)
    deaths: dict[str, int] = field(default_factory=dict)


def read_mapping(path: str | Path) -> dict[str, str]:
    """Read ``canonical=source`` column-name pairs, one per line.

    Blank lines and ``#`` comments are ignored; unknown canonical names are
    fatal.
    """
    mapping: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise IngestionError(f"cannot read mapping file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise IngestionError(f"{path}:{lineno}: expected canonical=source, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in DEFAULT_MAPPING:
            raise IngestionError(
                f"{path}:{lineno}: unknown canonical field {key!r}; "
                f"known fields: {', '.join(sorted(DEFAULT_MAPPING))}"
            )
        mapping[key] = value
    return mapping


def _sniff_delimiter(header_line: str) -> str:
    return ";" if header_line.count(";") > header_line.count(",") else ","


def _read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            first = fh.readline()
            if not first.strip():
                raise IngestionError(f"{path}: empty file or missing header row")
            delimiter = _sniff_delimiter(first)
            reader = csv.reader([first] + fh.readlines(), delimiter=delimiter)
            rows = list(reader)
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    header = [h.strip() for h in rows[0]]
    return header, rows[1:]


def _parse_count(text: str) -> int:
    value = int(text.strip())
    return value


def load_raw(path: str | Path, mapping: dict[str, str] | None = None) -> LoadResult:
    """Parse a delimited export into records, collecting bad rows as rejects.

    ``mapping`` overrides entries of the default canonical mapping.  A
    required column missing from the header is fatal; optional filter
    columns fall back to their kept default unless explicitly mapped.
    """
    overrides = dict(mapping or {})
    effective = {**DEFAULT_MAPPING, **overrides}
    header, rows = _read_rows(path)
    position = {name: idx for idx, name in enumerate(header)}

    columns: dict[str, int | None] = {}
    for fld in REQUIRED_FIELDS:
        source = effective[fld]
        if source not in position:
            raise IngestionError(
                f"{path}: required column {source!r} (field {fld!r}) missing from header"
            )
        columns[fld] = position[source]
    for fld in OPTIONAL_FIELDS:
        source = effective[fld]
        if source in position:
            columns[fld] = position[source]
        elif fld in overrides:
            raise IngestionError(
                f"{path}: mapped column {source!r} (field {fld!r}) missing from header"
            )
        else:
            columns[fld] = None

    records: list[RawRecord] = []
    rejects: list[dict] = []

    def reject(lineno: int, reason: str, row: list[str]) -> None:
        rejects.append({"line": lineno, "reason": reason, "row": row})

    for offset, row in enumerate(rows):
        lineno = offset + 2
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            reject(lineno, "short row", row)
            continue

        def cell(fld: str) -> str:
            idx = columns[fld]
            return row[idx].strip() if idx is not None else OPTIONAL_DEFAULTS[fld]

        try:
            year = _parse_count(cell("year"))
            week = _parse_count(cell("week"))
            total = _parse_count(cell("total"))
            sars = _parse_count(cell("sars_cov_2"))
        except ValueError:
            reject(lineno, "bad integer", row)
            continue
        if not 1 <= week <= 53:
            reject(lineno, "week out of range", row)
            continue
        if total < 0 or sars < 0:
            reject(lineno, "negative count", row)
            continue
        if sars > total:
            reject(lineno, "reported exceeds total", row)
            continue
        measure = cell("measure").lower()
        if measure not in ("cases", "deaths"):
            reject(lineno, "bad measure", row)
            continue
        records.append(
            RawRecord(
                year=year,
                week=week,
                region=cell("region"),
                region_type=cell("region_type"),
                gender=cell("gender"),
                scale=cell("scale"),
                total=total,
                sars_cov_2=sars,
                measure=measure,
            )
        )
    return LoadResult(records=tuple(records), rejects=tuple(rejects))


def filter_and_split(
    records: tuple[RawRecord, ...] | list[RawRecord],
    origin: tuple[int, int] = (2009, 1),
) -> StateDataset:
    """Keep state-level aggregate rows, pivot into aligned weekly series.

    Keeps ``region_type = State``, ``gender = Total``, ``scale = Cases``
    (case-insensitive) from ``origin`` onwards; everything else is counted
    in the filter report.  Duplicate (state, year, week, measure) keys are
    fatal.  Cells absent for a kept (state, measure) are zero-filled and
    listed in the imputation report.
    """
    filtered: Counter[str] = Counter()
    kept: list[RawRecord] = []
    for rec in records:
        if rec.region_type.lower() != "state":
            filtered["region_type"] += 1
        elif rec.gender.lower() != "total":
            filtered["gender"] += 1
        elif rec.scale.lower() != "cases":
            filtered["scale"] += 1
        elif (rec.year, rec.week) < origin:
            filtered["before_origin"] += 1
        else:
            kept.append(rec)

    cells: dict[tuple[str, int, int, str], RawRecord] = {}
    for rec in kept:
        key = (rec.region, rec.year, rec.week, rec.measure)
        if key in cells:
            raise IngestionError(f"duplicate (state, year, week, measure) row: {key}")
        cells[key] = rec

    weeks = tuple(sorted({(rec.year, rec.week) for rec in kept}))
    states = sorted({rec.region for rec in kept})
    index_of = {wk: j for j, wk in enumerate(weeks)}

    imputed: list[dict] = []
    series: dict[str, StateSeries] = {}
    for state in states:
        arrays = {}
        for measure in ("cases", "deaths"):
            totals = np.zeros(len(weeks))
            reported = np.zeros(len(weeks))
            for (year, week), j in index_of.items():
                rec = cells.get((state, year, week, measure))
                if rec is None:
                    imputed.append(
                        {"state": state, "measure": measure, "year": year, "week": week}
                    )
                else:
                    totals[j] = rec.total
                    reported[j] = rec.sars_cov_2
            arrays[measure] = (totals, reported)
        series[state] = StateSeries(
            cases=TimeSeries(SeriesLabel(state, "cases"), arrays["cases"][0]),
            cases_reported=TimeSeries(SeriesLabel(state, "cases"), arrays["cases"][1]),
            deaths=TimeSeries(SeriesLabel(state, "deaths"), arrays["deaths"][0]),
            deaths_reported=TimeSeries(SeriesLabel(state, "deaths"), arrays["deaths"][1]),
        )

    imputed.sort(key=lambda note: (note["state"], note["measure"], note["year"], note["week"]))
    return StateDataset(
        weeks=weeks,
        series=series,
        origin=origin,
        filtered=dict(filtered),
        imputed=tuple(imputed),
    )


def load_reference(path: str | Path) -> ReferenceTotals:
    """Per-state cumulative confirmed cases and deaths for comparison.

    Expects ``state``, ``cases``, ``deaths`` columns; state codes must be
    known federal units, counts must be non-negative.  An empty file yields
    empty totals.
    """
    try:
        with open(path, encoding="utf-8-sig", newline="") as fh:
            first = fh.readline()
            if not first.strip():
                return ReferenceTotals()
            delimiter = _sniff_delimiter(first)
            reader = csv.reader([first] + fh.readlines(), delimiter=delimiter)
            rows = list(reader)
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc

    header = [h.strip().lower() for h in rows[0]]
    try:
        state_col = header.index("state")
        cases_col = header.index("cases")
        deaths_col = header.index("deaths")
    except ValueError as exc:
        raise IngestionError(
            f"{path}: reference file needs state, cases, deaths columns, got {header}"
        ) from exc

    cases: dict[str, int] = {}
    deaths: dict[str, int] = {}
    for offset, row in enumerate(rows[1:]):
        if not row or all(not cell.strip() for cell in row):
            continue
        lineno = offset + 2
        state = row[state_col].strip().upper()
        if state not in BR_STATES:
            raise IngestionError(f"{path}:{lineno}: unknown state code {state!r}")
        try:
            n_cases = _parse_count(row[cases_col])
            n_deaths = _parse_count(row[deaths_col])
        except ValueError as exc:
            raise IngestionError(f"{path}:{lineno}: bad count: {exc}") from exc
        if n_cases < 0 or n_deaths < 0:
            raise IngestionError(f"{path}:{lineno}: negative count for {state}")
        cases[state] = n_cases
        deaths[state] = n_deaths
    return ReferenceTotals(cases=cases, deaths=deaths)


def write_report(entries, path: str | Path) -> None:
    """Write a rejects or imputation report, one JSON record per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
