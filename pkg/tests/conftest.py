import numpy as np
import pytest

from undercount import SeriesLabel, TimeSeries


@pytest.fixture
def label():
    return SeriesLabel("SP", "cases")


def make_series(values, region="SP", measure="cases"):
    return TimeSeries(SeriesLabel(region, measure), np.asarray(values, dtype=float))


def seasonal_counts(seed, n_weeks=624, period=52, base=200.0, amplitude=50.0, sigma=2.0):
    """Synthetic weekly counts: a seasonal sinusoid plus seeded noise."""
    rng = np.random.default_rng(seed)
    weeks = np.arange(1, n_weeks + 1)
    values = base + amplitude * np.sin(2 * np.pi * weeks / period) + rng.normal(0, sigma, n_weeks)
    return np.rint(np.clip(values, 0, None))


def inject_novelty(values, start, novelty, reported_fraction):
    """Add an integer novelty profile over the final weeks and return the
    modified totals, the aligned reported series, and the injected rate."""
    values = values.copy()
    novelty = np.rint(np.asarray(novelty, dtype=float))
    reported = np.rint(reported_fraction * novelty)
    covered = np.zeros(values.size)
    values[start - 1 :] += novelty
    covered[start - 1 :] = reported
    true_rate = (novelty.sum() - reported.sum()) / reported.sum()
    return values, covered, float(true_rate)


def canonical_csv(series_by_state, weeks):
    """Render canonical-format CSV text for {state: {measure: (total, rep)}}."""
    lines = ["year,week,state,measure,total,sars_cov_2"]
    for state in sorted(series_by_state):
        for measure in ("cases", "deaths"):
            if measure not in series_by_state[state]:
                continue
            totals, reported = series_by_state[state][measure]
            for (year, week), total, rep in zip(weeks, totals, reported):
                lines.append(f"{year},{week},{state},{measure},{int(total)},{int(rep)}")
    return "\n".join(lines) + "\n"


def week_axis(n_weeks, first_year=2009, period=52):
    return [(first_year + (i - 1) // period, (i - 1) % period + 1) for i in range(1, n_weeks + 1)]


def dataset_from_arrays(series_by_state, first_year=2009):
    """Build a StateDataset from {state: {measure: (totals, reported)}}."""
    from undercount import RawRecord, filter_and_split

    records = []
    for state, measures in series_by_state.items():
        for measure, (totals, reported) in measures.items():
            axis = week_axis(len(totals), first_year)
            for (year, week), total, rep in zip(axis, totals, reported):
                records.append(
                    RawRecord(
                        year=year,
                        week=week,
                        region=state,
                        region_type="State",
                        gender="Total",
                        scale="Cases",
                        total=int(total),
                        sars_cov_2=int(rep),
                        measure=measure,
                    )
                )
    return filter_and_split(records)
