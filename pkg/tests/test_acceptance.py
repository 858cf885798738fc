"""Acceptance suite: one test per exit criterion, each printing a PASS line.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines.  Criterion 2 needs a real surveillance snapshot and is skipped unless
``UNDERCOUNT_INFOGRIPE`` points at one (optionally with
``UNDERCOUNT_INFOGRIPE_MAPPING`` for raw export layouts).
"""

import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from undercount import (
    AverageSpec,
    RunConfig,
    bootstrap_mean_ci,
    build_baseline,
    change_finder,
    collapse_runs,
    estimate,
    filter_and_split,
    load_raw,
    moving_average,
    novelty_series,
    pre_novelty_noise,
    read_mapping,
    under_report,
    wilcoxon_signed_rank,
)
from undercount.cli import main as cli_main
from conftest import (
    canonical_csv,
    inject_novelty,
    make_series,
    seasonal_counts,
    week_axis,
)
from oracles import wilcoxon_brute_force


def report(criterion, name):
    print(f"\nACCEPTANCE {criterion} ({name}): PASS")


# (cum_novelty, cum_reported) -> published rate, cases measure
PUBLISHED_CASE_RATES = {
    "AL": (308, 152, 1.026),
    "AM": (3824, 2165, 0.766),
    "AP": (83, 39, 1.128),
    "BA": (832, 350, 1.377),
    "CE": (4704, 2085, 1.256),
    "DF": (401, 251, 0.598),
    "ES": (243, 152, 0.599),
    "GO": (363, 162, 1.241),
    "MA": (650, 132, 3.924),
    "MG": (3553, 484, 6.341),
    "MS": (420, 53, 6.925),
    "MT": (360, 85, 3.235),
    "PA": (1390, 909, 0.529),
    "PB": (619, 168, 2.685),
    "PE": (3158, 976, 2.236),
    "PI": (602, 186, 2.237),
    "PR": (1779, 389, 3.573),
    "RJ": (8069, 3679, 1.193),
    "RN": (386, 207, 0.865),
    "RR": (71, 45, 0.578),
    "RS": (2175, 615, 2.537),
    "SC": (972, 303, 2.208),
    "SE": (92, 62, 0.484),
    "SP": (25938, 13057, 0.987),
    "TO": (141, 38, 2.711),
}

PUBLISHED_DEATH_RATES = {
    "AL": (49, 34, 0.441),
    "AM": (2023, 1147, 0.764),
    "BA": (200, 110, 0.818),
    "CE": (1429, 983, 0.454),
    "DF": (90, 33, 1.727),
    "MA": (60, 31, 0.935),
    "MG": (434, 94, 3.617),
    "PA": (473, 414, 0.143),
    "PB": (133, 86, 0.547),
    "PE": (653, 369, 0.770),
    "PI": (86, 34, 1.529),
    "PR": (287, 83, 2.458),
    "RJ": (2236, 1577, 0.418),
    "RN": (83, 68, 0.221),
    "RS": (303, 77, 2.935),
    "SC": (104, 48, 1.167),
    "SE": (22, 13, 0.692),
    "SP": (5131, 3207, 0.600),
}

# full cumulative-novelty columns, including withheld rows
PUBLISHED_CASE_NOVELTY = {
    "AC": 0, "AL": 308, "AM": 3824, "AP": 83, "BA": 832, "CE": 4704,
    "DF": 401, "ES": 243, "GO": 363, "MA": 650, "MG": 3553, "MS": 420,
    "MT": 360, "PA": 1390, "PB": 619, "PE": 3158, "PI": 602, "PR": 1779,
    "RJ": 8069, "RN": 386, "RO": 27, "RR": 71, "RS": 2175, "SC": 972,
    "SE": 92, "SP": 25938, "TO": 141,
}
PUBLISHED_DEATH_NOVELTY = {
    "AC": 0, "AL": 49, "AM": 2023, "AP": 26, "BA": 200, "CE": 1429,
    "DF": 90, "ES": 91, "GO": 61, "MA": 60, "MG": 434, "MS": 26,
    "MT": 34, "PA": 473, "PB": 133, "PE": 653, "PI": 86, "PR": 287,
    "RJ": 2236, "RN": 83, "RO": 3, "RR": 17, "RS": 303, "SC": 104,
    "SE": 22, "SP": 5131, "TO": 13,
}

# published 2020 change-point weeks for cases, as (year, epidemiological
# week); Saturday-labelled dates map week 11 -> March 14th etc.
EXPECTED_CASE_CP_WEEK = {
    "AC": None, "AL": (2020, 14), "AM": (2020, 13), "AP": (2020, 12),
    "BA": (2020, 11), "CE": (2020, 13), "DF": (2020, 11), "ES": (2020, 11),
    "GO": (2020, 11), "MA": (2020, 8), "MG": (2020, 11), "MS": (2020, 11),
    "MT": (2020, 11), "PA": (2020, 14), "PB": (2020, 11), "PE": (2020, 12),
    "PI": (2020, 11), "PR": None, "RJ": (2020, 12), "RN": (2020, 12),
    "RO": (2020, 13), "RR": (2020, 11), "RS": (2020, 12), "SC": (2020, 13),
    "SE": (2020, 11), "SP": (2020, 11), "TO": (2020, 11),
}


def test_criterion_1_rate_arithmetic_goldens():
    started = time.perf_counter()
    for table in (PUBLISHED_CASE_RATES, PUBLISHED_DEATH_RATES):
        for state, (cum_novelty, cum_reported, published) in table.items():
            got = under_report(
                np.array([float(cum_novelty)]), np.array([float(cum_reported)]), start=1
            )
            assert got.rate == pytest.approx(published, abs=0.005), state
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"golden arithmetic took {elapsed:.2f}s"
    report(1, "rate arithmetic goldens")


@pytest.mark.skipif(
    "UNDERCOUNT_INFOGRIPE" not in os.environ,
    reason="InfoGripe snapshot not supplied (set UNDERCOUNT_INFOGRIPE)",
)
def test_criterion_2_infogripe_snapshot_reproduction():
    mapping_path = os.environ.get("UNDERCOUNT_INFOGRIPE_MAPPING")
    mapping = read_mapping(mapping_path) if mapping_path else None
    loaded = load_raw(os.environ["UNDERCOUNT_INFOGRIPE"], mapping)
    dataset = filter_and_split(loaded.records)

    config = RunConfig()  # published defaults: rupture week 584, horizon 590
    assert dataset.week_index(2020, 11) == config.start

    # change-point weeks: at least 20 of the 27 states must match for cases
    matches = 0
    for state, expected in EXPECTED_CASE_CP_WEEK.items():
        y, _ = dataset.series[state].pair("cases")
        y = y.truncated(config.horizon)
        events = change_finder(y, config.detection_terms, config.window)
        cps_2020 = [
            dataset.week_label(i)
            for i in collapse_runs(events.change_points)
            if dataset.week_label(i)[0] == 2020
        ]
        got = min(cps_2020) if cps_2020 else None
        if got == expected:
            matches += 1
    assert matches >= 20, f"only {matches}/27 change-point weeks matched"

    # cumulative novelty within 5 percent of the published columns
    rows = estimate(dataset, config)
    by_key = {(r.state, r.measure): r for r in rows}
    for table, measure in (
        (PUBLISHED_CASE_NOVELTY, "cases"),
        (PUBLISHED_DEATH_NOVELTY, "deaths"),
    ):
        for state, published in table.items():
            if published <= 0:
                continue
            got = by_key[(state, measure)].cum_novelty
            assert got == pytest.approx(published, rel=0.05), (state, measure)
    report(2, "snapshot reproduction")


def test_criterion_3_wilcoxon_exact_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(20260809)
    for trial in range(200):
        m = int(rng.integers(1, 11))
        if trial % 3 == 0:
            diffs = rng.integers(-4, 5, m).astype(float)  # ties and zeros
        else:
            diffs = rng.normal(0.2, 1.0, m)
        got = wilcoxon_signed_rank(diffs)
        expected = wilcoxon_brute_force(diffs)
        assert got.p_value == expected, (trial, diffs)
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"oracle comparison took {elapsed:.2f}s"
    report(3, "wilcoxon exact vs brute force")


def test_criterion_4_bootstrap_coverage_and_determinism():
    started = time.perf_counter()
    trials = 500
    covered = 0
    for k in range(trials):
        xs = np.random.default_rng(1000 + k).normal(0.0, 1.0, 100)
        ci = bootstrap_mean_ci(xs, reps=1000, level=0.95, seed=2000 + k)
        if ci.lo <= 0.0 <= ci.hi:
            covered += 1
    coverage = covered / trials
    assert 0.92 <= coverage <= 0.98, f"coverage {coverage:.3f} outside 0.95 +/- 0.03"

    xs = np.random.default_rng(5).normal(0.0, 1.0, 100)
    a = bootstrap_mean_ci(xs, seed=77)
    b = bootstrap_mean_ci(xs, seed=77)
    assert (a.mean, a.lo, a.hi) == (b.mean, b.lo, b.hi)

    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"coverage experiment took {elapsed:.2f}s"
    report(4, f"bootstrap coverage {coverage:.3f}")


def test_criterion_5_estimator_properties_hold_everywhere():
    rng = np.random.default_rng(424242)
    violations = 0
    for _ in range(1000):
        n = int(rng.integers(1, 120))
        values = np.round(rng.uniform(0.0, 1e4, n), 6)
        y = make_series(values)
        period = int(rng.integers(1, 5))
        max_terms = (n - 1) // period + 1
        terms = int(rng.integers(1, max_terms + 1))
        i = int(rng.integers((terms - 1) * period + 1, n + 1))
        kind = ("simple", "exponential")[int(rng.integers(0, 2))]
        spec = AverageSpec(terms=terms, period=period, kind=kind)

        window = values[i - 1 - (terms - 1) * period : i : period]
        avg = moving_average(y, i, spec)
        if not window.min() - 1e-9 <= avg <= window.max() + 1e-9:
            violations += 1
        if moving_average(y, i, AverageSpec(1, period, kind)) != values[i - 1]:
            violations += 1
        constant = make_series(np.full(n, values[0]))
        if not np.isclose(
            moving_average(constant, i, spec), values[0], rtol=1e-12, atol=1e-9
        ):
            violations += 1
        a, b = rng.uniform(0.1, 10.0), rng.uniform(0.0, 100.0)
        transformed = make_series(a * values + b)
        if not np.isclose(
            moving_average(transformed, i, spec),
            a * avg + b,
            rtol=1e-9,
            atol=1e-9,
        ):
            violations += 1
    assert violations == 0
    report(5, "estimator properties, 1000 random series")


def test_criterion_6_model_closure_is_exact():
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(9000 + seed)
        n = int(rng.integers(260, 420))
        start = int(rng.integers(220, n - 5))
        values = seasonal_counts(
            seed=seed, n_weeks=n, base=rng.uniform(100, 600), amplitude=50, sigma=3
        )
        y = make_series(values)
        pre = build_baseline(y, 4, 52, 209, start - 1)
        noise = pre_novelty_noise(y, pre, seed=seed)
        window = build_baseline(y, 4, 52, start, n)
        eta = novelty_series(y, window, noise, start)
        closure = y.values[start - 1 :] - window.values - eta - noise.mean
        worst = max(worst, float(np.abs(closure).max()))
    assert worst < 1e-12, f"worst closure residual {worst:.3e}"
    report(6, f"model closure, worst residual {worst:.1e}")


def test_criterion_7_end_to_end_synthetic_recovery(tmp_path):
    started = time.perf_counter()
    n, start, weeks = 624, 618, week_axis(624)
    hits = 0
    trials = 100
    for seed in range(trials):
        base = seasonal_counts(seed=seed, n_weeks=n)
        rng = np.random.default_rng(10_000 + seed)
        injected = rng.uniform(400, 800, n - start + 1)
        totals, reported, true_rate = inject_novelty(
            base, start, injected, reported_fraction=0.4
        )
        data = tmp_path / f"seed_{seed}.csv"
        data.write_text(
            canonical_csv({"SP": {"cases": (totals, reported)}}, weeks),
            encoding="utf-8",
        )
        out = tmp_path / f"seed_{seed}.json"
        code = cli_main(
            [
                "estimate",
                "--data", str(data),
                "--measure", "cases",
                "--t", str(start),
                "--horizon", str(n),
                "--seed", str(seed),
                "--format", "json",
                "--output", str(out),
            ]
        )
        assert code == 0
        [row] = json.loads(out.read_text(encoding="utf-8"))
        if row["rate"] is not None and abs(row["rate"] - true_rate) / true_rate <= 0.05:
            hits += 1
    elapsed = time.perf_counter() - started
    assert hits >= 95, f"recovered the injected rate in only {hits}/{trials} runs"
    assert elapsed < 30.0, f"end-to-end recovery took {elapsed:.2f}s"
    report(7, f"end-to-end recovery {hits}/{trials}")


def test_criterion_8_change_point_latency():
    terms = 30
    hits = 0
    trials = 100
    for seed in range(trials):
        rng = np.random.default_rng(3000 + seed)
        values = rng.normal(0.0, 1.0, 300) + 100.0
        shift_at = 250
        values[shift_at - 1 :] += 10.0  # ten sigma level shift
        got = change_finder(make_series(values), terms=terms, window=30)
        if got.change_points and min(abs(i - shift_at) for i in got.change_points) <= terms:
            hits += 1
    assert hits >= 95, f"located the shift within +/-{terms} in only {hits}/{trials}"
    report(8, f"change-point latency {hits}/{trials}")


def test_criterion_9_cli_determinism(tmp_path):
    n, start = 624, 618
    base = seasonal_counts(seed=31, n_weeks=n)
    injected = np.random.default_rng(32).uniform(400, 800, n - start + 1)
    totals, reported, _ = inject_novelty(base, start, injected, reported_fraction=0.4)
    deaths = np.rint(totals * 0.1)
    deaths_rep = np.minimum(np.rint(reported * 0.1), deaths)
    data = tmp_path / "det.csv"
    data.write_text(
        canonical_csv(
            {"SP": {"cases": (totals, reported), "deaths": (deaths, deaths_rep)}},
            week_axis(n),
        ),
        encoding="utf-8",
    )
    for fmt in ("csv", "json"):
        outputs = []
        for run in (1, 2):
            out = tmp_path / f"run{run}.{fmt}"
            proc = subprocess.run(
                [
                    sys.executable, "-m", "undercount.cli", "estimate",
                    "--data", str(data),
                    "--t", str(start),
                    "--horizon", str(n),
                    "--seed", "11",
                    "--format", fmt,
                    "--output", str(out),
                ],
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1], f"{fmt} outputs differ between runs"
    report(9, "byte-identical CLI runs")
