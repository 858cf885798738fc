import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import canonical_csv, inject_novelty, seasonal_counts, week_axis


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "undercount.cli", *args],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="module")
def epidemic_csv(tmp_path_factory):
    """One-state cases dataset with a known injected rate, on disk."""
    n, start = 624, 618
    base = seasonal_counts(seed=60, n_weeks=n)
    rng = np.random.default_rng(61)
    inj = rng.uniform(400, 800, n - start + 1)
    totals, reported, rate = inject_novelty(base, start, inj, reported_fraction=0.4)
    text = canonical_csv({"SP": {"cases": (totals, reported)}}, week_axis(n))
    path = tmp_path_factory.mktemp("data") / "epidemic.csv"
    path.write_text(text, encoding="utf-8")
    return path, rate, start, n


def estimate_args(path, start, n, *extra):
    return (
        "estimate",
        "--data", str(path),
        "--measure", "cases",
        "--t", str(start),
        "--horizon", str(n),
        *extra,
    )


class TestEstimateCommand:
    def test_recovers_rate_csv(self, epidemic_csv):
        path, rate, start, n = epidemic_csv
        proc = run_cli(*estimate_args(path, start, n))
        assert proc.returncode == 0, proc.stderr
        header, row = proc.stdout.strip().split("\n")
        fields = dict(zip(header.split(","), row.split(",")))
        assert fields["state"] == "SP"
        assert fields["gate"] == ""
        assert float(fields["rate"]) == pytest.approx(rate, rel=0.05)

    def test_json_format(self, epidemic_csv):
        path, rate, start, n = epidemic_csv
        proc = run_cli(*estimate_args(path, start, n, "--format", "json"))
        assert proc.returncode == 0, proc.stderr
        [row] = json.loads(proc.stdout)
        assert row["measure"] == "cases"
        assert row["rate"] == pytest.approx(rate, rel=0.05)

    def test_reference_column(self, epidemic_csv, tmp_path):
        path, _, start, n = epidemic_csv
        ref = tmp_path / "ref.csv"
        ref.write_text("state,cases,deaths\nSP,31174,2586\n", encoding="utf-8")
        proc = run_cli(*estimate_args(path, start, n, "--reference", str(ref)))
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout.strip().endswith(",31174")

    def test_output_flag_writes_file(self, epidemic_csv, tmp_path):
        path, _, start, n = epidemic_csv
        out = tmp_path / "report.csv"
        proc = run_cli(*estimate_args(path, start, n, "--output", str(out)))
        assert proc.returncode == 0
        assert proc.stdout == ""
        assert out.read_text(encoding="utf-8").startswith("state,measure,")

    def test_plots_directory(self, epidemic_csv, tmp_path):
        path, _, start, n = epidemic_csv
        plots = tmp_path / "figs"
        proc = run_cli(
            *estimate_args(path, start, n, "--plots", str(plots), "--output", str(tmp_path / "r.csv"))
        )
        assert proc.returncode == 0, proc.stderr
        assert (plots / "SP_cases.svg").exists()


class TestEventsCommand:
    def test_step_series_change_point(self, tmp_path):
        n, k = 300, 230
        totals = np.full(n, 80.0)
        totals[k - 1 :] += 60.0
        text = canonical_csv({"BA": {"cases": (totals, np.zeros(n))}}, week_axis(n))
        path = tmp_path / "step.csv"
        path.write_text(text, encoding="utf-8")
        proc = run_cli(
            "events", "--data", str(path), "--measure", "cases",
            "--t", "250", "--horizon", str(n),
        )
        assert proc.returncode == 0, proc.stderr
        lines = proc.stdout.strip().split("\n")
        assert lines[0] == "state,measure,kind,index,year,week"
        cps = [line for line in lines[1:] if ",change_point," in line]
        assert len(cps) == 1
        index = int(cps[0].split(",")[3])
        assert abs(index - k) <= 30


class TestExitCodes:
    def test_missing_data_file_is_ingestion_error(self, tmp_path):
        proc = run_cli("estimate", "--data", str(tmp_path / "nope.csv"))
        assert proc.returncode == 2
        assert "ingestion error" in proc.stderr

    def test_bad_rupture_flag_is_config_error(self, epidemic_csv):
        path, _, start, n = epidemic_csv
        proc = run_cli("estimate", "--data", str(path), "--t", "later")
        assert proc.returncode == 1
        assert "configuration error" in proc.stderr

    def test_unknown_flag_is_config_error(self, epidemic_csv):
        path, _, _, _ = epidemic_csv
        proc = run_cli("estimate", "--data", str(path), "--frobnicate")
        assert proc.returncode == 1

    def test_horizon_beyond_data_is_config_error(self, epidemic_csv):
        path, _, start, n = epidemic_csv
        proc = run_cli(*estimate_args(path, start, n + 1))
        assert proc.returncode == 1

    def test_partial_failure_exit_code(self, tmp_path):
        # flat second state cannot anchor an automatic rupture week
        n, start = 624, 618
        base = seasonal_counts(seed=62, n_weeks=n)
        inj = np.random.default_rng(63).uniform(400, 800, n - start + 1)
        totals, reported, _ = inject_novelty(base, start, inj, reported_fraction=0.4)
        series = {
            "RJ": {"cases": (totals, reported)},
            "AC": {"cases": (np.full(n, 90.0), np.zeros(n))},
        }
        path = tmp_path / "mixed.csv"
        path.write_text(canonical_csv(series, week_axis(n)), encoding="utf-8")
        proc = run_cli(
            "estimate", "--data", str(path), "--measure", "cases",
            "--t", "auto", "--horizon", str(n),
        )
        assert proc.returncode == 3
        lines = proc.stdout.strip().split("\n")
        ac_row = next(line for line in lines if line.startswith("AC,"))
        assert ",error," in ac_row
        rj_row = next(line for line in lines if line.startswith("RJ,"))
        assert rj_row.split(",")[6] == ""  # gate column empty: rate published

    def test_rejected_rows_reported_on_stderr(self, tmp_path):
        text = (
            "year,week,state,measure,total,sars_cov_2\n"
            "2020,0,SP,cases,10,0\n"
            + "\n".join(
                f"2009,{w},SP,cases,100,0" for w in range(1, 53)
            )
            + "\n"
        )
        path = tmp_path / "rej.csv"
        path.write_text(text, encoding="utf-8")
        proc = run_cli(
            "events", "--data", str(path), "--measure", "cases",
            "--t", "40", "--horizon", "52",
            "--detection-p", "10", "--window", "10",
        )
        assert proc.returncode == 0, proc.stderr
        assert "week out of range" in proc.stderr


class TestDeterminism:
    def test_byte_identical_runs(self, epidemic_csv, tmp_path):
        path, _, start, n = epidemic_csv
        outputs = []
        for fmt in ("csv", "json"):
            pair = []
            for run in (1, 2):
                out = tmp_path / f"out_{fmt}_{run}.{fmt}"
                proc = run_cli(
                    *estimate_args(path, start, n, "--format", fmt, "--seed", "7",
                                   "--output", str(out))
                )
                assert proc.returncode == 0, proc.stderr
                pair.append(out.read_bytes())
            assert pair[0] == pair[1]
            outputs.append(pair[0])
        assert outputs[0] != outputs[1]  # csv and json genuinely differ
