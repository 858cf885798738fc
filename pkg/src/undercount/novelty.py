"""Seasonal-inertia baseline, novelty extraction, and under-reporting rates.

The baseline for week ``i`` is the seasonal exponential moving average of
the ``terms`` observations at ``i - terms*period, ..., i - period``: what
the series would look like this week if the seasonal pattern of previous
cycles had simply carried on.  Residuals of that baseline over a pre-rupture
window give the intrinsic noise level ``e`` (mean ``e_bar`` with a bootstrap
confidence interval).  After a rupture at week ``start``, the novelty of
week ``i`` is

    novelty_i = y_i - baseline_i - e_bar

so observation, baseline, novelty, and mean noise always sum back to the
observation exactly.  Comparing novelty against officially attributed counts
``reported_i`` yields the weekly shortfall ``novelty_i - reported_i``, its
running total, and the under-reporting rate

    rate = (sum(novelty) - sum(reported)) / sum(reported)

over the rupture window.  Two Wilcoxon gates guard the rate: one checks the
novelty is distinguishable from noise, the other that it differs from the
reported counts at all.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, DomainError
from .series import AverageSpec, SeriesLabel, TimeSeries, moving_average
from .stats import MeanCI, TestResult, bootstrap_mean_ci, wilcoxon_signed_rank

__all__ = [
    "InertialBaseline",
    "NoiseSummary",
    "UnderReport",
    "RateWithMargin",
    "GateResult",
    "NoveltyResult",
    "build_baseline",
    "default_noise_window",
    "pre_novelty_noise",
    "novelty_series",
    "under_report",
    "rate_with_margin",
    "significance_gates",
    "analyze",
]

NOISE_GATES = ("mean", "paired-tail")

# Withheld-rate codes used in reports: the ring marks novelty that is
# indistinguishable from noise, the bullet novelty indistinguishable from
# the reported counts.
CODE_NO_NOVELTY = "°"
CODE_NO_UNDERREPORT = "•"
CODE_NO_REPORTED = "no-reported"


@dataclass(frozen=True)
class InertialBaseline:
    """Seasonal-inertia predictions for consecutive weeks ``start..stop``."""

    start: int
    stop: int
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64)
        if arr.size != self.stop - self.start + 1:
            raise DomainError(
                f"baseline over {self.start}..{self.stop} needs "
                f"{self.stop - self.start + 1} values, got {arr.size}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def at(self, i: int) -> float:
        if not self.start <= i <= self.stop:
            raise BoundsError(f"baseline not defined at {i}; covers {self.start}..{self.stop}")
        return float(self.values[i - self.start])

    def slice(self, lo: int, hi: int) -> np.ndarray:
        """Values for weeks ``lo..hi`` (inclusive)."""
        if not (self.start <= lo <= hi <= self.stop):
            raise BoundsError(
                f"requested {lo}..{hi} outside baseline coverage {self.start}..{self.stop}"
            )
        return self.values[lo - self.start : hi - self.start + 1]


@dataclass(frozen=True)
class NoiseSummary:
    """Baseline residuals over the pre-rupture window and their mean's CI."""

    residuals: np.ndarray
    mean: float
    ci: MeanCI
    window: tuple[int, int]

    def __post_init__(self) -> None:
        arr = np.array(self.residuals, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "residuals", arr)
        # Percentile bootstrap of a mean should bracket the sample mean; a
        # pathological resample that does not is tolerated but flagged.
        if not self.ci.lo - 1e-9 <= self.mean <= self.ci.hi + 1e-9:
            warnings.warn(
                f"bootstrap interval [{self.ci.lo}, {self.ci.hi}] does not "
                f"bracket the sample mean {self.mean}",
                stacklevel=2,
            )


@dataclass(frozen=True)
class UnderReport:
    """Weekly and cumulative shortfall of reported counts against novelty.

    ``rates[j]`` is the cumulative shortfall divided by the cumulative
    reported count up to that week (NaN while nothing has been reported);
    ``rate`` is the final week's value, or ``None`` when the whole window
    has no reported observations.
    """

    start: int
    weekly: np.ndarray
    cumulative: np.ndarray
    rates: np.ndarray
    rate: float | None


@dataclass(frozen=True)
class RateWithMargin:
    """An under-reporting rate with the spread induced by the noise CI."""

    rate: float
    margin: float


@dataclass(frozen=True)
class GateResult:
    """The two Wilcoxon significance gates guarding a reported rate."""

    novelty_test: TestResult
    underreport_test: TestResult

    @property
    def novelty_significant(self) -> bool:
        return self.novelty_test.significant

    @property
    def underreport_significant(self) -> bool:
        return self.underreport_test.significant


@dataclass(frozen=True)
class NoveltyResult:
    """Full per-series estimation outcome over the rupture window."""

    label: SeriesLabel
    start: int
    observed: np.ndarray
    baseline: np.ndarray
    novelty: np.ndarray
    reported: np.ndarray
    under: UnderReport
    noise: NoiseSummary
    gates: GateResult
    rate: float | None
    margin: float | None

    @property
    def cum_novelty(self) -> float:
        return float(self.novelty.sum())

    @property
    def cum_reported(self) -> float:
        return float(self.reported.sum())

    @property
    def withheld_code(self) -> str:
        """Why the rate is withheld from reports; empty when publishable."""
        if self.reported.sum() <= 0:
            return CODE_NO_REPORTED
        if not self.gates.novelty_significant:
            return CODE_NO_NOVELTY
        if not self.gates.underreport_significant:
            return CODE_NO_UNDERREPORT
        return ""


def build_baseline(
    y: TimeSeries, terms: int, period: int, start: int, stop: int
) -> InertialBaseline:
    """Seasonal exponential moving-average baseline for weeks ``start..stop``.

    The prediction for week ``i`` averages the ``terms`` seasonally lagged
    observations ending at ``i - period``, weighting recent cycles more.
    Every week in the range needs ``i - terms*period >= 1``; the first
    violating index is named in the error.
    """
    if start > stop:
        raise DomainError(f"empty baseline range {start}..{stop}")
    if stop > len(y):
        raise BoundsError(f"range end {stop} beyond series length {len(y)}")
    first_valid = terms * period + 1
    if start < first_valid:
        raise BoundsError(
            f"baseline undefined at week {start}: needs {terms} seasonal "
            f"predecessors, so the first usable week is {first_valid}"
        )
    spec = AverageSpec(terms=terms, period=period, kind="exponential")
    values = np.array(
        [moving_average(y, i - period, spec) for i in range(start, stop + 1)]
    )
    return InertialBaseline(start=start, stop=stop, values=values)


def default_noise_window(start: int, terms: int, period: int) -> tuple[int, int]:
    """Pre-rupture residual window: the last ``terms`` full seasonal cycles
    before ``start``, clipped to where the baseline exists."""
    lo = max(terms * period + 1, start - terms * period)
    return lo, start - 1


def pre_novelty_noise(
    y: TimeSeries,
    baseline: InertialBaseline,
    reps: int = 1000,
    level: float = 0.95,
    *,
    seed: int,
) -> NoiseSummary:
    """Baseline residuals over the pre-rupture window with a bootstrap CI.

    ``baseline`` must cover exactly the window to summarise; residuals are
    observation minus prediction, kept signed.
    """
    lo, hi = baseline.start, baseline.stop
    if hi > len(y):
        raise BoundsError(f"baseline window {lo}..{hi} beyond series length {len(y)}")
    residuals = y.values[lo - 1 : hi] - baseline.values
    if residuals.size == 0:
        raise DomainError("pre-rupture window is empty")
    ci = bootstrap_mean_ci(residuals, reps=reps, level=level, seed=seed)
    return NoiseSummary(
        residuals=residuals, mean=float(residuals.mean()), ci=ci, window=(lo, hi)
    )


def novelty_series(
    y: TimeSeries, baseline: InertialBaseline, noise: NoiseSummary, start: int
) -> np.ndarray:
    """Weekly novelty ``y_i - baseline_i - mean_noise`` for ``start..len(y)``.

    Negative values are preserved: clamping would bias the cumulative sums.
    """
    n = len(y)
    if not baseline.start <= start or baseline.stop < n:
        raise BoundsError(
            f"baseline covers {baseline.start}..{baseline.stop}, "
            f"but the novelty window needs {start}..{n}"
        )
    predicted = baseline.slice(start, n)
    return y.values[start - 1 :] - predicted - noise.mean


def under_report(novelty: np.ndarray, reported: np.ndarray, start: int) -> UnderReport:
    """Weekly shortfall, its running total, and the under-reporting rate.

    ``novelty`` and ``reported`` must be aligned on the same weeks starting
    at ``start``.  The rate divides cumulative shortfall by cumulative
    reported count; with nothing reported it is undefined (``None``), never
    infinite.
    """
    novelty = np.asarray(novelty, dtype=np.float64)
    reported = np.asarray(reported, dtype=np.float64)
    if novelty.shape != reported.shape:
        raise DomainError(
            f"novelty and reported series differ in shape: "
            f"{novelty.shape} vs {reported.shape}"
        )
    if novelty.size == 0:
        raise DomainError("rupture window is empty")
    weekly = novelty - reported
    cumulative = np.cumsum(weekly)
    reported_cum = np.cumsum(reported)
    with np.errstate(divide="ignore", invalid="ignore"):
        rates = np.where(reported_cum > 0, cumulative / reported_cum, np.nan)
    rate = float(rates[-1]) if reported_cum[-1] > 0 else None
    return UnderReport(
        start=start, weekly=weekly, cumulative=cumulative, rates=rates, rate=rate
    )


def rate_with_margin(
    y: TimeSeries,
    baseline: InertialBaseline,
    noise: NoiseSummary,
    reported: np.ndarray,
    start: int,
) -> RateWithMargin | None:
    """Final under-reporting rate with its noise-CI margin.

    The rate is evaluated three times, with the expected noise set to the
    residual mean and to each end of its confidence interval; the margin is
    the largest absolute deviation of the endpoint rates from the central
    one.  Returns ``None`` when the window has no reported observations.
    """
    reported = np.asarray(reported, dtype=np.float64)
    central = None
    deviations = []
    for eps in (noise.mean, noise.ci.lo, noise.ci.hi):
        shifted = y.values[start - 1 :] - baseline.slice(start, len(y)) - eps
        result = under_report(shifted, reported, start)
        if result.rate is None:
            return None
        if central is None:
            central = result.rate
        else:
            deviations.append(abs(result.rate - central))
    assert central is not None
    return RateWithMargin(rate=central, margin=max(deviations))


def significance_gates(
    novelty: np.ndarray,
    residuals: np.ndarray,
    reported: np.ndarray,
    alpha: float = 0.05,
    noise_gate: str = "mean",
) -> GateResult:
    """The two rate-guarding Wilcoxon tests.

    The noise gate checks whether weekly novelty differs from the expected
    noise level: in the default ``"mean"`` form a one-sample signed-rank
    test of ``novelty - mean(residuals)`` against zero; in the
    ``"paired-tail"`` form novelty is paired against the most recent
    residuals instead.  The under-report gate pairs novelty against the
    reported counts.  Degenerate inputs give ``p = 1`` rather than errors.
    """
    if noise_gate not in NOISE_GATES:
        raise DomainError(f"noise_gate must be one of {NOISE_GATES}, got {noise_gate!r}")
    novelty = np.asarray(novelty, dtype=np.float64)
    residuals = np.asarray(residuals, dtype=np.float64)
    reported = np.asarray(reported, dtype=np.float64)
    if novelty.size == 0:
        raise DomainError("novelty window is empty")
    if noise_gate == "mean":
        novelty_test = wilcoxon_signed_rank(novelty - residuals.mean(), alpha=alpha)
    else:
        if residuals.size < novelty.size:
            raise DomainError(
                f"paired-tail gate needs at least {novelty.size} residuals, "
                f"got {residuals.size}"
            )
        novelty_test = wilcoxon_signed_rank(
            novelty, residuals[-novelty.size :], alpha=alpha
        )
    underreport_test = wilcoxon_signed_rank(novelty, reported, alpha=alpha)
    return GateResult(novelty_test=novelty_test, underreport_test=underreport_test)


def analyze(
    y: TimeSeries,
    reported: TimeSeries,
    *,
    terms: int = 4,
    period: int = 52,
    start: int,
    reps: int = 1000,
    level: float = 0.95,
    alpha: float = 0.05,
    seed: int,
    noise_window: tuple[int, int] | None = None,
    noise_gate: str = "mean",
) -> NoveltyResult:
    """Run the full estimation for one series: baseline, noise, novelty,
    shortfall, gates, and the rate with margin.

    ``reported`` carries the officially attributed counts aligned week by
    week with ``y``; the rupture window is ``start..len(y)``.
    """
    n = len(y)
    if len(reported) != n:
        raise DomainError(
            f"observed and reported series differ in length: {n} vs {len(reported)}"
        )
    if y.label != reported.label:
        raise DomainError(
            f"observed and reported series must share a label: "
            f"{y.label} vs {reported.label}"
        )
    if not 1 <= start <= n:
        raise BoundsError(f"rupture week {start} outside 1..{n}")

    if noise_window is None:
        noise_window = default_noise_window(start, terms, period)
    lo, hi = noise_window
    if hi >= start:
        raise DomainError(
            f"noise window {lo}..{hi} must end before the rupture week {start}"
        )

    pre_baseline = build_baseline(y, terms, period, lo, hi)
    noise = pre_novelty_noise(y, pre_baseline, reps=reps, level=level, seed=seed)
    baseline = build_baseline(y, terms, period, start, n)
    novelty = novelty_series(y, baseline, noise, start)
    observed = y.values[start - 1 :]
    cov = reported.values[start - 1 :]
    under = under_report(novelty, cov, start)
    gates = significance_gates(novelty, noise.residuals, cov, alpha, noise_gate)
    bounded = rate_with_margin(y, baseline, noise, cov, start)
    return NoveltyResult(
        label=y.label,
        start=start,
        observed=observed,
        baseline=baseline.values,
        novelty=novelty,
        reported=cov,
        under=under,
        noise=noise,
        gates=gates,
        rate=bounded.rate if bounded else None,
        margin=bounded.margin if bounded else None,
    )
