"""Rupture detection and under-reporting estimation for weekly surveillance
time series.

The package models each weekly count series with a seasonal-inertia
baseline, flags anomalies and change points with boxplot-fenced residual
scores, and turns the post-rupture excess over the baseline (the novelty)
into under-reporting rates guarded by Wilcoxon significance gates.
"""

from .errors import BoundsError, DomainError, IngestionError, UndercountError
from .series import (
    AverageSpec,
    SeriesLabel,
    Subsequence,
    TimeSeries,
    exponential_weights,
    moving_average,
    seasonal_subsequence,
    subsequence,
)
from .stats import (
    BoxplotFence,
    MeanCI,
    TestResult,
    boxplot_fence,
    boxplot_outliers,
    bootstrap_mean_ci,
    quartiles,
    wilcoxon_signed_rank,
)
from .detect import (
    EventSet,
    ScoreSeries,
    adaptive_normalization,
    change_finder,
    collapse_runs,
    consolidate_events,
    regression_scores,
)
from .novelty import (
    GateResult,
    InertialBaseline,
    NoiseSummary,
    NoveltyResult,
    RateWithMargin,
    UnderReport,
    analyze,
    build_baseline,
    default_noise_window,
    novelty_series,
    pre_novelty_noise,
    rate_with_margin,
    significance_gates,
    under_report,
)
from .ingest import (
    BR_STATES,
    LoadResult,
    RawRecord,
    ReferenceTotals,
    StateDataset,
    StateSeries,
    filter_and_split,
    load_raw,
    load_reference,
    read_mapping,
    write_report,
)
from .report import (
    EventRow,
    ReportRow,
    RunConfig,
    derive_seed,
    detect_events,
    estimate,
    render_events,
    render_report,
    write_plots,
)

__version__ = "0.1.0"
