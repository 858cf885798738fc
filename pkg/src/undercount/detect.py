"""Rupture detectors: inertial-residual anomalies and two-phase change points.

Both detectors reduce to the same boxplot classification.  The anomaly
detector subtracts a trailing moving average (the series' inertia) from each
observation and flags residuals outside the 3-IQR fence.  The change-point
detector first scores each week by its squared deviation from a trailing
ordinary-least-squares line fitted on the ``window`` most recent weeks,
then smooths those scores with a ``terms``-week moving average and flags
smoothed scores outside the fence.  Positions with an undefined average or
score are excluded from fence computation instead of being zero-filled, so
the head of a series never produces artificial outliers.

Index convention: every reported index is 1-based into the source series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import BoundsError, DomainError
from .series import SeriesLabel, TimeSeries
from .stats import boxplot_fence

__all__ = [
    "EventSet",
    "ScoreSeries",
    "adaptive_normalization",
    "regression_scores",
    "change_finder",
    "consolidate_events",
    "collapse_runs",
]

DEFAULT_DETECTION_TERMS = 30
DEFAULT_REGRESSION_WINDOW = 30


@dataclass(frozen=True)
class EventSet:
    """Detected events for one series: anomaly and change-point indices.

    Index sets are sorted tuples of 1-based positions.  ``terms`` is the
    smoothing term count the detector ran with; ``window`` is the regression
    window, or ``None`` for detectors that fit no model.
    """

    label: SeriesLabel
    anomalies: tuple[int, ...]
    change_points: tuple[int, ...]
    terms: int
    window: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "anomalies", tuple(sorted(self.anomalies)))
        object.__setattr__(self, "change_points", tuple(sorted(self.change_points)))
        for indices in (self.anomalies, self.change_points):
            if indices and indices[0] < 1:
                raise DomainError(f"event indices are 1-based, got {indices[0]}")


@dataclass(frozen=True)
class ScoreSeries:
    """Non-negative deviation scores aligned to source positions.

    ``values[j]`` belongs to series index ``start + j`` (1-based).
    """

    start: int
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64)
        if np.any(arr < 0):
            raise DomainError("scores are squared deviations and cannot be negative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def indices(self) -> np.ndarray:
        """1-based series indices the scores refer to."""
        return np.arange(self.start, self.start + self.values.size)


def _trailing_means(values: np.ndarray, terms: int) -> np.ndarray:
    """Mean over each trailing window of ``terms`` values; entry ``j`` ends
    at position ``terms + j`` (1-based)."""
    return sliding_window_view(values, terms).mean(axis=1)


def adaptive_normalization(y: TimeSeries, terms: int = DEFAULT_DETECTION_TERMS) -> EventSet:
    """Anomalies as boxplot outliers of the inertia residual.

    Stage one computes a trailing simple moving average of ``terms`` weeks;
    stage two takes the residual (observation minus average) where defined;
    stage three flags residuals outside the 3-IQR fence of the residual
    sample.  Larger ``terms`` means more inertia and slower adaptation.
    """
    if terms < 1:
        raise DomainError(f"terms must be >= 1, got {terms}")
    if len(y) < terms:
        raise BoundsError(
            f"series of length {len(y)} too short for a {terms}-week average"
        )
    residual = y.values[terms - 1 :] - _trailing_means(y.values, terms)
    fence = boxplot_fence(residual)
    flagged = np.nonzero(fence.outside(residual))[0] + terms
    return EventSet(
        label=y.label,
        anomalies=tuple(int(i) for i in flagged),
        change_points=(),
        terms=terms,
        window=None,
    )


def regression_scores(y: TimeSeries, window: int = DEFAULT_REGRESSION_WINDOW) -> ScoreSeries:
    """Squared deviation of each week from its trailing OLS fit.

    For every position ``i >= window`` a least-squares line of value against
    position is fitted over the ``window`` observations ending at ``i`` and
    evaluated at ``i``; the score is the squared difference between that
    prediction and ``y_i``.  A series affine in its index scores exactly
    zero everywhere.
    """
    if window < 2:
        raise DomainError(f"regression window must be >= 2, got {window}")
    if len(y) < window:
        raise BoundsError(
            f"series of length {len(y)} too short for a {window}-week regression"
        )
    windows = sliding_window_view(y.values, window)
    x = np.arange(window, dtype=np.float64)
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    slope = windows @ xc / sxx
    predicted_end = windows.mean(axis=1) + slope * (window - 1 - x.mean())
    scores = (predicted_end - windows[:, -1]) ** 2
    return ScoreSeries(start=window, values=scores)


def change_finder(
    y: TimeSeries,
    terms: int = DEFAULT_DETECTION_TERMS,
    window: int = DEFAULT_REGRESSION_WINDOW,
) -> EventSet:
    """Two-phase change-point detection over regression deviation scores.

    Phase one flags boxplot outliers of the raw scores as anomalies.  Phase
    two smooths the scores with a ``terms``-week moving average and flags
    outliers of the smoothed scores as change points.  Consecutive flagged
    indices typically form a run around a real change; use
    :func:`collapse_runs` when a single representative index is wanted.
    """
    if terms < 1:
        raise DomainError(f"terms must be >= 1, got {terms}")
    if len(y) < window + terms:
        raise BoundsError(
            f"series of length {len(y)} too short: need at least "
            f"window + terms = {window + terms} observations"
        )
    scores = regression_scores(y, window)
    fence = boxplot_fence(scores.values)
    anomalies = scores.indices()[fence.outside(scores.values)]

    smoothed = ScoreSeries(
        start=scores.start + terms - 1,
        values=_trailing_means(scores.values, terms),
    )
    smooth_fence = boxplot_fence(smoothed.values)
    change_points = smoothed.indices()[smooth_fence.outside(smoothed.values)]
    return EventSet(
        label=y.label,
        anomalies=tuple(int(i) for i in anomalies),
        change_points=tuple(int(i) for i in change_points),
        terms=terms,
        window=window,
    )


def consolidate_events(anomalies: EventSet, change_points: EventSet) -> EventSet:
    """Merge detector outputs: anomaly indices from the first argument,
    change-point indices from the second, kinds kept separate.

    Both event sets must describe the same series.
    """
    if anomalies.label != change_points.label:
        raise DomainError(
            f"cannot consolidate events from different series: "
            f"{anomalies.label} vs {change_points.label}"
        )
    return EventSet(
        label=anomalies.label,
        anomalies=anomalies.anomalies,
        change_points=change_points.change_points,
        terms=change_points.terms,
        window=change_points.window,
    )


def collapse_runs(indices: tuple[int, ...]) -> tuple[int, ...]:
    """First index of each run of consecutive indices.

    ``(3, 4, 5, 9, 10, 12)`` collapses to ``(3, 9, 12)``.
    """
    if not indices:
        return ()
    ordered = sorted(indices)
    firsts = [ordered[0]]
    for prev, cur in zip(ordered, ordered[1:]):
        if cur != prev + 1:
            firsts.append(cur)
    return tuple(firsts)
