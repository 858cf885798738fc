"""Weekly count series, subsequences, and the four moving-average estimators.

A series holds observations ``y_1 .. y_n`` where position 1 is the oldest
week and position ``n`` the most recent.  All public operations take 1-based
indices; internally values live in a flat read-only float64 array.

The subsequence ending at ``i`` with ``terms`` entries is
``<y_{i-terms+1}, ..., y_i>``; its seasonal counterpart with period ``s``
skips backwards a whole season at a time: ``<y_{i-(terms-1)s}, ..., y_{i-s},
y_i>``.  Averages come in two kinds:

* ``simple``:       plain mean of the subsequence.
* ``exponential``:  ``sum(a_k * t_k) / sum(a_k)`` with weights
  ``a_k = (1 - 2/(terms+1))**(terms-k)``, so the newest term carries weight
  1 and older terms decay geometrically.

Applying either kind to a seasonal subsequence yields the seasonal simple /
seasonal exponential moving average used by the inertial baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, DomainError

__all__ = [
    "MEASURES",
    "SeriesLabel",
    "TimeSeries",
    "Subsequence",
    "AverageSpec",
    "subsequence",
    "seasonal_subsequence",
    "exponential_weights",
    "moving_average",
]

MEASURES = ("cases", "deaths")

AVERAGE_KINDS = ("simple", "exponential")


@dataclass(frozen=True)
class SeriesLabel:
    """Identifies one analysed series: a region code plus a measure."""

    region: str
    measure: str

    def __post_init__(self) -> None:
        if self.measure not in MEASURES:
            raise DomainError(
                f"measure must be one of {MEASURES}, got {self.measure!r}"
            )


@dataclass(frozen=True)
class TimeSeries:
    """Ordered weekly observations for one (region, measure) pair.

    Values must be finite and non-negative; weeks are strictly consecutive
    positions (gap handling belongs to ingestion, not here).
    """

    label: SeriesLabel
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise DomainError(f"values must be one-dimensional, got shape {arr.shape}")
        if arr.size == 0:
            raise DomainError("a series needs at least one observation")
        if not np.all(np.isfinite(arr)):
            raise DomainError("series values must be finite")
        if np.any(arr < 0):
            raise DomainError("series values must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)

    def at(self, i: int) -> float:
        """Observation at 1-based position ``i``."""
        if not 1 <= i <= len(self):
            raise BoundsError(f"index i={i} outside 1..{len(self)}")
        return float(self.values[i - 1])

    def truncated(self, horizon: int) -> "TimeSeries":
        """The same series cut to its first ``horizon`` weeks."""
        if not 1 <= horizon <= len(self):
            raise BoundsError(f"horizon={horizon} outside 1..{len(self)}")
        return TimeSeries(self.label, self.values[:horizon])


@dataclass(frozen=True)
class Subsequence:
    """A window of ``terms`` values ending at ``origin``, spaced ``lag`` apart.

    ``lag == 1`` is the continuous case; larger lags step back one season at
    a time.
    """

    values: np.ndarray
    origin: int
    lag: int

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class AverageSpec:
    """How to average: ``terms`` entries, seasonal ``period``, and the kind.

    ``period == 1`` selects the continuous subsequence; anything larger uses
    seasonally lagged predecessors.
    """

    terms: int
    period: int = 1
    kind: str = "simple"

    def __post_init__(self) -> None:
        if self.terms < 1:
            raise DomainError(f"terms must be >= 1, got {self.terms}")
        if self.period < 1:
            raise DomainError(f"period must be >= 1, got {self.period}")
        if self.kind not in AVERAGE_KINDS:
            raise DomainError(
                f"kind must be one of {AVERAGE_KINDS}, got {self.kind!r}"
            )


def subsequence(y: TimeSeries, i: int, terms: int) -> Subsequence:
    """The ``terms`` consecutive observations ending at position ``i``.

    Requires ``terms <= i <= len(y)``; the last element is ``y_i``.
    """
    if terms < 1:
        raise DomainError(f"terms must be >= 1, got {terms}")
    if not 1 <= i <= len(y):
        raise BoundsError(f"index i={i} outside 1..{len(y)}")
    if terms > i:
        raise BoundsError(f"a window of {terms} terms needs i >= {terms}, got i={i}")
    return Subsequence(y.values[i - terms : i], origin=i, lag=1)


def seasonal_subsequence(y: TimeSeries, i: int, terms: int, period: int) -> Subsequence:
    """``terms`` observations ending at ``i``, each one ``period`` weeks apart.

    Requires ``i - (terms-1)*period >= 1`` and ``i <= len(y)``; with
    ``period == 1`` this coincides with :func:`subsequence`.
    """
    if terms < 1:
        raise DomainError(f"terms must be >= 1, got {terms}")
    if period < 1:
        raise DomainError(f"period must be >= 1, got {period}")
    if not 1 <= i <= len(y):
        raise BoundsError(f"index i={i} outside 1..{len(y)}")
    first = i - (terms - 1) * period
    if first < 1:
        raise BoundsError(
            f"seasonal window needs i - (terms-1)*period >= 1, "
            f"got {i} - {(terms - 1) * period} = {first}"
        )
    idx = np.arange(first - 1, i, period)
    return Subsequence(y.values[idx], origin=i, lag=period)


def exponential_weights(terms: int) -> np.ndarray:
    """Weights ``(1 - 2/(terms+1))**(terms-k)`` for ``k = 1..terms``.

    The last (most recent) weight is exactly 1; with ``terms == 1`` the
    single weight is 1 as well.
    """
    if terms < 1:
        raise DomainError(f"terms must be >= 1, got {terms}")
    k = np.arange(1, terms + 1, dtype=np.float64)
    return (1.0 - 2.0 / (terms + 1.0)) ** (terms - k)


def moving_average(y: TimeSeries, i: int, spec: AverageSpec) -> float:
    """Moving average of ``y`` at position ``i`` under ``spec``.

    Simple kind returns the mean of the (possibly seasonal) subsequence;
    exponential kind returns the weighted mean under
    :func:`exponential_weights`.  Both kinds lie between the window's min
    and max, and reduce to ``y_i`` when ``spec.terms == 1``.
    """
    if spec.period == 1:
        sub = subsequence(y, i, spec.terms)
    else:
        sub = seasonal_subsequence(y, i, spec.terms, spec.period)
    if spec.kind == "simple":
        return float(sub.values.mean())
    w = exponential_weights(spec.terms)
    return float(np.dot(w, sub.values) / w.sum())
