"""Statistical primitives shared by detection and estimation.

Quartiles use linear interpolation between closest ranks at cumulative
probabilities 0.25 and 0.75 (the common default in mainstream statistical
environments).  The outlier fence is the boxplot rule with a configurable
multiplier, defaulting to 3 * IQR rather than the textbook 1.5.  The
bootstrap is the two-sided percentile method for a sample mean, driven by a
named seeded generator (PCG64) so identical inputs give bit-identical
intervals.  The Wilcoxon signed-rank test is exact for up to 20 non-zero
differences and falls back to a tie-corrected normal approximation above
that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

from .errors import DomainError

__all__ = [
    "EXACT_WILCOXON_LIMIT",
    "BoxplotFence",
    "MeanCI",
    "TestResult",
    "quartiles",
    "boxplot_fence",
    "boxplot_outliers",
    "bootstrap_mean_ci",
    "wilcoxon_signed_rank",
]

# Largest number of non-zero differences for which the signed-rank null
# distribution is enumerated exactly.
EXACT_WILCOXON_LIMIT = 20

ALTERNATIVES = ("two-sided", "greater", "less")


@dataclass(frozen=True)
class BoxplotFence:
    """Quartiles plus the derived outlier fence ``[q1 - k*iqr, q3 + k*iqr]``."""

    q1: float
    q3: float
    iqr: float
    k: float

    def __post_init__(self) -> None:
        if self.q1 > self.q3:
            raise DomainError(f"q1={self.q1} must not exceed q3={self.q3}")
        if self.iqr < 0:
            raise DomainError(f"iqr must be non-negative, got {self.iqr}")
        if self.k < 0:
            raise DomainError(f"fence multiplier must be non-negative, got {self.k}")

    @property
    def lower(self) -> float:
        return self.q1 - self.k * self.iqr

    @property
    def upper(self) -> float:
        return self.q3 + self.k * self.iqr

    def outside(self, xs: np.ndarray) -> np.ndarray:
        """Boolean mask of values falling outside the fence."""
        xs = np.asarray(xs, dtype=np.float64)
        return (xs < self.lower) | (xs > self.upper)


@dataclass(frozen=True)
class MeanCI:
    """A sample mean with its percentile-bootstrap confidence interval."""

    mean: float
    lo: float
    hi: float
    reps: int
    level: float
    seed: int

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise DomainError(f"lo={self.lo} must not exceed hi={self.hi}")
        if self.reps < 1:
            raise DomainError(f"reps must be >= 1, got {self.reps}")
        if not 0.0 < self.level < 1.0:
            raise DomainError(f"level must be in (0, 1), got {self.level}")


@dataclass(frozen=True)
class TestResult:
    """Outcome of a hypothesis test; ``significant`` iff ``p_value < alpha``."""

    __test__ = False  # keep pytest from collecting this as a test class

    statistic: float
    p_value: float
    alpha: float
    significant: bool

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise DomainError(f"p_value must lie in [0, 1], got {self.p_value}")
        if self.significant != (self.p_value < self.alpha):
            raise DomainError("significant flag inconsistent with p_value < alpha")


def quartiles(xs: np.ndarray) -> tuple[float, float]:
    """First and third quartiles of a non-empty sample.

    Linear interpolation between order statistics; a single-element sample
    returns that element twice.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        raise DomainError("quartiles need a non-empty sample")
    if not np.all(np.isfinite(xs)):
        raise DomainError("sample values must be finite")
    q1, q3 = np.percentile(xs, [25.0, 75.0])
    return float(q1), float(q3)


def boxplot_fence(xs: np.ndarray, k: float = 3.0) -> BoxplotFence:
    """The boxplot fence of a sample with multiplier ``k``."""
    q1, q3 = quartiles(xs)
    return BoxplotFence(q1=q1, q3=q3, iqr=q3 - q1, k=k)


def boxplot_outliers(xs: np.ndarray, k: float = 3.0) -> np.ndarray:
    """0-based positions of sample values outside the ``k``-IQR fence.

    A constant sample has a degenerate fence containing every value, so it
    never flags anything.
    """
    xs = np.asarray(xs, dtype=np.float64)
    fence = boxplot_fence(xs, k)
    return np.nonzero(fence.outside(xs))[0]


def bootstrap_mean_ci(
    xs: np.ndarray,
    reps: int = 1000,
    level: float = 0.95,
    *,
    seed: int,
) -> MeanCI:
    """Percentile-bootstrap confidence interval for the mean of ``xs``.

    Draws ``reps`` resamples of size ``len(xs)`` with replacement and takes
    the ``(1-level)/2`` and ``1-(1-level)/2`` percentiles of the replicate
    means.  Deterministic for a fixed ``seed``.

    Parameters
    ----------
    xs : array_like
        Sample of at least two values.
    reps : int
        Number of bootstrap resamples.
    level : float
        Two-sided confidence level in (0, 1).
    seed : int
        Seed for the resampling generator; required so results are
        reproducible by construction.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size < 2:
        raise DomainError(f"bootstrap needs at least 2 observations, got {xs.size}")
    if not np.all(np.isfinite(xs)):
        raise DomainError("sample values must be finite")
    if reps < 1:
        raise DomainError(f"reps must be >= 1, got {reps}")
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must be in (0, 1), got {level}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, xs.size, size=(reps, xs.size))
    means = np.sort(xs[idx].mean(axis=1))
    tail = (1.0 - level) / 2.0 * 100.0
    lo, hi = np.percentile(means, [tail, 100.0 - tail])
    return MeanCI(
        mean=float(xs.mean()),
        lo=float(lo),
        hi=float(hi),
        reps=reps,
        level=level,
        seed=int(seed),
    )


def _signed_rank_setup(d: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Average-tie ranks of |d|, the positive rank sum, and the total."""
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    return ranks, w_plus, float(ranks.sum())


def _exact_rank_sum_counts(ranks2: np.ndarray) -> np.ndarray:
    """Counts of each doubled positive-rank sum over all sign assignments.

    ``ranks2`` holds the tie-averaged ranks doubled so they are integers;
    entry ``w`` of the result is the number of the ``2**m`` sign patterns
    whose positive ranks sum to ``w/2``.
    """
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in ranks2:
        nxt = counts.copy()
        nxt[r:] += counts[: counts.size - r]
        counts = nxt
    return counts


def _wilcoxon_exact_p(d: np.ndarray, alternative: str) -> float:
    ranks, w_plus, total = _signed_rank_setup(d)
    ranks2 = np.rint(2.0 * ranks).astype(np.int64)
    total2 = int(ranks2.sum())
    w_plus2 = int(np.rint(2.0 * w_plus))
    counts = _exact_rank_sum_counts(ranks2)
    support = np.arange(total2 + 1)
    n_patterns = 2.0 ** d.size
    if alternative == "two-sided":
        w_min2 = min(w_plus2, total2 - w_plus2)
        hit = np.minimum(support, total2 - support) <= w_min2
    elif alternative == "greater":
        hit = support >= w_plus2
    else:
        hit = support <= w_plus2
    return float(counts[hit].sum() / n_patterns)


def _wilcoxon_approx_p(d: np.ndarray, alternative: str) -> float:
    ranks, w_plus, total = _signed_rank_setup(d)
    m = d.size
    mu = m * (m + 1) / 4.0
    _, tie_sizes = np.unique(ranks, return_counts=True)
    var = m * (m + 1) * (2 * m + 1) / 24.0 - float(
        (tie_sizes.astype(np.float64) ** 3 - tie_sizes).sum()
    ) / 48.0
    if var <= 0.0:
        return 1.0
    sd = float(np.sqrt(var))
    # 0.5 is a continuity correction; the statistic moves in half-rank steps.
    if alternative == "two-sided":
        w = min(w_plus, total - w_plus)
        return float(min(1.0, 2.0 * norm.cdf((w - mu + 0.5) / sd)))
    if alternative == "greater":
        return float(norm.sf((w_plus - mu - 0.5) / sd))
    return float(norm.cdf((w_plus - mu + 0.5) / sd))


def wilcoxon_signed_rank(
    a: np.ndarray,
    b: np.ndarray | None = None,
    alpha: float = 0.05,
    alternative: str = "two-sided",
) -> TestResult:
    """Wilcoxon signed-rank test on paired samples (or given differences).

    Differences ``a - b`` (or ``a`` itself when ``b`` is omitted) are ranked
    by absolute value with average ranks on ties after dropping zeros.  The
    reported statistic is ``min(W+, W-)``.  With at most
    ``EXACT_WILCOXON_LIMIT`` non-zero differences the p-value enumerates the
    full sign-assignment distribution exactly; beyond that, a tie-corrected
    normal approximation with continuity correction is used.  All-zero
    differences yield ``p = 1`` rather than an error.

    ``alternative`` selects the tested direction: ``"two-sided"`` (default),
    ``"greater"`` (location of ``a`` above ``b``), or ``"less"``.
    """
    if alternative not in ALTERNATIVES:
        raise DomainError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    a = np.asarray(a, dtype=np.float64)
    if b is not None:
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise DomainError(f"paired samples differ in shape: {a.shape} vs {b.shape}")
        d = a - b
    else:
        d = a
    if d.ndim != 1:
        raise DomainError(f"samples must be one-dimensional, got shape {d.shape}")
    if d.size == 0:
        raise DomainError("paired samples must be non-empty")
    if not np.all(np.isfinite(d)):
        raise DomainError("paired differences must be finite")

    d = d[d != 0.0]
    if d.size == 0:
        return TestResult(statistic=0.0, p_value=1.0, alpha=alpha, significant=False)

    _, w_plus, total = _signed_rank_setup(d)
    statistic = float(min(w_plus, total - w_plus))
    if d.size <= EXACT_WILCOXON_LIMIT:
        p = _wilcoxon_exact_p(d, alternative)
    else:
        p = _wilcoxon_approx_p(d, alternative)
    p = float(min(1.0, max(0.0, p)))
    return TestResult(statistic=statistic, p_value=p, alpha=alpha, significant=p < alpha)
