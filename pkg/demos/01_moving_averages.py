"""
Subsequences and the four moving averages
=========================================

A weekly series supports two window shapes (consecutive weeks, or the same
week across past seasons) and two averaging kinds (plain mean, or an
exponentially weighted mean that trusts recent seasons more).  This script
walks through all four on a toy series.
"""

import numpy as np

from undercount import (
    AverageSpec,
    SeriesLabel,
    TimeSeries,
    exponential_weights,
    moving_average,
    seasonal_subsequence,
    subsequence,
)

# Three "years" of four "weeks" each, trending upward year over year.
y = TimeSeries(SeriesLabel("SP", "cases"), [10, 12, 11, 13,
                                            20, 22, 21, 23,
                                            30, 32, 31, 33])
n = len(y)
print(f"series ({n} weeks):", y.values.astype(int).tolist())

# The last four consecutive weeks, and week 12 seen across the three years.
print("\nlast 4 weeks:           ", subsequence(y, i=12, terms=4).values.tolist())
print("week 12 across 3 seasons:", seasonal_subsequence(y, i=12, terms=3, period=4).values.tolist())

# The exponential weights decay geometrically away from the newest term.
for terms in (2, 3, 4):
    print(f"\nexponential weights, {terms} terms:", np.round(exponential_weights(terms), 4).tolist())

# All four averages at the most recent week.
for period, shape in ((1, "consecutive"), (4, "seasonal")):
    for kind in ("simple", "exponential"):
        spec = AverageSpec(terms=3, period=period, kind=kind)
        value = moving_average(y, n, spec)
        print(f"{shape:11} {kind:11} average of 3 terms at week {n}: {value:.4f}")

# The seasonal exponential average leans toward the most recent season (31,
# not the 21.0 midpoint of 11/21/31), which is exactly why it serves as the
# inertial expectation for "what this week should look like".
