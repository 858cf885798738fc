"""
From seasonal baseline to an under-reporting rate
=================================================

Simulates twelve years of weekly hospitalization counts with a known
disruption over the final seven weeks: an extra `injected` curve of cases,
of which only 40% are officially attributed.  The pipeline should recover
an under-reporting rate near (1 - 0.4) / 0.4 = 1.5 without ever being told
the truth.
"""

import numpy as np

from undercount import SeriesLabel, TimeSeries, analyze

rng = np.random.default_rng(11)
n, period, start = 624, 52, 618

weeks = np.arange(1, n + 1)
usual = 200 + 50 * np.sin(2 * np.pi * weeks / period) + rng.normal(0, 2.0, n)
usual = np.rint(np.clip(usual, 0, None))

injected = np.rint(rng.uniform(400, 800, n - start + 1))   # true novelty
attributed = np.rint(0.4 * injected)                       # what got reported

totals = usual.copy()
totals[start - 1 :] += injected
reported = np.zeros(n)
reported[start - 1 :] = attributed

label = SeriesLabel("XX", "cases")
result = analyze(
    TimeSeries(label, totals),
    TimeSeries(label, reported),
    terms=4, period=period, start=start, seed=2024,
)

true_rate = (injected.sum() - attributed.sum()) / attributed.sum()
print(f"pre-rupture noise: mean {result.noise.mean:+.2f}, "
      f"95% CI [{result.noise.ci.lo:+.2f}, {result.noise.ci.hi:+.2f}]")
print(f"noise gate p={result.gates.novelty_test.p_value:.4f}, "
      f"reported gate p={result.gates.underreport_test.p_value:.4f}")

print("\nweek  observed  baseline  novelty  reported  shortfall")
for j in range(result.novelty.size):
    print(f"{start + j:4d}  {result.observed[j]:8.0f}  {result.baseline[j]:8.1f}  "
          f"{result.novelty[j]:7.1f}  {result.reported[j]:8.0f}  {result.under.weekly[j]:9.1f}")

print(f"\ncumulative novelty  {result.cum_novelty:8.1f}")
print(f"cumulative reported {result.cum_reported:8.0f}")
print(f"estimated rate      {result.rate:.3f} +/- {result.margin:.3f}")
print(f"injected rate       {true_rate:.3f}")
