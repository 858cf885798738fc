"""SVG rendering of one series with its detected events and baseline."""

from __future__ import annotations

from .detect import EventSet, collapse_runs
from .novelty import InertialBaseline
from .series import TimeSeries


def render_series_plot(
    path: str,
    y: TimeSeries,
    events: EventSet | None = None,
    baseline: InertialBaseline | None = None,
) -> None:
    """Write an SVG: observed line, red anomaly dots, dotted change-point
    verticals, and the inertial baseline overlaid on its window."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    weeks = range(1, len(y) + 1)
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.plot(weeks, y.values, color="#1f4e79", linewidth=1.0, label="observed")
    if baseline is not None:
        ax.plot(
            range(baseline.start, baseline.stop + 1),
            baseline.values,
            color="#e07b00",
            linewidth=1.4,
            label="seasonal baseline",
        )
    if events is not None:
        for cp in collapse_runs(events.change_points):
            ax.axvline(cp, color="#888888", linestyle=":", linewidth=1.0)
        if events.anomalies:
            idx = list(events.anomalies)
            ax.plot(
                idx,
                y.values[[i - 1 for i in idx]],
                "o",
                color="#cc0000",
                markersize=3.5,
                linestyle="none",
                label="anomalies",
            )
    ax.set_xlabel("week index")
    ax.set_ylabel("weekly count")
    ax.set_title(f"{y.label.region} {y.label.measure}")
    ax.legend(loc="upper left", frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
