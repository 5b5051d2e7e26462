"""Percentile-band figure rendering in the paper's style."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .data import Series, load_series

# Solid lines for group A, dashed for B, dotted for background traffic;
# scenario-qualified labels (e.g. "scenario3:A") inherit the group's dash style.
_DASHES = {"A": "-", "B": "--", "C": ":"}

Y_LABELS = {"prr": "Packet Reception Ratio", "pir": "Packet Inter-Reception time [ms]"}


@dataclass(frozen=True)
class SeriesStyle:
    group: str
    color: str | None = None
    linestyle: str | None = None

    def resolved_linestyle(self) -> str:
        if self.linestyle is not None:
            return self.linestyle
        bare = self.group.rsplit(":", 1)[-1]
        return _DASHES.get(bare, "-")


@dataclass(frozen=True)
class FigureSpec:
    metric: str                              # "prr" or "pir"
    output_path: str | Path
    series: tuple[SeriesStyle, ...] = ()     # empty: every group in the CSV
    percentile_band: bool = True
    title: str | None = None

    def __post_init__(self):
        if self.metric not in ("prr", "pir"):
            raise ValueError(f"metric must be 'prr' or 'pir', got {self.metric!r}")


def _styles_for(spec: FigureSpec, available: dict[tuple[str, str], Series]):
    if spec.series:
        wanted = list(spec.series)
        for st in wanted:
            if (st.group, spec.metric) not in available:
                raise ValueError(
                    f"series {st.group!r}/{spec.metric} not present in the CSV"
                )
        return wanted
    groups = sorted(g for g, m in available if m == spec.metric)
    if not groups:
        raise ValueError(f"CSV carries no {spec.metric!r} rows")
    return [SeriesStyle(g) for g in groups]


def render(csv_path: str | Path, spec: FigureSpec):
    """Plot medians (with optional p5-p95 bands) against background count.

    Writes the figure to spec.output_path and returns the matplotlib Figure;
    nothing is written when validation fails.
    """
    available = load_series(csv_path)
    styles = _styles_for(spec, available)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for st in styles:
        series = available[(st.group, spec.metric)]
        x = series.x
        (line,) = ax.plot(
            x,
            series.values("p50"),
            linestyle=st.resolved_linestyle(),
            color=st.color,
            marker="o",
            markersize=3.5,
            label=st.group,
        )
        if spec.percentile_band:
            ax.fill_between(
                x,
                series.values("p5"),
                series.values("p95"),
                color=line.get_color(),
                alpha=0.18,
                linewidth=0,
                label=f"{st.group} p5–p95",
            )
    ax.set_xlabel("Background vehicles (group C)")
    ax.set_ylabel(Y_LABELS[spec.metric])
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.output_path)
    plt.close(fig)
    return fig
