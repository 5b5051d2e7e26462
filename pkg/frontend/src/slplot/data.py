"""Reading and validating the simulator's aggregate percentile CSV."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

EXPECTED_COLUMNS = ("group_c_count", "group", "metric", "p5", "p50", "p95", "n_samples")


class SchemaError(ValueError):
    """The input CSV does not match the aggregate schema."""


@dataclass(frozen=True)
class SeriesPoint:
    group_c_count: int
    p5: float
    p50: float
    p95: float


@dataclass(frozen=True)
class Series:
    """One (group, metric) line: points sorted by background vehicle count."""

    group: str
    metric: str
    points: tuple[SeriesPoint, ...]

    @property
    def x(self) -> list[int]:
        return [p.group_c_count for p in self.points]

    def values(self, which: str) -> list[float]:
        return [getattr(p, which) for p in self.points]


def load_series(csv_path: str | Path) -> dict[tuple[str, str], Series]:
    """Parse an aggregate CSV into per-(group, metric) series.

    Raises SchemaError naming the missing column(s) on a header mismatch and
    on an empty file.
    """
    path = Path(csv_path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in EXPECTED_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise SchemaError(f"{path}: missing column(s): {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")

    grouped: dict[tuple[str, str], list[SeriesPoint]] = {}
    for row in rows:
        try:
            point = SeriesPoint(
                int(row["group_c_count"]),
                float(row["p5"]),
                float(row["p50"]),
                float(row["p95"]),
            )
        except ValueError as exc:
            raise SchemaError(f"{path}: bad row {row!r}: {exc}") from exc
        if not (point.p5 <= point.p50 <= point.p95):
            raise SchemaError(
                f"{path}: percentile ordering violated for "
                f"{row['group']}/{row['metric']} at count {point.group_c_count}"
            )
        grouped.setdefault((row["group"], row["metric"]), []).append(point)

    return {
        key: Series(key[0], key[1], tuple(sorted(pts, key=lambda p: p.group_c_count)))
        for key, pts in grouped.items()
    }
