"""PRR / PIR computation, per-run records and percentile aggregation."""
from __future__ import annotations

import csv
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError

RUN_CSV_HEADER = ("run_id", "group", "ue_id", "peer_id", "metric", "value", "unit")
AGGREGATE_CSV_HEADER = ("group_c_count", "group", "metric", "p5", "p50", "p95", "n_samples")

RUN_ID_RE = re.compile(r"^(?P<scenario>[^-]+)-c(?P<count>\d+)-s(?P<seed>\d+)$")


def make_run_id(scenario: str, group_c_count: int, seed: int) -> str:
    return f"{scenario}-c{group_c_count}-s{seed}"


def prr(packet_receptions: Mapping[object, set], audience: set) -> float | None:
    """Packet reception ratio: successful (packet, receiver) pairs over sent pairs.

    A packet counts once per intended receiver; receivers outside the audience
    are ignored. Undefined (None) for an empty audience or no packets.
    """
    if not audience or not packet_receptions:
        return None
    n_sent = len(packet_receptions) * len(audience)
    n_received = sum(len(rxs & audience) for rxs in packet_receptions.values())
    return n_received / n_sent


def pir(reception_times_ms: Sequence[float]) -> float | None:
    """Mean gap between successive receptions; undefined below two receptions."""
    times = list(reception_times_ms)
    if len(times) < 2:
        return None
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("reception times must be sorted")
    return (times[-1] - times[0]) / (len(times) - 1)


class PairStats:
    __slots__ = ("received", "last_ms", "gap_sum", "gap_n")

    def __init__(self):
        self.received = 0
        self.last_ms = None
        self.gap_sum = 0.0
        self.gap_n = 0


class MetricsStore:
    """Streaming per-(tx, rx) reception accounting for one run."""

    def __init__(self, groups: Sequence[str], audiences: Mapping[int, np.ndarray]):
        self.groups = list(groups)                  # ue_id -> group label
        self.audiences = {k: np.asarray(v) for k, v in audiences.items()}
        self.sent: dict[int, int] = defaultdict(int)
        self.pairs: dict[tuple[int, int], PairStats] = {}
        self.all_gaps: dict[int, list[float]] = defaultdict(list)

    def record_sent(self, src: int) -> None:
        self.sent[src] += 1

    def record_reception(self, src: int, rx: int, t_ms: float) -> None:
        st = self.pairs.get((src, rx))
        if st is None:
            st = self.pairs[(src, rx)] = PairStats()
        st.received += 1
        if st.last_ms is not None:
            st.gap_sum += t_ms - st.last_ms
            st.gap_n += 1
        st.last_ms = t_ms

    def per_ue_prr(self) -> list[tuple[int, str, float]]:
        out = []
        for src, n_sent in sorted(self.sent.items()):
            audience = self.audiences.get(src)
            if audience is None or len(audience) == 0 or n_sent == 0:
                continue
            received = sum(
                self.pairs[(src, rx)].received
                for rx in audience
                if (src, int(rx)) in self.pairs
            )
            out.append((src, self.groups[src], received / (n_sent * len(audience))))
        return out

    def per_pair_pir(self) -> list[tuple[int, int, str, float]]:
        out = []
        for (src, rx), st in sorted(self.pairs.items()):
            if st.gap_n >= 1:
                out.append((src, rx, self.groups[src], st.gap_sum / st.gap_n))
        return out


@dataclass
class RunResult:
    """Everything a single simulation run reports."""

    run_id: str
    scenario: str
    group_c_count: int
    seed: int
    store: MetricsStore
    intra_group_collisions: dict[str, int] = field(default_factory=dict)
    dropped_packets: int = 0

    def to_rows(self) -> list[tuple]:
        rows = []
        for ue, group, value in self.store.per_ue_prr():
            rows.append((self.run_id, group, str(ue), "", "prr", f"{value:.6f}", "ratio"))
        for src, rx, group, value in self.store.per_pair_pir():
            rows.append((self.run_id, group, str(src), str(rx), "pir", f"{value:.6f}", "ms"))
        for group in sorted(self.intra_group_collisions):
            rows.append(
                (
                    self.run_id,
                    group,
                    "",
                    "",
                    "intra_group_collisions",
                    str(self.intra_group_collisions[group]),
                    "count",
                )
            )
        return rows


def write_run_csv(path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUN_CSV_HEADER)
        w.writerows(result.to_rows())


def read_run_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RUN_CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"run CSV {path} is missing columns: {sorted(missing)}")
        return list(reader)


def _percentile_row(values: Sequence[float]) -> tuple[float, float, float]:
    p5, p50, p95 = np.percentile(np.asarray(values, dtype=float), [5, 50, 95])
    return float(p5), float(p50), float(p95)


@dataclass(frozen=True)
class AggregateRow:
    group_c_count: int
    group: str
    metric: str
    p5: float
    p50: float
    p95: float
    n_samples: int


def aggregate(
    results: Mapping[tuple[int, int], RunResult], qualify_scenario: bool = False
) -> list[AggregateRow]:
    """Pool per-UE PRR and per-pair PIR across seeds; 5/50/95th percentiles.

    Percentiles interpolate linearly between order statistics of the pooled
    sample (not a mean of per-seed percentiles).
    """
    pooled: dict[tuple[int, str, str], list[float]] = defaultdict(list)
    for (count, _seed), res in results.items():
        prefix = f"{res.scenario}:" if qualify_scenario else ""
        for _ue, group, value in res.store.per_ue_prr():
            pooled[(count, prefix + group, "prr")].append(value)
        for _src, _rx, group, value in res.store.per_pair_pir():
            pooled[(count, prefix + group, "pir")].append(value)
    rows = []
    for (count, group, metric), values in sorted(pooled.items()):
        p5, p50, p95 = _percentile_row(values)
        rows.append(AggregateRow(count, group, metric, p5, p50, p95, len(values)))
    return rows


def aggregate_run_rows(rows: Iterable[dict]) -> list[AggregateRow]:
    """Aggregate parsed per-run CSV rows (CLI path); scenario-qualified groups."""
    pooled: dict[tuple[int, str, str], list[float]] = defaultdict(list)
    scenarios = set()
    for row in rows:
        m = RUN_ID_RE.match(row["run_id"])
        if m is None:
            raise ConfigError(f"run_id {row['run_id']!r} does not encode scenario/count/seed")
        if row["metric"] not in ("prr", "pir"):
            continue
        scenarios.add(m.group("scenario"))
        key = (
            int(m.group("count")),
            f"{m.group('scenario')}:{row['group']}",
            row["metric"],
        )
        pooled[key].append(float(row["value"]))
    single = len(scenarios) == 1
    out = []
    for (count, group, metric), values in sorted(pooled.items()):
        p5, p50, p95 = _percentile_row(values)
        label = group.split(":", 1)[1] if single else group
        out.append(AggregateRow(count, label, metric, p5, p50, p95, len(values)))
    return out


def write_aggregate_csv(path, rows: Sequence[AggregateRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(AGGREGATE_CSV_HEADER)
        for r in rows:
            w.writerow(
                (
                    r.group_c_count,
                    r.group,
                    r.metric,
                    f"{r.p5:.6f}",
                    f"{r.p50:.6f}",
                    f"{r.p95:.6f}",
                    r.n_samples,
                )
            )


def read_aggregate_csv(path) -> list[AggregateRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(AGGREGATE_CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"aggregate CSV {path} is missing columns: {sorted(missing)}")
        return [
            AggregateRow(
                int(r["group_c_count"]),
                r["group"],
                r["metric"],
                float(r["p5"]),
                float(r["p50"]),
                float(r["p95"]),
                int(r["n_samples"]),
            )
            for r in reader
        ]
