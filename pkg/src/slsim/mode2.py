"""Autonomous sensing-based semi-persistent resource selection (Mode 2)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .resource_grid import PoolConfig, SlResource, selection_window


@dataclass(frozen=True)
class Mode2Config:
    t0_slots: int = 100
    rsrp_threshold_dbm: float = -128.0
    candidate_floor: float = 0.2
    prob_keep: float = 0.0
    counter_min: int = 5
    counter_max: int = 15
    threshold_step_db: float = 3.0

    def validate(self) -> None:
        from .errors import ConfigError

        if self.t0_slots < 1:
            raise ConfigError("mode2.t0_slots must be >= 1")
        if not (0.0 < self.candidate_floor <= 1.0):
            raise ConfigError("invariant '0 < candidate_floor <= 1' violated")
        if not (0.0 <= self.prob_keep <= 1.0):
            raise ConfigError("mode2.prob_keep must be a probability")
        if not (1 <= self.counter_min <= self.counter_max):
            raise ConfigError("invariant '1 <= counter_min <= counter_max' violated")


@dataclass(frozen=True)
class SensingRecord:
    """One decoded reservation announcement from the sensing window."""

    slot: int                 # absolute slot of the decoded transmission
    subchannel: int
    measured_rsrp_dbm: float
    rri: int                  # announced reservation interval, slots

    @property
    def reserved_until(self) -> int:
        return self.slot + self.rri

    def resource(self, cfg: PoolConfig) -> SlResource:
        return SlResource(self.slot % cfg.reservation_period, self.subchannel)


@dataclass
class SpsGrant:
    """Semi-persistent grant: one initial resource plus blind-retransmission slots."""

    resource: SlResource
    rri: int
    reselection_counter: int
    retx: tuple[tuple[int, int], ...] = ()   # (slot offset from initial tx, subchannel)
    first_slot: int = 0                      # absolute slot of the first occasion


def sense(ue_id: int, ring, now: int, t0_slots: int) -> list[SensingRecord]:
    """Reservations this UE decoded over the trailing sensing window [now-T0, now).

    `ring` is an iterable of per-slot transmission records (engine SlotRecord);
    slots where the UE itself transmitted yield nothing because its decode flags
    are already false there (half-duplex).
    """
    records: list[SensingRecord] = []
    lo = now - t0_slots
    for entry in ring:
        if entry.slot < lo:
            continue
        if entry.slot >= now:
            break
        decoded = entry.decoded[:, ue_id]
        for j in np.nonzero(decoded)[0]:
            records.append(
                SensingRecord(
                    slot=entry.slot,
                    subchannel=int(entry.subchannels[j]),
                    measured_rsrp_dbm=float(entry.rsrp_dbm[j, ue_id]),
                    rri=int(entry.rris[j]),
                )
            )
    return records


def project_busy(
    records: list[SensingRecord], window: tuple[int, int]
) -> dict[tuple[int, int], float]:
    """Extrapolate each sensed reservation at its RRI into the selection window.

    Returns (absolute slot, subchannel) -> strongest projected RSRP.
    """
    lo, hi = window
    busy: dict[tuple[int, int], float] = {}
    for rec in records:
        if rec.rri <= 0:
            continue
        t = rec.slot + rec.rri
        while t <= hi:
            if t >= lo:
                key = (t, rec.subchannel)
                prev = busy.get(key)
                if prev is None or rec.measured_rsrp_dbm > prev:
                    busy[key] = rec.measured_rsrp_dbm
            t += rec.rri
    return busy


def busy_matrix(
    records: list[SensingRecord], window: tuple[int, int], num_subchannels: int
) -> np.ndarray:
    """Projected-busy RSRP as a (window slots, subchannels) matrix.

    Matrix form of `project_busy`: entry [t - lo, c] is the strongest projected
    RSRP on (t, c), or -inf where nothing projects.
    """
    lo, hi = window
    busy = np.full((hi - lo + 1, num_subchannels), -np.inf)
    for (t, c), p in project_busy(records, window).items():
        busy[t - lo, c] = p
    return busy


def candidates_from_busy(
    busy: np.ndarray,
    window: tuple[int, int],
    threshold_dbm: float,
    floor: float = Mode2Config.candidate_floor,
    step_db: float = Mode2Config.threshold_step_db,
) -> tuple[list[tuple[int, int]], float]:
    """Threshold-exclusion step on a projected-busy matrix (see `busy_matrix`)."""
    lo = window[0]
    total = busy.size
    need = math.ceil(floor * total)
    thr = threshold_dbm
    while True:
        excluded = busy >= thr
        if total - int(excluded.sum()) >= need:
            break
        thr += step_db
    rows, cols = np.nonzero(~excluded)
    return [(lo + int(s), int(c)) for s, c in zip(rows, cols)], thr


def candidate_resources(
    records: list[SensingRecord],
    window: tuple[int, int],
    threshold_dbm: float,
    cfg: PoolConfig,
    floor: float = Mode2Config.candidate_floor,
    step_db: float = Mode2Config.threshold_step_db,
) -> tuple[list[tuple[int, int]], float]:
    """Candidate (absolute slot, subchannel) pairs after RSRP exclusion.

    The exclusion threshold is raised in `step_db` increments until at least
    `floor` of the window resources remain.
    """
    busy = busy_matrix(records, window, cfg.num_subchannels)
    return candidates_from_busy(busy, window, threshold_dbm, floor, step_db)


def select_grant(
    candidates: list[tuple[int, int]],
    rng: np.random.Generator,
    cfg: PoolConfig,
    mode2: Mode2Config,
    transmissions_per_packet: int = 3,
) -> SpsGrant:
    """Uniform pick of the initial resource plus blind-retransmission slots.

    Retransmission slots are drawn uniformly among the remaining candidate
    slots after the initial transmission (all within the t2 bound); each carries
    a uniformly chosen candidate subchannel of that slot.
    """
    if not candidates:
        raise ValueError("candidate set must be nonempty")
    init_slot, init_sub = candidates[int(rng.integers(len(candidates)))]

    by_slot: dict[int, list[int]] = {}
    for s, c in candidates:
        if init_slot < s <= init_slot + cfg.reservation_period - 1:
            by_slot.setdefault(s, []).append(c)
    later_slots = sorted(by_slot)
    n_retx = min(transmissions_per_packet - 1, len(later_slots))
    retx: list[tuple[int, int]] = []
    if n_retx > 0:
        chosen = rng.choice(len(later_slots), size=n_retx, replace=False)
        for i in sorted(int(j) for j in chosen):
            s = later_slots[i]
            subs = by_slot[s]
            c = subs[int(rng.integers(len(subs)))]
            retx.append((s - init_slot, c))

    counter = int(rng.integers(mode2.counter_min, mode2.counter_max + 1))
    return SpsGrant(
        resource=SlResource(init_slot % cfg.reservation_period, init_sub),
        rri=cfg.reservation_period,
        reselection_counter=counter,
        retx=tuple(retx),
        first_slot=init_slot,
    )


def maybe_keep(rng: np.random.Generator, prob_keep: float) -> bool:
    """Counter-expiry decision: True keeps the current grant, False reselects."""
    return bool(rng.random() < prob_keep)
