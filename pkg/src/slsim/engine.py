"""Slot-by-slot simulation loop: traffic, grants, interference, reception."""
from __future__ import annotations

import math
from collections import defaultdict, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from . import mode2, mode2d
from .errors import ConfigError
from .metrics import MetricsStore, RunResult, make_run_id
from .mode2 import Mode2Config
from .mode2d import GroupLedger, Mode2dConfig
from .radio import LinkBudget, noise_floor_dbm, rx_power_matrix
from .resource_grid import PoolConfig, SlResource, pool_resources, selection_window, tb_fits
from .scenario import (
    AllocationMode,
    Group,
    Role,
    Scenario,
    Topology,
    build_topology,
)


@dataclass(frozen=True)
class TrafficConfig:
    payload_bytes: int = 300
    rate_ab_kbps: float = 24.0
    rate_c_kbps: float = 48.0
    mcs: int = 14
    transmissions_per_packet: int = 3
    queue_depth: int = 4

    def validate(self) -> None:
        if self.payload_bytes <= 0:
            raise ConfigError("traffic.payload_bytes must be positive")
        if self.rate_ab_kbps <= 0 or self.rate_c_kbps <= 0:
            raise ConfigError("traffic data rates must be positive")
        if not (1 <= self.transmissions_per_packet):
            raise ConfigError("traffic.transmissions_per_packet must be >= 1")
        if self.queue_depth < 1:
            raise ConfigError("traffic.queue_depth must be >= 1")


@dataclass(frozen=True)
class MetricsConfig:
    broadcast_range_m: float = 300.0
    track_groups: tuple[str, ...] = ("A", "B", "C")

    def validate(self) -> None:
        if self.broadcast_range_m <= 0:
            raise ConfigError("metrics.broadcast_range_m must be positive")
        if not set(self.track_groups) <= {"A", "B", "C"}:
            raise ConfigError("metrics.track_groups entries must be A, B or C")


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario = Scenario.S1_ALL_SENSING
    seed: int = 1
    sim_time_s: float = 60.0
    group_a_size: int = 8
    group_b_size: int = 8
    group_c_count: int = 50
    group_c_allow_any_count: bool = False
    inter_vehicle_gap_m: float = 5.0
    inter_lane_gap_m: float = 4.0
    highway_length_m: float = 2000.0
    lane_count: int = 6
    pool: PoolConfig = field(default_factory=PoolConfig)
    budget: LinkBudget = field(default_factory=LinkBudget)
    mode2: Mode2Config = field(default_factory=Mode2Config)
    mode2d: Mode2dConfig = field(default_factory=Mode2dConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)

    def validate(self) -> None:
        if self.sim_time_s < 0:
            raise ConfigError("sim_time_s must be >= 0")
        if self.group_a_size < 1 or self.group_b_size < 1:
            raise ConfigError("platoon sizes must be >= 1")
        if self.inter_vehicle_gap_m <= 0 or self.inter_lane_gap_m <= 0:
            raise ConfigError("platoon gaps must be positive")
        if self.highway_length_m <= 0:
            raise ConfigError("highway_length_m must be positive")
        if self.lane_count < 2:
            raise ConfigError("lane_count must be >= 2")
        self.pool.validate()
        self.budget.validate()
        self.mode2.validate()
        self.mode2d.validate()
        self.traffic.validate()
        self.metrics.validate()
        if self.mode2d.subpool is not None and (
            self.mode2d.subpool[0] < 0
            or self.mode2d.subpool[1] >= self.pool.num_subchannels
        ):
            raise ConfigError("mode2d.subpool outside the subchannel range")
        if not tb_fits(self.traffic.payload_bytes, self.pool, self.traffic.mcs):
            raise ConfigError("payload does not fit one transport block at this MCS")

    @property
    def total_slots(self) -> int:
        return int(round(self.sim_time_s * 1000.0 / self.pool.slot_duration_ms))

    @property
    def run_id(self) -> str:
        return make_run_id(self.scenario.value, self.group_c_count, self.seed)


@dataclass
class SlotRecord:
    """All transmissions of one slot plus per-receiver measurement/decode data."""

    slot: int
    tx_ids: np.ndarray
    subchannels: np.ndarray
    rris: np.ndarray
    rsrp_dbm: np.ndarray    # (n_tx, n_ue)
    decoded: np.ndarray     # (n_tx, n_ue) bool


class _Packet:
    __slots__ = ("src", "created", "delivered", "sent_logged")

    def __init__(self, src: int, created: int):
        self.src = src
        self.created = created
        self.delivered: set[int] = set()
        self.sent_logged = False


class _Tx:
    __slots__ = ("ue", "subchannel", "packet")

    def __init__(self, ue: int, subchannel: int, packet: _Packet):
        self.ue = ue
        self.subchannel = subchannel
        self.packet = packet


class _Grant:
    __slots__ = ("resource", "retx", "rri", "counter", "gen")

    def __init__(self, resource: SlResource, retx, rri: int, counter, gen: int):
        self.resource = resource
        self.retx = tuple(retx)      # (offset slots after the occasion, subchannel)
        self.rri = rri
        self.counter = counter       # None for scheduled members
        self.gen = gen


class _UeState:
    __slots__ = ("spec", "queue", "grant", "gen", "period_slots")

    def __init__(self, spec, period_slots: int):
        self.spec = spec
        self.queue: deque[_Packet] = deque()
        self.grant: _Grant | None = None
        self.gen = 0
        self.period_slots = period_slots


class _SchedGroup:
    __slots__ = ("group", "ledger", "leader", "members", "bootstrap_slot", "cooldown")

    def __init__(self, group, ledger, leader, members, bootstrap_slot):
        self.group = group
        self.ledger = ledger
        self.leader = leader
        self.members = members
        self.bootstrap_slot = bootstrap_slot
        self.cooldown: dict[SlResource, int] = {}


class Simulation:
    """One deterministic run; all randomness derives from the config seed."""

    def __init__(self, cfg: SimConfig):
        cfg.validate()
        self.cfg = cfg
        ss = np.random.SeedSequence([cfg.seed, 0x51D3])
        s_topo, s_shadow, s_traffic, s_mac = ss.spawn(4)
        self.rng_mac = np.random.default_rng(s_mac)
        rng_traffic = np.random.default_rng(s_traffic)

        self.topo = build_topology(
            cfg.scenario,
            cfg.group_a_size,
            cfg.group_b_size,
            cfg.group_c_count,
            cfg.inter_vehicle_gap_m,
            cfg.inter_lane_gap_m,
            cfg.highway_length_m,
            cfg.lane_count,
            np.random.default_rng(s_topo),
            leader_index=cfg.mode2d.leader_index,
            allow_any_c_count=cfg.group_c_allow_any_count,
        )
        ues = self.topo.ues
        self.n = len(ues)
        positions = np.array([(u.x, u.y) for u in ues])
        self.rxp_dbm = rx_power_matrix(
            positions, cfg.budget, np.random.default_rng(s_shadow)
        )
        self.rxp_dbm32 = self.rxp_dbm.astype(np.float32)
        with np.errstate(over="ignore"):
            self.rxp_lin = 10.0 ** (self.rxp_dbm / 10.0)
        self.noise_lin = 10.0 ** (
            noise_floor_dbm(cfg.budget, cfg.pool.tb_bandwidth_hz) / 10.0
        )
        self.gamma_lin = 10.0 ** (cfg.budget.capture_threshold_db / 10.0)

        period = cfg.pool.reservation_period
        self.period = period
        self.full_pool = pool_resources(cfg.pool)
        sub = cfg.mode2d.subpool
        self.sched_pool = (
            self.full_pool
            if sub is None
            else tuple(r for r in self.full_pool if sub[0] <= r.subchannel <= sub[1])
        )

        # Per-UE traffic and MAC state
        slot_ms = cfg.pool.slot_duration_ms
        self.states: list[_UeState] = []
        self.arrivals: dict[int, list[int]] = defaultdict(list)
        for u in ues:
            rate = (
                cfg.traffic.rate_c_kbps if u.group is Group.C else cfg.traffic.rate_ab_kbps
            )
            period_ms = cfg.traffic.payload_bytes * 8.0 / rate
            period_slots = max(1, int(round(period_ms / slot_ms)))
            st = _UeState(u, period_slots)
            self.states.append(st)
            first = int(rng_traffic.integers(period_slots))
            self.arrivals[first].append(u.ue_id)

        # Scheduled groups (Mode 2d)
        self.sched_groups: list[_SchedGroup] = []
        gi = 0
        for g in (Group.A, Group.B):
            members = [u for u in ues if u.group is g]
            if not members or members[0].mode is not AllocationMode.MODE2D_SCHEDULED:
                continue
            leader = next(u.ue_id for u in members if u.role is Role.LEADER)
            ledger = GroupLedger(
                group_id=g.value,
                positions={u.ue_id: (u.x, u.y) for u in members},
                member_order=[u.ue_id for u in members],
                reselection_period=cfg.mode2d.t_r_slots,
                p_reselect=cfg.mode2d.p_reselect,
            )
            bootstrap = (
                cfg.mode2.t0_slots
                + gi * cfg.mode2.t0_slots
                + int(self.rng_mac.integers(period))
            )
            self.sched_groups.append(
                _SchedGroup(g, ledger, leader, [u.ue_id for u in members], bootstrap)
            )
            gi += 1

        # Metrics audiences: group members for groupcast, range-limited for broadcast
        audiences: dict[int, np.ndarray] = {}
        tracked = set(cfg.metrics.track_groups)
        for u in ues:
            if u.group.value not in tracked:
                audiences[u.ue_id] = np.empty(0, dtype=int)
            elif u.group is Group.C:
                d = np.hypot(positions[:, 0] - u.x, positions[:, 1] - u.y)
                idx = np.nonzero(d <= cfg.metrics.broadcast_range_m)[0]
                audiences[u.ue_id] = idx[idx != u.ue_id]
            else:
                audiences[u.ue_id] = np.array(
                    [v.ue_id for v in ues if v.group is u.group and v.ue_id != u.ue_id],
                    dtype=int,
                )
        self.store = MetricsStore([u.group.value for u in ues], audiences)
        self.collisions: dict[str, int] = {Group.A.value: 0, Group.B.value: 0}
        self.dropped = 0

        self.pending: dict[int, list[_Tx]] = defaultdict(list)
        self.occasions: dict[int, list[tuple[int, int]]] = defaultdict(list)
        self.ring: deque[SlotRecord] = deque()
        self._sense_cache: tuple | None = None
        self._pkt_seq = 0

    # ---- grant management -------------------------------------------------

    def _schedule_occasion(self, ue: int, slot: int) -> None:
        self.occasions[slot].append((ue, self.states[ue].gen))

    def _first_occasion(self, sip: int, now: int) -> int:
        nxt = now + 1
        return nxt + (sip - nxt % self.period) % self.period

    def _sense_projection(self, now: int, window: tuple[int, int]):
        """Ring entries projecting into the selection window, flattened.

        Shared by every UE selecting in the same slot: per transmission in the
        sensing window, the projected window row, subchannel, and transmitter.
        """
        cached = self._sense_cache
        if cached is not None and cached[0] == now:
            return cached[1]
        lo, hi = window
        sense_lo = now - self.cfg.mode2.t0_slots
        period = self.period
        ents: list[SlotRecord] = []
        rows: list[int] = []
        for entry in self.ring:
            s = entry.slot
            if s < sense_lo or s >= now:
                continue
            # first projection one period out, advanced into the window
            t = s + period
            while t < lo:
                t += period
            while t <= hi:
                ents.append(entry)
                rows.append(t - lo)
                t += period
        if ents:
            counts = [len(e.tx_ids) for e in ents]
            row_arr = np.repeat(np.asarray(rows, dtype=np.intp), counts)
            sub_arr = np.concatenate([e.subchannels for e in ents])
            tx_arr = np.concatenate([e.tx_ids for e in ents])
            dec_all = np.concatenate([e.decoded for e in ents], axis=0)
            rsrp_all = np.concatenate([e.rsrp_dbm for e in ents], axis=0)
        else:
            row_arr = sub_arr = tx_arr = np.empty(0, dtype=np.intp)
            dec_all = np.empty((0, self.n), dtype=bool)
            rsrp_all = np.empty((0, self.n), dtype=np.float32)
        proj = (row_arr, sub_arr, tx_arr, dec_all, rsrp_all)
        self._sense_cache = (now, proj)
        return proj

    def _window_busy(self, ue: int, now: int, window: tuple[int, int]) -> np.ndarray:
        """Projected-busy matrix for `ue`, built straight from the slot ring.

        Equivalent to `mode2.busy_matrix(mode2.sense(...))` for the fixed RRI
        every transmission here announces, but vectorized over the whole sensing
        window. A slot where the UE itself transmitted carries no sensing
        information (half-duplex); its projection is marked busy at every
        subchannel so the threshold rule keeps it out of the candidate set.
        """
        lo, hi = window
        busy = np.full((hi - lo + 1, self.cfg.pool.num_subchannels), -np.inf)
        row_arr, sub_arr, tx_arr, dec_all, rsrp_all = self._sense_projection(now, window)
        if row_arr.size:
            dec = dec_all[:, ue]
            np.maximum.at(
                busy,
                (row_arr[dec], sub_arr[dec]),
                rsrp_all[dec, ue].astype(np.float64),
            )
            self_rows = row_arr[tx_arr == ue]
            if self_rows.size:
                busy[self_rows] = np.maximum(busy[self_rows], 100.0)
        return busy

    def _mode2_select(self, ue: int, now: int) -> None:
        cfg = self.cfg
        window = selection_window(now, cfg.pool)
        cands, _thr = mode2.candidates_from_busy(
            self._window_busy(ue, now, window),
            window,
            cfg.mode2.rsrp_threshold_dbm,
            floor=cfg.mode2.candidate_floor,
            step_db=cfg.mode2.threshold_step_db,
        )
        g = mode2.select_grant(
            cands, self.rng_mac, cfg.pool, cfg.mode2, cfg.traffic.transmissions_per_packet
        )
        st = self.states[ue]
        st.gen += 1
        st.grant = _Grant(g.resource, g.retx, g.rri, g.reselection_counter, st.gen)
        self._schedule_occasion(ue, g.first_slot)

    def _leader_busy(self, sg: _SchedGroup, now: int) -> dict[SlResource, float]:
        """Strongest sensed RSRP per pool resource from the leader's window."""
        cfg = self.cfg
        records = mode2.sense(sg.leader, self.ring, now, cfg.mode2.t0_slots)
        busy: dict[SlResource, float] = {}
        for rec in records:
            res = rec.resource(cfg.pool)
            if res not in busy or rec.measured_rsrp_dbm > busy[res]:
                busy[res] = rec.measured_rsrp_dbm
        return busy

    def _leader_blocked(
        self, sg: _SchedGroup, busy: dict[SlResource, float]
    ) -> set[SlResource]:
        """Resources the leader's own sensing marks busy, with the standard
        threshold relaxation so at least the candidate floor of the pool stays."""
        cfg = self.cfg
        pool = self.sched_pool
        need = math.ceil(cfg.mode2.candidate_floor * len(pool))
        thr = cfg.mode2.rsrp_threshold_dbm
        while True:
            blocked = {r for r, p in busy.items() if p >= thr}
            if len(pool) - sum(1 for r in pool if r in blocked) >= need:
                return blocked
            thr += cfg.mode2.threshold_step_db

    def _assign_member(self, sg: _SchedGroup, member: int, now: int) -> SlResource:
        cfg = self.cfg
        busy = self._leader_busy(sg, now)
        blocked_res = self._leader_blocked(sg, busy)
        cooling = {
            r for r, rel in sg.cooldown.items() if now - rel <= self.period + cfg.pool.t2
        }
        blocked_res |= cooling
        used_slots = sg.ledger.used_slots()
        pool = [
            r
            for r in self.sched_pool
            if r.slot_in_period not in used_slots and r not in blocked_res
        ]
        if not pool:
            pool = [r for r in self.sched_pool if r.slot_in_period not in used_slots]
        if not pool:
            pool = list(self.sched_pool)
        res = mode2d.mrd_assign(member, sg.ledger, pool)

        n_retx = cfg.traffic.transmissions_per_packet - 1
        max_off = cfg.pool.t2 - cfg.pool.t1 + 1
        pairs = mode2d.allocate_retx(
            member,
            sg.ledger,
            res,
            cfg.pool,
            n_retx,
            max_offset=max_off,
            blocked_slots=sg.ledger.used_slots(),
            blocked_resources=blocked_res,
        )
        # When the sensing block leaves too few slots, relax it in threshold
        # steps (quietest resources unblock first) but never the group's own
        # slots, so members stay collision free whenever the period allows it.
        thr = cfg.mode2.rsrp_threshold_dbm
        max_busy = max(busy.values(), default=-math.inf)
        while len(pairs) < n_retx and thr <= max_busy:
            thr += cfg.mode2.threshold_step_db
            pairs += mode2d.allocate_retx(
                member,
                sg.ledger,
                res,
                cfg.pool,
                n_retx - len(pairs),
                max_offset=max_off,
                blocked_slots=sg.ledger.used_slots(),
                blocked_resources={r for r, p in busy.items() if p >= thr} | cooling,
            )
        if len(pairs) < n_retx:
            pairs += mode2d.allocate_retx(
                member,
                sg.ledger,
                res,
                cfg.pool,
                n_retx - len(pairs),
                max_offset=max_off,
                blocked_slots=sg.ledger.used_slots(),
                blocked_resources=cooling,
            )
        if len(pairs) < n_retx:
            # last resort: share slots rather than drop retransmissions
            pairs += mode2d.allocate_retx(
                member,
                sg.ledger,
                res,
                cfg.pool,
                n_retx - len(pairs),
                max_offset=max_off,
                blocked_slots={r.slot_in_period for _, r in pairs},
                blocked_resources=(),
            )
        st = self.states[member]
        st.gen += 1
        st.grant = _Grant(
            res,
            tuple((off, r.subchannel) for off, r in pairs),
            self.period,
            None,
            st.gen,
        )
        self._schedule_occasion(member, self._first_occasion(res.slot_in_period, now))
        return res

    def _bootstrap_group(self, sg: _SchedGroup, now: int) -> None:
        for m in sg.ledger.member_order:
            self._assign_member(sg, m, now)
            sg.ledger.timer_expiry[m] = now + self.cfg.mode2d.t_r_slots

    def _tick_group(self, sg: _SchedGroup, now: int) -> None:
        # remember released resources so in-flight patterns cannot be reissued;
        # the cooldown must be recorded before the member's replacement is
        # chosen, or a same-tick reassignment could land on them
        before = dict(sg.ledger.primary)
        retx_before = {m: list(v) for m, v in sg.ledger.retx.items()}

        def reassign(member: int) -> SlResource:
            if member in before:
                sg.cooldown[before[member]] = now
            for r in retx_before.get(member, ()):
                sg.cooldown[r] = now
            return self._assign_member(sg, member, now)

        mode2d.tick_reselection(sg.ledger, now, self.rng_mac, reassign=reassign)

    # ---- slot phases ------------------------------------------------------

    def _phase_grants(self, t: int) -> None:
        for sg in self.sched_groups:
            if t == sg.bootstrap_slot:
                self._bootstrap_group(sg, t)
            elif t > sg.bootstrap_slot:
                self._tick_group(sg, t)

    def _phase_traffic(self, t: int) -> None:
        arr = self.arrivals.pop(t, None)
        if not arr:
            return
        for ue in arr:
            st = self.states[ue]
            pkt = _Packet(ue, t)
            st.queue.append(pkt)
            if len(st.queue) > self.cfg.traffic.queue_depth:
                lost = st.queue.popleft()
                # dropped packets count as sent and lost at every intended receiver
                self.store.record_sent(lost.src)
                self.dropped += 1
            self.arrivals[t + st.period_slots].append(ue)
            if (
                st.spec.mode is AllocationMode.MODE2_SENSING
                and st.grant is None
            ):
                self._mode2_select(ue, t)

    def _phase_occasions(self, t: int) -> None:
        occ = self.occasions.pop(t, None)
        if not occ:
            return
        for ue, gen in occ:
            st = self.states[ue]
            g = st.grant
            if g is None or g.gen != gen:
                continue  # stale occasion from a replaced grant
            self._schedule_occasion(ue, t + g.rri)
            if st.queue:
                pkt = st.queue.popleft()
                self.pending[t].append(_Tx(ue, g.resource.subchannel, pkt))
                for off, sub in g.retx:
                    self.pending[t + off].append(_Tx(ue, sub, pkt))
            if g.counter is not None:
                g.counter -= 1
                if g.counter <= 0:
                    if mode2.maybe_keep(self.rng_mac, self.cfg.mode2.prob_keep):
                        g.counter = int(
                            self.rng_mac.integers(
                                self.cfg.mode2.counter_min, self.cfg.mode2.counter_max + 1
                            )
                        )
                    else:
                        self._mode2_select(ue, t)

    def _phase_receive(self, t: int) -> None:
        txs = self.pending.pop(t, None)
        if not txs:
            return
        m = len(txs)
        tx_ids = np.array([x.ue for x in txs], dtype=int)
        subs = np.array([x.subchannel for x in txs], dtype=int)
        listening = np.ones(self.n, dtype=bool)
        listening[tx_ids] = False

        rsrp = self.rxp_dbm32[tx_ids]
        decoded = np.zeros((m, self.n), dtype=bool)
        by_sub: dict[int, list[int]] = defaultdict(list)
        for i, s in enumerate(subs):
            by_sub[int(s)].append(i)
        for s, idxs in by_sub.items():
            rows = self.rxp_lin[tx_ids[idxs]]
            total = rows.sum(axis=0)
            sinr = rows / (self.noise_lin + (total - rows))
            decoded[idxs] = (sinr >= self.gamma_lin) & listening
            if len(idxs) > 1:
                self._count_collisions(tx_ids[idxs])

        self.ring.append(
            SlotRecord(
                t,
                tx_ids,
                subs,
                np.full(m, self.period, dtype=int),
                rsrp,
                decoded,
            )
        )
        horizon = t + 1 - self.cfg.mode2.t0_slots
        while self.ring and self.ring[0].slot < horizon:
            self.ring.popleft()

        t_ms = (t + 1) * self.cfg.pool.slot_duration_ms
        for i, tx in enumerate(txs):
            pkt = tx.packet
            if not pkt.sent_logged:
                pkt.sent_logged = True
                self.store.record_sent(pkt.src)
            audience = self.store.audiences[pkt.src]
            if len(audience) == 0:
                continue
            ok = audience[decoded[i][audience]]
            for rx in ok:
                rx = int(rx)
                if rx not in pkt.delivered:
                    pkt.delivered.add(rx)
                    self.store.record_reception(pkt.src, rx, t_ms)

    def _count_collisions(self, co_channel_tx: np.ndarray) -> None:
        groups = [self.states[int(u)].spec.group for u in co_channel_tx]
        for g in (Group.A, Group.B):
            k = sum(1 for x in groups if x is g)
            if k > 1:
                self.collisions[g.value] += k * (k - 1) // 2

    # ---- top level --------------------------------------------------------

    def step(self, t: int) -> None:
        self._phase_grants(t)
        self._phase_traffic(t)
        self._phase_occasions(t)
        self._phase_receive(t)

    def run(self) -> RunResult:
        for t in range(self.cfg.total_slots):
            self.step(t)
        return RunResult(
            run_id=self.cfg.run_id,
            scenario=self.cfg.scenario.value,
            group_c_count=self.cfg.group_c_count,
            seed=self.cfg.seed,
            store=self.store,
            intra_group_collisions=dict(self.collisions),
            dropped_packets=self.dropped,
        )


def run(cfg: SimConfig) -> RunResult:
    """Execute one run; a pure function of the config."""
    return Simulation(cfg).run()


def _run_one(args: tuple[SimConfig, int, int]) -> tuple[tuple[int, int], RunResult]:
    cfg, count, seed = args
    out = run(replace(cfg, group_c_count=count, seed=seed))
    return (count, seed), out


def sweep(
    base_cfg: SimConfig,
    group_c_counts: Iterable[int],
    seeds: Iterable[int],
    parallel: int | None = None,
) -> dict[tuple[int, int], RunResult]:
    """Cartesian (count x seed) sweep of independent runs, keyed by (count, seed)."""
    counts = list(group_c_counts)
    seed_list = list(seeds)
    if not counts or not seed_list:
        raise ConfigError("sweep needs at least one group C count and one seed")
    jobs = [(base_cfg, c, s) for c in counts for s in seed_list]
    results: dict[tuple[int, int], RunResult] = {}
    if parallel and parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            for key, res in pool.map(_run_one, jobs, chunksize=1):
                results[key] = res
    else:
        for job in jobs:
            key, res = _run_one(job)
            results[key] = res
    return results
