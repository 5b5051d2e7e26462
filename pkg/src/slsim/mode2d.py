"""Group-leader resource allocation (Mode 2d Option 1) with the Maximum
Reuse Distance scheduler and periodic probabilistic reselection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .resource_grid import PoolConfig, SlResource


def euclidean_distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class Mode2dConfig:
    t_r_slots: int = 500
    p_reselect: float = 0.2
    leader_index: int = 0
    subpool: tuple[int, int] | None = None   # inclusive subchannel range restriction

    def validate(self) -> None:
        from .errors import ConfigError

        if self.t_r_slots < 1:
            raise ConfigError("mode2d.t_r_slots must be >= 1")
        if not (0.0 <= self.p_reselect <= 1.0):
            raise ConfigError("mode2d.p_reselect must be a probability")
        if self.subpool is not None and self.subpool[0] > self.subpool[1]:
            raise ConfigError("mode2d.subpool range is inverted")


@dataclass
class GroupLedger:
    """Per-group allocation state kept by the group leader."""

    group_id: str
    positions: dict[int, tuple[float, float]]
    member_order: list[int]
    reselection_period: int = 500
    p_reselect: float = 0.2
    primary: dict[int, SlResource] = field(default_factory=dict)
    retx: dict[int, list[SlResource]] = field(default_factory=dict)
    usage: dict[SlResource, set[int]] = field(default_factory=dict)
    timer_expiry: dict[int, int] = field(default_factory=dict)

    def add_usage(self, member: int, res: SlResource) -> None:
        self.usage.setdefault(res, set()).add(member)

    def release(self, member: int) -> None:
        """Drop all of a member's holdings (primary and retransmissions)."""
        held = []
        if member in self.primary:
            held.append(self.primary.pop(member))
        held.extend(self.retx.pop(member, ()))
        for res in held:
            users = self.usage.get(res)
            if users is not None:
                users.discard(member)
                if not users:
                    del self.usage[res]

    def used_slots(self) -> set[int]:
        return {r.slot_in_period for r in self.usage}

    def min_distance(self, member: int, res: SlResource) -> float:
        """Min distance from `member` to current holders of `res`; inf if free."""
        users = self.usage.get(res)
        if not users:
            return math.inf
        p = self.positions[member]
        others = [j for j in users if j != member]
        if not others:
            return math.inf
        return min(euclidean_distance(p, self.positions[j]) for j in others)


def mrd_score(requester: int, ledger: GroupLedger, res: SlResource) -> float:
    return ledger.min_distance(requester, res)


def mrd_assign(
    requester: int, ledger: GroupLedger, pool: Sequence[SlResource]
) -> SlResource:
    """Pick the resource maximizing the minimum distance to same-resource holders.

    An unused resource scores infinity; ties go to the earliest resource in
    pool order (lowest (slot, subchannel) for the canonical pool enumeration).
    The requester is recorded as the resource's holder.
    """
    if requester not in ledger.positions:
        raise ValueError(f"UE {requester} is not a member of group {ledger.group_id}")
    best = None
    best_score = -math.inf
    for res in pool:
        score = ledger.min_distance(requester, res)
        if score > best_score:
            best, best_score = res, score
            if score == math.inf:
                break
    if best is None:
        raise ValueError("pool must be nonempty")
    ledger.primary[requester] = best
    ledger.add_usage(requester, best)
    return best


def allocate_retx(
    requester: int,
    ledger: GroupLedger,
    primary: SlResource,
    cfg: PoolConfig,
    n_retx: int,
    max_offset: int = 31,
    blocked_slots: Iterable[int] = (),
    blocked_resources: Iterable[SlResource] = (),
) -> list[tuple[int, SlResource]]:
    """Blind-retransmission resources on the member's subchannel.

    Candidates are the slots within `max_offset` of the initial transmission;
    each pick uses the same max-min-distance scoring, ties resolved by the
    smallest offset. Returns (offset, resource) pairs and records usage.
    """
    period = cfg.reservation_period
    blocked_s = set(blocked_slots)
    blocked_r = set(blocked_resources)
    chosen: list[tuple[int, SlResource]] = []
    for _ in range(n_retx):
        best = None
        best_score = -math.inf
        for k in range(1, min(max_offset, period - 1) + 1):
            sip = (primary.slot_in_period + k) % period
            res = SlResource(sip, primary.subchannel)
            if sip in blocked_s or res in blocked_r:
                continue
            score = ledger.min_distance(requester, res)
            if score > best_score:
                best, best_score = (k, res), score
                if score == math.inf:
                    break
        if best is None:
            break
        chosen.append(best)
        ledger.retx.setdefault(requester, []).append(best[1])
        ledger.add_usage(requester, best[1])
        blocked_s.add(best[1].slot_in_period)
    return chosen


def leader_bootstrap(
    ledger: GroupLedger, pool: Sequence[SlResource]
) -> dict[int, SlResource]:
    """Initial allocation: members assigned one by one in member-list order."""
    if ledger.primary:
        raise ValueError("bootstrap requires an empty assignment")
    return {m: mrd_assign(m, ledger, pool) for m in ledger.member_order}


def tick_reselection(
    ledger: GroupLedger,
    now: int,
    rng: np.random.Generator,
    reassign: Callable[[int], SlResource] | None = None,
    pool: Sequence[SlResource] | None = None,
) -> list[tuple[int, SlResource | None, SlResource]]:
    """Process expired per-member reselection timers.

    With probability p_reselect the member releases its holdings and is
    reassigned (via `reassign`, or mrd_assign over `pool`); otherwise the
    member keeps its resource. The timer restarts either way.
    """
    if reassign is None:
        if pool is None:
            raise ValueError("tick_reselection needs a reassign callback or a pool")
        reassign = lambda m: mrd_assign(m, ledger, pool)
    changes: list[tuple[int, SlResource | None, SlResource]] = []
    for member in ledger.member_order:
        expiry = ledger.timer_expiry.get(member)
        if expiry is None or expiry > now:
            continue
        if rng.random() < ledger.p_reselect:
            old = ledger.primary.get(member)
            ledger.release(member)
            new = reassign(member)
            changes.append((member, old, new))
        ledger.timer_expiry[member] = now + ledger.reselection_period
    return changes
