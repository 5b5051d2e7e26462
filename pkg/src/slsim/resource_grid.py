"""Sidelink resource pool: slot/subchannel grid, selection windows, TB capacity."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

OFDM_SYMBOLS_PER_SLOT = 14
SUBCARRIERS_PER_PRB = 12
CTRL_OVERHEAD_FRACTION = 0.11

# MCS index -> (modulation order Qm, code rate R), 64QAM table subset
MCS_TABLE = {
    11: (4, 378 / 1024),
    12: (4, 434 / 1024),
    13: (4, 490 / 1024),
    14: (4, 616 / 1024),
    15: (4, 658 / 1024),
}


@dataclass(frozen=True, order=True)
class SlResource:
    """One schedulable unit: (slot offset within the reservation period, subchannel)."""

    slot_in_period: int
    subchannel: int


@dataclass(frozen=True)
class PoolConfig:
    slot_duration_ms: float = 1.0
    reservation_period: int = 50          # slots
    num_subchannels: int = 21
    prbs_per_subchannel: int = 10
    total_prbs: int = 216                 # 40 MHz at 15 kHz SCS
    t1: int = 2
    t2: int = 32
    subchannels_per_tb: int = 1
    subcarrier_spacing_hz: float = 15e3

    def validate(self) -> None:
        if self.reservation_period < 1:
            raise ConfigError("pool.reservation_period must be >= 1")
        if self.num_subchannels < 1 or self.prbs_per_subchannel < 1:
            raise ConfigError("pool subchannelization must be positive")
        if self.t1 < 1:
            raise ConfigError(
                "invariant 't1 >= 1' violated: the selection window may not "
                "include the triggering slot"
            )
        if not (self.t1 < self.t2 <= self.reservation_period):
            raise ConfigError("invariant 't1 < t2 <= reservation_period' violated")
        if self.num_subchannels * self.prbs_per_subchannel > self.total_prbs:
            raise ConfigError(
                "invariant 'num_subchannels * prbs_per_subchannel <= total_prbs' violated"
            )
        if not (1 <= self.subchannels_per_tb <= self.num_subchannels):
            raise ConfigError("invariant '1 <= subchannels_per_tb <= num_subchannels' violated")
        if self.slot_duration_ms <= 0:
            raise ConfigError("pool.slot_duration_ms must be positive")

    @property
    def pool_size(self) -> int:
        return self.reservation_period * self.num_subchannels

    @property
    def tb_bandwidth_hz(self) -> float:
        return (
            self.prbs_per_subchannel
            * self.subchannels_per_tb
            * SUBCARRIERS_PER_PRB
            * self.subcarrier_spacing_hz
        )


def pool_resources(cfg: PoolConfig) -> tuple[SlResource, ...]:
    """All resources of the pool in (slot, subchannel) lexicographic order."""
    return tuple(
        SlResource(s, c)
        for s in range(cfg.reservation_period)
        for c in range(cfg.num_subchannels)
    )


def slot_in_period(slot: int, cfg: PoolConfig) -> int:
    return slot % cfg.reservation_period


def selection_window(now: int, cfg: PoolConfig) -> tuple[int, int]:
    """Inclusive slot interval [now + t1, now + t2] of candidate slots for new grants."""
    if now < 0:
        raise ValueError("now must be >= 0")
    return now + cfg.t1, now + cfg.t2


def tb_capacity_bytes(cfg: PoolConfig, mcs: int) -> int:
    """Whole bytes one transport block carries at the given MCS."""
    try:
        qm, rate = MCS_TABLE[mcs]
    except KeyError:
        raise ConfigError(f"unsupported MCS index {mcs}; known: {sorted(MCS_TABLE)}") from None
    res_elements = (
        cfg.prbs_per_subchannel
        * cfg.subchannels_per_tb
        * SUBCARRIERS_PER_PRB
        * OFDM_SYMBOLS_PER_SLOT
    )
    bits = res_elements * qm * rate * (1.0 - CTRL_OVERHEAD_FRACTION)
    return math.floor(bits / 8.0)


def tb_fits(payload_bytes: int, cfg: PoolConfig, mcs: int) -> bool:
    if payload_bytes <= 0:
        raise ValueError("payload must be positive")
    return payload_bytes <= tb_capacity_bytes(cfg, mcs)
