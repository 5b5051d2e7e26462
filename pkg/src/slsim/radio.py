"""Link budget, pathloss, per-slot SINR and threshold-capture decoding."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

MIN_DISTANCE_M = 1.0


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float = 23.0
    carrier_freq_ghz: float = 5.9
    noise_figure_db: float = 9.0
    thermal_noise_dbm_hz: float = -174.0
    shadowing_sigma_db: float = 3.0
    capture_threshold_db: float = 6.5

    def validate(self) -> None:
        from .errors import ConfigError

        if self.carrier_freq_ghz <= 0:
            raise ConfigError("radio.carrier_freq_ghz must be positive")
        if self.shadowing_sigma_db < 0:
            raise ConfigError("radio.shadowing_sigma_db must be >= 0")


class RxState(Enum):
    LISTENING = "listening"
    TRANSMITTING = "transmitting"


class RxCause(Enum):
    OK = "ok"
    BELOW_THRESHOLD = "below_threshold"
    HALF_DUPLEX = "half_duplex"


@dataclass(frozen=True)
class RxOutcome:
    rsrp_dbm: float
    sinr_db: float
    decoded: bool
    cause: RxCause


def pathloss_db(distance_m: float, freq_ghz: float) -> float:
    """Highway line-of-sight pathloss; distances below 1 m are clamped."""
    d = max(distance_m, MIN_DISTANCE_M)
    return 32.4 + 20.0 * math.log10(d) + 20.0 * math.log10(freq_ghz)


def noise_floor_dbm(budget: LinkBudget, bandwidth_hz: float) -> float:
    return budget.thermal_noise_dbm_hz + 10.0 * math.log10(bandwidth_hz) + budget.noise_figure_db


def rx_power_dbm(tx, rx, budget: LinkBudget, shadow_db: float = 0.0) -> float:
    """Received power over one link; `tx` and `rx` need ue_id/x/y attributes."""
    if tx.ue_id == rx.ue_id:
        raise ValueError("tx and rx must be distinct UEs")
    d = math.hypot(tx.x - rx.x, tx.y - rx.y)
    return budget.tx_power_dbm - pathloss_db(d, budget.carrier_freq_ghz) - shadow_db


def slot_sinr_db(signal_dbm: float, interferer_dbms, noise_dbm: float) -> float:
    """SINR with interference summed in the linear domain."""
    s = 10.0 ** (signal_dbm / 10.0)
    denom = 10.0 ** (noise_dbm / 10.0) + sum(10.0 ** (i / 10.0) for i in interferer_dbms)
    return 10.0 * math.log10(s / denom)


def decode(
    sinr_db: float,
    rx_state: RxState,
    capture_threshold_db: float = LinkBudget.capture_threshold_db,
    rsrp_dbm: float = float("nan"),
) -> RxOutcome:
    """Threshold capture model; the threshold is inclusive. Half-duplex wins."""
    if rx_state is RxState.TRANSMITTING:
        return RxOutcome(rsrp_dbm, sinr_db, False, RxCause.HALF_DUPLEX)
    if sinr_db >= capture_threshold_db:
        return RxOutcome(rsrp_dbm, sinr_db, True, RxCause.OK)
    return RxOutcome(rsrp_dbm, sinr_db, False, RxCause.BELOW_THRESHOLD)


def shadowing_matrix(n: int, sigma_db: float, rng: np.random.Generator) -> np.ndarray:
    """Static per-link shadowing, symmetric so gain(a->b) == gain(b->a)."""
    if sigma_db == 0.0:
        return np.zeros((n, n))
    draw = rng.normal(0.0, sigma_db, size=(n, n))
    upper = np.triu(draw, 1)
    return upper + upper.T


def rx_power_matrix(
    positions: np.ndarray, budget: LinkBudget, rng: np.random.Generator
) -> np.ndarray:
    """N x N received-power matrix in dBm; entry [i, j] is power at j from i.

    The diagonal is -inf (a UE does not receive itself).
    """
    n = len(positions)
    dx = positions[:, 0][:, None] - positions[:, 0][None, :]
    dy = positions[:, 1][:, None] - positions[:, 1][None, :]
    d = np.hypot(dx, dy)
    np.clip(d, MIN_DISTANCE_M, None, out=d)
    pl = 32.4 + 20.0 * np.log10(d) + 20.0 * np.log10(budget.carrier_freq_ghz)
    shadow = shadowing_matrix(n, budget.shadowing_sigma_db, rng)
    rxp = budget.tx_power_dbm - pl - shadow
    np.fill_diagonal(rxp, -np.inf)
    return rxp
