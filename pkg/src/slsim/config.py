"""Config file parsing, defaults, precedence and scenario presets.

The canonical key set is flat and dotted (e.g. `pool.t1`); the YAML file may
nest sections or use dotted keys directly. Precedence: defaults < file < flags.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import yaml

from .engine import MetricsConfig, SimConfig, TrafficConfig
from .errors import ConfigError
from .mode2 import Mode2Config
from .mode2d import Mode2dConfig
from .radio import LinkBudget
from .resource_grid import PoolConfig
from .scenario import Scenario


class Provenance(str, Enum):
    DEFAULT = "default"
    FILE = "file"
    FLAG = "flag"


DEFAULTS: dict[str, Any] = {
    "scenario": "scenario1",
    "seed": 1,
    "sim_time_s": 60.0,
    "group_a.size": 8,
    "group_b.size": 8,
    "group_c.count": 50,
    "group_c.allow_any_count": False,
    "inter_vehicle_gap_m": 5.0,
    "inter_lane_gap_m": 4.0,
    "highway_length_m": 2000.0,
    "lane_count": 6,
    "pool.slot_duration_ms": 1.0,
    "pool.reservation_period_slots": 50,
    "pool.num_subchannels": 21,
    "pool.prbs_per_subchannel": 10,
    "pool.total_prbs": 216,
    "pool.t1": 2,
    "pool.t2": 32,
    "pool.subchannels_per_tb": 1,
    "traffic.payload_bytes": 300,
    "traffic.rate_ab_kbps": 24.0,
    "traffic.rate_c_kbps": 48.0,
    "traffic.mcs": 14,
    "traffic.transmissions_per_packet": 3,
    "traffic.queue_depth": 4,
    "radio.tx_power_dbm": 23.0,
    "radio.carrier_freq_ghz": 5.9,
    "radio.noise_figure_db": 9.0,
    "radio.thermal_noise_dbm_hz": -174.0,
    "radio.shadowing_sigma_db": 3.0,
    "radio.capture_threshold_db": 6.5,
    "mode2.t0_slots": 100,
    "mode2.rsrp_threshold_dbm": -128.0,
    "mode2.candidate_floor": 0.2,
    "mode2.prob_keep": 0.0,
    "mode2.counter_min": 5,
    "mode2.counter_max": 15,
    "mode2.threshold_step_db": 3.0,
    "mode2d.t_r_slots": 500,
    "mode2d.p_reselect": 0.2,
    "mode2d.leader_index": 0,
    "mode2d.subpool": None,
    "metrics.broadcast_range_m": 300.0,
    "metrics.track_groups": "A,B,C",
}

_PRESETS = {
    "scenario1": {"scenario": "scenario1"},
    "scenario2": {"scenario": "scenario2"},
    "scenario3": {"scenario": "scenario3"},
}


@dataclass
class ResolvedConfig:
    values: dict[str, Any]
    provenance: dict[str, Provenance] = field(default_factory=dict)

    def get(self, key: str) -> Any:
        return self.values[key]

    def to_nested(self) -> dict:
        nested: dict = {}
        for key, value in self.values.items():
            parts = key.split(".")
            node = nested
            for p in parts[:-1]:
                node = node.setdefault(p, {})
            node[parts[-1]] = value
        return nested

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_nested(), sort_keys=True)

    def to_sim_config(self) -> SimConfig:
        v = self.values
        try:
            scenario = Scenario(v["scenario"])
        except ValueError:
            raise ConfigError(
                f"unknown scenario {v['scenario']!r}; valid: "
                f"{[s.value for s in Scenario]}"
            ) from None
        subpool = v["mode2d.subpool"]
        if subpool is not None:
            subpool = _parse_subpool(subpool)
        cfg = SimConfig(
            scenario=scenario,
            seed=int(v["seed"]),
            sim_time_s=float(v["sim_time_s"]),
            group_a_size=int(v["group_a.size"]),
            group_b_size=int(v["group_b.size"]),
            group_c_count=int(v["group_c.count"]),
            group_c_allow_any_count=bool(v["group_c.allow_any_count"]),
            inter_vehicle_gap_m=float(v["inter_vehicle_gap_m"]),
            inter_lane_gap_m=float(v["inter_lane_gap_m"]),
            highway_length_m=float(v["highway_length_m"]),
            lane_count=int(v["lane_count"]),
            pool=PoolConfig(
                slot_duration_ms=float(v["pool.slot_duration_ms"]),
                reservation_period=int(v["pool.reservation_period_slots"]),
                num_subchannels=int(v["pool.num_subchannels"]),
                prbs_per_subchannel=int(v["pool.prbs_per_subchannel"]),
                total_prbs=int(v["pool.total_prbs"]),
                t1=int(v["pool.t1"]),
                t2=int(v["pool.t2"]),
                subchannels_per_tb=int(v["pool.subchannels_per_tb"]),
            ),
            budget=LinkBudget(
                tx_power_dbm=float(v["radio.tx_power_dbm"]),
                carrier_freq_ghz=float(v["radio.carrier_freq_ghz"]),
                noise_figure_db=float(v["radio.noise_figure_db"]),
                thermal_noise_dbm_hz=float(v["radio.thermal_noise_dbm_hz"]),
                shadowing_sigma_db=float(v["radio.shadowing_sigma_db"]),
                capture_threshold_db=float(v["radio.capture_threshold_db"]),
            ),
            mode2=Mode2Config(
                t0_slots=int(v["mode2.t0_slots"]),
                rsrp_threshold_dbm=float(v["mode2.rsrp_threshold_dbm"]),
                candidate_floor=float(v["mode2.candidate_floor"]),
                prob_keep=float(v["mode2.prob_keep"]),
                counter_min=int(v["mode2.counter_min"]),
                counter_max=int(v["mode2.counter_max"]),
                threshold_step_db=float(v["mode2.threshold_step_db"]),
            ),
            mode2d=Mode2dConfig(
                t_r_slots=int(v["mode2d.t_r_slots"]),
                p_reselect=float(v["mode2d.p_reselect"]),
                leader_index=int(v["mode2d.leader_index"]),
                subpool=subpool,
            ),
            traffic=TrafficConfig(
                payload_bytes=int(v["traffic.payload_bytes"]),
                rate_ab_kbps=float(v["traffic.rate_ab_kbps"]),
                rate_c_kbps=float(v["traffic.rate_c_kbps"]),
                mcs=int(v["traffic.mcs"]),
                transmissions_per_packet=int(v["traffic.transmissions_per_packet"]),
                queue_depth=int(v["traffic.queue_depth"]),
            ),
            metrics=MetricsConfig(
                broadcast_range_m=float(v["metrics.broadcast_range_m"]),
                track_groups=_parse_groups(v["metrics.track_groups"]),
            ),
        )
        cfg.validate()
        return cfg


def _parse_subpool(value) -> tuple[int, int]:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return int(value[0]), int(value[1])
    if isinstance(value, str):
        lo, _, hi = value.partition("-")
        if hi:
            return int(lo), int(hi)
    raise ConfigError("mode2d.subpool must be 'lo-hi' or [lo, hi]")


def _parse_groups(value) -> tuple[str, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(str(g).strip().upper() for g in value)
    if isinstance(value, str):
        return tuple(g.strip().upper() for g in value.split(",") if g.strip())
    raise ConfigError("metrics.track_groups must be a list or comma string")


def _flatten(node, prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in node.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


def _coerce(key: str, value: Any) -> Any:
    """Coerce string flag values against the default's type."""
    default = DEFAULTS[key]
    if value is None or not isinstance(value, str):
        return value
    if key == "mode2d.subpool":
        return None if value.lower() in ("null", "none", "") else value
    if isinstance(default, bool):
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if isinstance(default, int) and not isinstance(default, bool):
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
    if isinstance(default, float):
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    return value


def _check_known(keys, source: str) -> None:
    unknown = sorted(set(keys) - set(DEFAULTS))
    if unknown:
        raise ConfigError(
            f"unknown config key(s) from {source}: {unknown}; "
            f"valid keys: {sorted(DEFAULTS)}"
        )


def load_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> ResolvedConfig:
    """Resolve defaults, then file values, then flag overrides; validate."""
    values = dict(DEFAULTS)
    provenance = {k: Provenance.DEFAULT for k in DEFAULTS}

    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must contain a mapping")
        flat = _flatten(raw)
        _check_known(flat, f"file {path}")
        for k, v in flat.items():
            values[k] = _coerce(k, v)
            provenance[k] = Provenance.FILE

    if overrides:
        _check_known(overrides, "flags")
        for k, v in overrides.items():
            values[k] = _coerce(k, v)
            provenance[k] = Provenance.FLAG

    resolved = ResolvedConfig(values, provenance)
    resolved.to_sim_config()  # reject invariant violations before any run starts
    return resolved


def preset(name: str) -> dict[str, Any]:
    """Config fragment selecting one of the paper scenarios."""
    try:
        return dict(_PRESETS[name])
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; valid: {sorted(_PRESETS)}"
        ) from None
