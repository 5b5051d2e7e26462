"""Static highway topology: two platoons plus random background vehicles."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ConfigError

GROUP_C_COUNT_RANGE = (1, 170)


class Group(str, Enum):
    A = "A"
    B = "B"
    C = "C"


class AllocationMode(Enum):
    MODE2_SENSING = "mode2_sensing"
    MODE2D_SCHEDULED = "mode2d_scheduled"


class Cast(Enum):
    GROUPCAST = "groupcast"
    BROADCAST = "broadcast"


class Role(Enum):
    LEADER = "leader"
    MEMBER = "member"
    INDEPENDENT = "independent"


class Scenario(str, Enum):
    S1_ALL_SENSING = "scenario1"
    S2_ALL_SCHEDULED = "scenario2"
    S3_MIXED = "scenario3"


@dataclass(frozen=True)
class GroupSpec:
    group_id: Group
    size: int
    mode: AllocationMode
    cast: Cast
    leader_index: int | None = None

    def __post_init__(self):
        scheduled = self.mode is AllocationMode.MODE2D_SCHEDULED
        if scheduled != (self.leader_index is not None):
            raise ConfigError("leader_index must be present iff the group is scheduled")
        if self.group_id is Group.C and (scheduled or self.cast is not Cast.BROADCAST):
            raise ConfigError("group C is always sensing-based broadcast")
        if self.leader_index is not None and not (0 <= self.leader_index < self.size):
            raise ConfigError("leader_index out of range")


@dataclass(frozen=True)
class UeSpec:
    ue_id: int
    x: float
    y: float
    group: Group
    role: Role = Role.MEMBER
    mode: AllocationMode = AllocationMode.MODE2_SENSING
    cast: Cast = Cast.GROUPCAST


@dataclass(frozen=True)
class Topology:
    ues: tuple[UeSpec, ...]
    highway_length_m: float
    lane_count: int = 6

    def group_members(self, group: Group) -> tuple[UeSpec, ...]:
        return tuple(u for u in self.ues if u.group is group)


def build_platoons(
    size_a: int,
    size_b: int,
    inter_vehicle_gap_m: float,
    inter_lane_gap_m: float,
    anchor: tuple[float, float] = (0.0, 0.0),
    first_ue_id: int = 0,
) -> tuple[UeSpec, ...]:
    """Two platoon rows on adjacent lanes, members evenly spaced along x."""
    if size_a < 1 or size_b < 1:
        raise ConfigError("platoon sizes must be >= 1")
    if inter_vehicle_gap_m <= 0 or inter_lane_gap_m <= 0:
        raise ConfigError("platoon gaps must be positive")
    ax, ay = anchor
    ues = []
    uid = first_ue_id
    for k in range(size_a):
        ues.append(UeSpec(uid, ax + k * inter_vehicle_gap_m, ay, Group.A))
        uid += 1
    for k in range(size_b):
        ues.append(UeSpec(uid, ax + k * inter_vehicle_gap_m, ay + inter_lane_gap_m, Group.B))
        uid += 1
    return tuple(ues)


def background_lane_ys(inter_lane_gap_m: float, lane_count: int) -> tuple[float, ...]:
    """Lane y-positions available to background traffic (platoons hold two lanes)."""
    n_bg = max(lane_count - 2, 1)
    g = inter_lane_gap_m
    below = [-g * (i + 1) for i in range(n_bg // 2)]
    above = [g * (i + 2) for i in range(n_bg - n_bg // 2)]
    return tuple(sorted(below) + above)


def scatter_background(
    count: int,
    highway_length_m: float,
    lane_ys: tuple[float, ...],
    rng: np.random.Generator,
    first_ue_id: int = 0,
    allow_any_count: bool = False,
) -> tuple[UeSpec, ...]:
    """Background vehicles placed uniformly along the highway on background lanes."""
    lo, hi = GROUP_C_COUNT_RANGE
    if not allow_any_count and not (lo <= count <= hi):
        raise ConfigError(
            f"group C count {count} outside [{lo}, {hi}]; "
            "set group_c.allow_any_count to override"
        )
    if count < 1:
        raise ConfigError("group C count must be >= 1")
    xs = rng.uniform(0.0, highway_length_m, size=count)
    lanes = rng.integers(0, len(lane_ys), size=count)
    return tuple(
        UeSpec(
            first_ue_id + i,
            float(xs[i]),
            float(lane_ys[lanes[i]]),
            Group.C,
            role=Role.INDEPENDENT,
            cast=Cast.BROADCAST,
        )
        for i in range(count)
    )


def apply_scenario(scenario: Scenario, topo: Topology, leader_index: int = 0) -> Topology:
    """Assign allocation modes and leader roles per evaluation scenario."""
    for g in (Group.A, Group.B, Group.C):
        if not topo.group_members(g):
            raise ConfigError(f"topology is missing group {g.value}")
    scheduled_groups: set[Group] = set()
    if scenario is Scenario.S2_ALL_SCHEDULED:
        scheduled_groups = {Group.A, Group.B}
    elif scenario is Scenario.S3_MIXED:
        scheduled_groups = {Group.A}

    out = []
    for g in (Group.A, Group.B):
        members = topo.group_members(g)
        scheduled = g in scheduled_groups
        if scheduled and not (0 <= leader_index < len(members)):
            raise ConfigError("mode2d.leader_index out of range for group size")
        for i, u in enumerate(members):
            out.append(
                replace(
                    u,
                    mode=(
                        AllocationMode.MODE2D_SCHEDULED
                        if scheduled
                        else AllocationMode.MODE2_SENSING
                    ),
                    role=(
                        Role.LEADER if scheduled and i == leader_index else Role.MEMBER
                    ),
                )
            )
    out.extend(topo.group_members(Group.C))
    out.sort(key=lambda u: u.ue_id)
    return replace(topo, ues=tuple(out))


def build_topology(
    scenario: Scenario,
    size_a: int,
    size_b: int,
    group_c_count: int,
    inter_vehicle_gap_m: float,
    inter_lane_gap_m: float,
    highway_length_m: float,
    lane_count: int,
    rng: np.random.Generator,
    leader_index: int = 0,
    allow_any_c_count: bool = False,
) -> Topology:
    """Full scenario topology; platoons centered at the highway midpoint."""
    span = (max(size_a, size_b) - 1) * inter_vehicle_gap_m
    anchor = ((highway_length_m - span) / 2.0, 0.0)
    platoons = build_platoons(
        size_a, size_b, inter_vehicle_gap_m, inter_lane_gap_m, anchor
    )
    background = scatter_background(
        group_c_count,
        highway_length_m,
        background_lane_ys(inter_lane_gap_m, lane_count),
        rng,
        first_ue_id=len(platoons),
        allow_any_count=allow_any_c_count,
    )
    topo = Topology(platoons + background, highway_length_m, lane_count)
    return apply_scenario(scenario, topo, leader_index)
