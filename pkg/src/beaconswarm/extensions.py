"""Mobile-beacon extension: stale beacons revert to foragers, and beacons
drift toward the bisector of their two guiding vectors.

With the extension disabled the engine byte-reproduces the base system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Sequence

from .geometry import Vec2
from .model import Agent, AgentMode


@dataclass(frozen=True)
class ExtensionParams:
    enabled: bool = False
    stale_weight_threshold: float = 0.01   # below this, a beacon counts as idle
    stale_steps_threshold: int = 50        # consecutive idle steps before reversion
    kp: float = 0.05                       # proportional drift gain, 1/s

    def __post_init__(self):
        if self.stale_weight_threshold < 0.0:
            raise ValueError("stale_weight_threshold must be non-negative")
        if self.stale_steps_threshold < 1:
            raise ValueError("stale_steps_threshold must be at least 1")
        if self.kp < 0.0:
            raise ValueError("kp must be non-negative")

    def to_json_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExtensionParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown extension field(s): {sorted(unknown)}")
        return cls(**data)


def staleness_revert(beacon: Agent, ext: ExtensionParams, current_step: int,
                     foragers: Sequence[Agent], beacons: Sequence[Agent],
                     delta: float) -> AgentMode:
    """Reversion rule for one beacon.

    The beacon turns back into a target-seeking forager once its larger
    weight has stayed below the threshold for stale_steps_threshold
    consecutive steps, unless it is currently the only beacon within range of
    some forager (reverting then would strand that forager without
    coverage).
    """
    mem = beacon.beacon
    if max(mem.w_seek_target, mem.w_seek_nest) >= ext.stale_weight_threshold:
        return AgentMode.BEACON
    if current_step - mem.last_strong_step < ext.stale_steps_threshold:
        return AgentMode.BEACON
    d2 = delta * delta
    bx, by = beacon.pos
    for f in foragers:
        dx = f.pos[0] - bx
        dy = f.pos[1] - by
        if dx * dx + dy * dy > d2:
            continue
        covered_elsewhere = False
        for b2 in beacons:
            if b2 is beacon:
                continue
            dx2 = f.pos[0] - b2.pos[0]
            dy2 = f.pos[1] - b2.pos[1]
            if dx2 * dx2 + dy2 * dy2 <= d2:
                covered_elsewhere = True
                break
        if not covered_elsewhere:
            return AgentMode.BEACON
    return AgentMode.SEEK_TARGET


def beacon_drift_velocity(beacon: Agent, ext: ExtensionParams, v0: float) -> Vec2:
    """Proportional drift toward the mid direction of the two stored guiding
    vectors: kp times their sum, clamped to v0.

    Acting on the raw (un-normalized) field sum keeps the controller
    self-gating: a beacon barely moves until a persistent traffic signal has
    accumulated, and exactly opposite fields (the on-path equilibrium) or
    all-zero fields give a zero command.
    """
    mem = beacon.beacon
    vx = ext.kp * (mem.u_seek_target[0] + mem.u_seek_nest[0])
    vy = ext.kp * (mem.u_seek_target[1] + mem.u_seek_nest[1])
    speed = math.hypot(vx, vy)
    if speed < 1e-9:
        return (0.0, 0.0)
    if speed > v0:
        vx *= v0 / speed
        vy *= v0 / speed
    return (vx, vy)
