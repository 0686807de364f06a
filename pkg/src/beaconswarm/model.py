"""Agent state, per-mode beacon memory, parameters, and mode transitions."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum
from typing import Optional

from .geometry import Arena, Vec2, in_region, sample_point_in_region, wrap_angle


class AgentMode(Enum):
    BEACON = "beacon"
    SEEK_TARGET = "seek_target"  # forager travelling nest -> target
    SEEK_NEST = "seek_nest"      # forager travelling target -> nest


FORAGER_MODES = (AgentMode.SEEK_TARGET, AgentMode.SEEK_NEST)


def is_forager(mode: AgentMode) -> bool:
    return mode is not AgentMode.BEACON


def opposite_state(mode: AgentMode) -> AgentMode:
    """The cross-wired forager mode: target-seekers follow the field written
    by nest-seekers and vice versa."""
    if mode is AgentMode.SEEK_TARGET:
        return AgentMode.SEEK_NEST
    if mode is AgentMode.SEEK_NEST:
        return AgentMode.SEEK_TARGET
    raise ValueError("not a forager state")


@dataclass
class BeaconMemory:
    """Per-mode weight and guiding-vector storage carried by a beacon.

    Weights stay non-negative; with zero sensing noise they are bounded by
    reward_r / (1 - lam), the fixed point of the reward recursion.
    last_strong_step backs the staleness rule of the mobile-beacon extension.
    """

    w_seek_target: float = 0.0
    w_seek_nest: float = 0.0
    u_seek_target: Vec2 = (0.0, 0.0)
    u_seek_nest: Vec2 = (0.0, 0.0)
    beacon_since: int = 0
    last_update_seek_target: int = -1
    last_update_seek_nest: int = -1
    last_strong_step: int = 0

    def weight_for(self, mode: AgentMode) -> float:
        if mode is AgentMode.SEEK_TARGET:
            return self.w_seek_target
        if mode is AgentMode.SEEK_NEST:
            return self.w_seek_nest
        raise ValueError("not a forager state")

    def guide_for(self, mode: AgentMode) -> Vec2:
        if mode is AgentMode.SEEK_TARGET:
            return self.u_seek_target
        if mode is AgentMode.SEEK_NEST:
            return self.u_seek_nest
        raise ValueError("not a forager state")


@dataclass
class Agent:
    """One swarm member. Ids exist only for engine iteration order and
    logging; they never appear in broadcast payloads."""

    id: int
    pos: Vec2
    heading: float  # radians in [-pi, pi)
    mode: AgentMode
    released: bool = False
    vel: Vec2 = (0.0, 0.0)  # velocity executed on the most recent move
    trips_completed: int = 0
    beacon: Optional[BeaconMemory] = None  # present exactly when mode is BEACON
    turn_around: bool = False  # set when the forager switched seek states last step


@dataclass(frozen=True)
class BeaconBroadcast:
    """One-hop beacon payload: exactly six scalar values (two weights plus
    two 2D guiding vectors). Also used for the received, disturbed copy."""

    w_seek_target: float
    w_seek_nest: float
    u_seek_target: Vec2
    u_seek_nest: Vec2


@dataclass(frozen=True)
class ForagerBroadcast:
    state: AgentMode
    reward: float
    disturbed_velocity: Vec2

    def __post_init__(self):
        if self.state is AgentMode.BEACON:
            raise ValueError("forager broadcast cannot carry the beacon state")


@dataclass(frozen=True)
class SimParams:
    """Run parameters. Defaults follow the reference desk-scale setup."""

    rho: float = 0.01                 # beacon memory smoothing factor
    lam: float = 0.8                  # reward discount factor
    reward_r: float = 1.0             # constant reward inside the matching goal disc
    epsilon: float = 0.05             # exploration rate
    tau_s: float = 1.0                # round duration, seconds
    delta_m: float = 0.4              # broadcast range, meters
    v0_mps: float = 0.25              # forager cruise speed
    sigma2: float = 0.01              # variance of the multiplicative signal noise
    max_signals: int = 5              # per-beacon cap on processed forager signals
    n_agents: int = 100
    horizon_steps: int = 400
    batch_size: int = 10
    batch_interval_steps: int = 5
    collision_trigger_m: float = 0.02
    robot_radius_m: float = 0.02
    seed: int = 0
    collision_avoidance: bool = True  # off reproduces the point-mass prototype

    def to_json_dict(self) -> dict:
        out = {}
        for f in fields(self):
            out["lambda" if f.name == "lam" else f.name] = getattr(self, f.name)
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "SimParams":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = "lam" if key == "lambda" else key
            if name not in known:
                raise ValueError(f"unknown parameter field {key!r}")
            kwargs[name] = value
        return cls(**kwargs)


def validate_params(params: SimParams, arena: Optional[Arena] = None) -> list:
    """Hard-errors on out-of-range fields; returns soft warnings for the
    parameter constraints the guarantees rely on (step length below half the
    broadcast range, goal radii at least two step lengths)."""
    p = params
    for name, value, lo, hi in (("rho", p.rho, 0.0, 1.0),
                                ("lambda", p.lam, 0.0, 1.0),
                                ("epsilon", p.epsilon, 0.0, 1.0)):
        if not (lo <= value <= hi):
            raise ValueError(f"{name} must be in [{lo}, {hi}], got {value}")
    for name, value in (("tau_s", p.tau_s), ("delta_m", p.delta_m),
                        ("v0_mps", p.v0_mps), ("robot_radius_m", p.robot_radius_m)):
        if not value > 0.0:
            raise ValueError(f"{name} must be positive, got {value}")
    if p.sigma2 < 0.0:
        raise ValueError(f"sigma2 must be non-negative, got {p.sigma2}")
    if p.collision_trigger_m < 0.0:
        raise ValueError(f"collision_trigger_m must be non-negative, got {p.collision_trigger_m}")
    for name, value, lo in (("max_signals", p.max_signals, 1),
                            ("n_agents", p.n_agents, 1),
                            ("horizon_steps", p.horizon_steps, 0),
                            ("batch_size", p.batch_size, 1),
                            ("batch_interval_steps", p.batch_interval_steps, 1)):
        if int(value) != value or value < lo:
            raise ValueError(f"{name} must be an integer >= {lo}, got {value}")

    warnings = []
    step_len = p.v0_mps * p.tau_s
    if step_len >= p.delta_m / 2.0:
        warnings.append(
            f"step length v0*tau = {step_len:g} m is not below delta/2 = {p.delta_m / 2.0:g} m; "
            "a forager can cross a beacon's range in one move")
    if arena is not None:
        for name, disc in (("nest", arena.nest), ("target", arena.target)):
            if disc.radius < 2.0 * step_len:
                warnings.append(
                    f"{name} radius {disc.radius:g} m is below 2*v0*tau = {2.0 * step_len:g} m; "
                    "goal discs may be jumped over")
    return warnings


def init_swarm(params: SimParams, arena: Arena, rng) -> list:
    """Initial roster: everyone inside the nest disc, agent 0 the sole beacon
    at the nest center with zeroed memory, everyone else seeking the target.

    Minimum separation of one robot diameter is enforced within each release
    batch (agents of different batches occupy the nest at different times).
    Only the first batch starts released.
    """
    min_sep = 2.0 * params.robot_radius_m
    agents = []
    batch_points = []
    current_batch = -1
    for i in range(params.n_agents):
        batch = i // params.batch_size
        if batch != current_batch:
            current_batch = batch
            batch_points = []
        if i == 0:
            pos = arena.nest.center
        else:
            pos = sample_point_in_region(arena.nest, rng, min_separation=min_sep,
                                         existing=batch_points)
        batch_points.append(pos)
        heading = wrap_angle(rng.uniform(-math.pi, math.pi))
        if i == 0:
            agents.append(Agent(0, pos, heading, AgentMode.BEACON,
                                released=(batch == 0), beacon=BeaconMemory()))
        else:
            agents.append(Agent(i, pos, heading, AgentMode.SEEK_TARGET,
                                released=(batch == 0)))
    return agents


def transition_mode(agent: Agent, beacon_in_range: bool, arena: Arena) -> AgentMode:
    """State switching rule for a released agent.

    Losing beacon coverage takes precedence over goal-disc switching; beacons
    never change mode here (the mobile-beacon extension handles reversion
    separately).
    """
    if agent.mode is AgentMode.BEACON:
        return AgentMode.BEACON
    if not beacon_in_range:
        return AgentMode.BEACON
    if agent.mode is AgentMode.SEEK_TARGET and in_region(arena.target, agent.pos):
        return AgentMode.SEEK_NEST
    if agent.mode is AgentMode.SEEK_NEST and in_region(arena.nest, agent.pos):
        return AgentMode.SEEK_TARGET
    return agent.mode
