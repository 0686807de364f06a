"""Simulation owner: synchronous step schedule, batch release, event logging.

Step phases, in this fixed order (agents visited in ascending id inside each
phase):

  1. release any due batch;
  2. foragers collect in-range beacon broadcasts (weights disturbed per
     delivered copy);
  3. foragers compute their reward and guiding vector, then form their own
     broadcast from the velocity of their previous move (disturbed once at
     the sender);
  4. beacons gather capped forager signals and update both per-mode weights
     and guiding vectors (exact hold when nothing was heard);
  5. released agents move: foragers pick a velocity (turn-around override,
     then epsilon-random versus guide), filtered through collision
     avoidance, then integrated; beacons stay put unless the mobile-beacon
     extension drives them. Positions update in place, so later agents avoid
     the already-moved positions of earlier ids;
  6. mode transitions evaluated on post-move positions against the step's
     starting beacon set; a seek-state switch schedules a turn-around for
     the next move, loss of coverage converts the forager into a beacon with
     zeroed memory; extension reversions run after the forager transitions;
  7. the post-step snapshot is appended to the log.

Replaying the same params and arena (seed included) regenerates the event
log byte for byte. The log serializes to line-delimited JSON with a
versioned header line and a trailing summary line.
"""

from __future__ import annotations

import json
import math
import os
import platform
import random
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .dynamics import (avoid_collisions, choose_velocity, collect_beacon_signals,
                       collect_forager_signals, compute_gamma, form_forager_broadcast,
                       forager_reward, beacon_update_guide, beacon_update_weight,
                       guiding_vector, integrate)
from .extensions import ExtensionParams, beacon_drift_velocity, staleness_revert
from .geometry import Arena, Disc, DiscObstacle, RectObstacle, wrap_angle
from .model import Agent, AgentMode, BeaconMemory, SimParams, init_swarm, transition_mode, validate_params

LOG_SCHEMA = "beaconswarm-log/1"
RNG_ALGORITHM = "python-random-mt19937"


def arena_to_dict(arena: Arena) -> dict:
    obstacles = []
    for obs in arena.obstacles:
        if isinstance(obs, DiscObstacle):
            obstacles.append({"type": "disc", "center": list(obs.center), "radius": obs.radius})
        else:
            obstacles.append({"type": "rect", "min": list(obs.min_corner), "max": list(obs.max_corner)})
    return {
        "width": arena.width,
        "height": arena.height,
        "nest": {"center": list(arena.nest.center), "radius": arena.nest.radius},
        "target": {"center": list(arena.target.center), "radius": arena.target.radius},
        "obstacles": obstacles,
    }


def arena_from_dict(data: dict) -> Arena:
    obstacles = []
    for obs in data.get("obstacles", []):
        kind = obs.get("type")
        if kind == "disc":
            obstacles.append(DiscObstacle(tuple(obs["center"]), obs["radius"]))
        elif kind == "rect":
            obstacles.append(RectObstacle(tuple(obs["min"]), tuple(obs["max"])))
        else:
            raise ValueError(f"unknown obstacle type {kind!r}")
    return Arena(
        width=data["width"],
        height=data["height"],
        nest=Disc(tuple(data["nest"]["center"]), data["nest"]["radius"]),
        target=Disc(tuple(data["target"]["center"]), data["target"]["radius"]),
        obstacles=tuple(obstacles),
    )


@dataclass
class StepRecord:
    """State snapshot after one step plus the transitions that produced it.

    Agent entries are [id, x, y, heading, mode, released, trips, beacon] with
    beacon either null or [w_seek_target, w_seek_nest, ux_t, uy_t, ux_n,
    uy_n, beacon_since]. Transition entries are [id, from_mode, to_mode].
    """

    step: int
    agents: Optional[list]
    transitions: list

    def to_json_obj(self) -> dict:
        return {"step": self.step, "agents": self.agents, "transitions": self.transitions}


@dataclass
class EventLog:
    header: dict
    records: list
    summary: dict = field(default_factory=dict)

    def dumps(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True, separators=(",", ":"))]
        for rec in self.records:
            lines.append(json.dumps(rec.to_json_obj(), sort_keys=True, separators=(",", ":")))
        lines.append(json.dumps({"summary": self.summary}, sort_keys=True, separators=(",", ":")))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
        os.replace(tmp, path)

    @classmethod
    def loads(cls, text: str) -> "EventLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("no records")
        header = json.loads(lines[0])
        schema = header.get("schema")
        if schema != LOG_SCHEMA:
            raise ValueError(f"log schema mismatch: file has {schema!r}, reader expects {LOG_SCHEMA!r}")
        records = []
        summary = {}
        for ln in lines[1:]:
            obj = json.loads(ln)
            if "summary" in obj:
                summary = obj["summary"]
                continue
            records.append(StepRecord(obj["step"], obj["agents"], obj["transitions"]))
        log = cls(header, records, summary)
        return log

    @classmethod
    def load(cls, path) -> "EventLog":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read())

    @property
    def params(self) -> SimParams:
        return SimParams.from_json_dict(self.header["params"])

    @property
    def arena(self) -> Arena:
        return arena_from_dict(self.header["arena"])

    @property
    def tau(self) -> float:
        return float(self.header["params"]["tau_s"])

    def end_time(self) -> float:
        return self.records[-1].step * self.tau if self.records else 0.0


@dataclass
class SimState:
    params: SimParams
    arena: Arena
    extensions: ExtensionParams
    rng: random.Random
    agents: list
    step: int = 0
    coverage_warnings: int = 0


def release_batch(state: SimState) -> None:
    """Mark every agent of the batches due by the current step as released.
    Batch b (ids [b*batch_size, (b+1)*batch_size)) releases at step
    b * batch_interval_steps. Idempotent."""
    p = state.params
    limit = min(p.n_agents, (state.step // p.batch_interval_steps + 1) * p.batch_size)
    for a in state.agents[:limit]:
        if not a.released:
            a.released = True


def _snapshot_agents(agents) -> list:
    out = []
    for a in agents:
        if a.beacon is not None:
            m = a.beacon
            mem = [m.w_seek_target, m.w_seek_nest,
                   m.u_seek_target[0], m.u_seek_target[1],
                   m.u_seek_nest[0], m.u_seek_nest[1], m.beacon_since]
        else:
            mem = None
        out.append([a.id, a.pos[0], a.pos[1], a.heading, a.mode.value,
                    a.released, a.trips_completed, mem])
    return out


def step(state: SimState, *, check_invariants: bool = True) -> StepRecord:
    """Advance the simulation by one synchronous round. See the module
    docstring for the phase schedule."""
    p = state.params
    arena = state.arena
    ext = state.extensions
    rng = state.rng
    k = state.step

    # (1) batch release
    release_batch(state)
    agents = state.agents
    beacons = [a for a in agents if a.released and a.mode is AgentMode.BEACON]
    foragers = [a for a in agents if a.released and a.mode is not AgentMode.BEACON]

    # (2)+(3) forager listening, reward, guide, and own broadcast
    guides = {}
    broadcasts = {}
    for f in foragers:
        view = collect_beacon_signals(beacons, f, p, rng)
        gamma = compute_gamma(f.mode, f.pos, arena, p.reward_r)
        reward = forager_reward(f.mode, gamma, view, p.lam)
        guides[f.id] = guiding_vector(f.mode, view, p.v0_mps)
        broadcasts[f.id] = form_forager_broadcast(f, reward, p, rng)

    # (4) beacon memory updates
    for b in beacons:
        view = collect_forager_signals(foragers, broadcasts, b, p, rng)
        mem = b.beacon
        rewards_t = [s.reward for s in view if s.state is AgentMode.SEEK_TARGET]
        vels_t = [s.disturbed_velocity for s in view if s.state is AgentMode.SEEK_TARGET]
        rewards_n = [s.reward for s in view if s.state is AgentMode.SEEK_NEST]
        vels_n = [s.disturbed_velocity for s in view if s.state is AgentMode.SEEK_NEST]
        mem.w_seek_target = beacon_update_weight(mem.w_seek_target, rewards_t, p.rho)
        mem.u_seek_target = beacon_update_guide(mem.u_seek_target, vels_t, p.rho)
        mem.w_seek_nest = beacon_update_weight(mem.w_seek_nest, rewards_n, p.rho)
        mem.u_seek_nest = beacon_update_guide(mem.u_seek_nest, vels_n, p.rho)
        if rewards_t:
            mem.last_update_seek_target = k + 1
        if rewards_n:
            mem.last_update_seek_nest = k + 1
        if ext.enabled and max(mem.w_seek_target, mem.w_seek_nest) >= ext.stale_weight_threshold:
            mem.last_strong_step = k + 1

    # (5) movement
    for a in agents:
        if not a.released:
            continue
        if a.mode is AgentMode.BEACON:
            if not ext.enabled:
                a.vel = (0.0, 0.0)
                continue
            v = beacon_drift_velocity(a, ext, p.v0_mps)
            if v != (0.0, 0.0):
                v = avoid_collisions(arena, a, agents, v, p)
                a.pos = integrate(a.pos, v, p.tau_s, arena)
                if v != (0.0, 0.0):
                    a.heading = wrap_angle(math.atan2(v[1], v[0]))
            a.vel = v
        else:
            v = choose_velocity(a, guides.get(a.id), p, a.turn_around, rng)
            a.turn_around = False
            v = avoid_collisions(arena, a, agents, v, p)
            a.pos = integrate(a.pos, v, p.tau_s, arena)
            a.vel = v
            if v != (0.0, 0.0):
                a.heading = wrap_angle(math.atan2(v[1], v[0]))

    # (6) transitions against the step's starting beacon set
    transitions = []
    d2 = p.delta_m * p.delta_m
    beacon_positions = [b.pos for b in beacons]
    for f in foragers:
        fx, fy = f.pos
        in_range = False
        for bx, by in beacon_positions:
            dx = bx - fx
            dy = by - fy
            if dx * dx + dy * dy <= d2:
                in_range = True
                break
        new_mode = transition_mode(f, in_range, arena)
        if new_mode is not f.mode:
            transitions.append([f.id, f.mode.value, new_mode.value])
            if new_mode is AgentMode.BEACON:
                f.beacon = BeaconMemory(beacon_since=k + 1, last_strong_step=k + 1)
                f.vel = (0.0, 0.0)
            else:
                if f.mode is AgentMode.SEEK_NEST:
                    f.trips_completed += 1  # completed a full nest-target-nest trip
                f.turn_around = True
            f.mode = new_mode
    if ext.enabled:
        for b in beacons:
            if b.mode is not AgentMode.BEACON:
                continue
            foragers_now = [a for a in agents if a.released and a.mode is not AgentMode.BEACON]
            beacons_now = [a for a in agents if a.released and a.mode is AgentMode.BEACON]
            new_mode = staleness_revert(b, ext, k + 1, foragers_now, beacons_now, p.delta_m)
            if new_mode is not AgentMode.BEACON:
                transitions.append([b.id, AgentMode.BEACON.value, new_mode.value])
                b.mode = new_mode
                b.beacon = None
                b.vel = (0.0, 0.0)

    # coverage invariant: every released forager hears at least one beacon
    if check_invariants:
        final_beacon_positions = [a.pos for a in agents
                                  if a.released and a.mode is AgentMode.BEACON]
        uncovered = 0
        for a in agents:
            if not a.released or a.mode is AgentMode.BEACON:
                continue
            ax, ay = a.pos
            for bx, by in final_beacon_positions:
                dx = bx - ax
                dy = by - ay
                if dx * dx + dy * dy <= d2:
                    break
            else:
                uncovered += 1
        if uncovered:
            if ext.enabled:
                state.coverage_warnings += uncovered
            else:
                raise RuntimeError(f"coverage invariant violated at step {k + 1}")

    state.step = k + 1
    return StepRecord(step=k + 1, agents=_snapshot_agents(agents), transitions=transitions)


def build_header(params: SimParams, arena: Arena, ext: ExtensionParams,
                 snapshot_every: int) -> dict:
    return {
        "schema": LOG_SCHEMA,
        "generator": f"beaconswarm {__version__}",
        "rng_algorithm": RNG_ALGORITHM,
        "python": platform.python_version(),
        "seed": params.seed,
        "params": params.to_json_dict(),
        "arena": arena_to_dict(arena),
        "extensions": ext.to_json_dict(),
        "snapshot_every": snapshot_every,
    }


def run(params: SimParams, arena: Arena, extensions: Optional[ExtensionParams] = None,
        *, check_invariants: bool = True, snapshot_every: int = 1) -> EventLog:
    """Run one full simulation and return its event log.

    A pure function of (params, arena, extensions): the seed lives in params
    and all randomness flows through a single stream seeded from it.
    """
    ext = extensions if extensions is not None else ExtensionParams()
    validate_params(params, arena)
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be at least 1")
    rng = random.Random(params.seed)
    agents = init_swarm(params, arena, rng)
    state = SimState(params=params, arena=arena, extensions=ext, rng=rng, agents=agents)
    records = [StepRecord(0, _snapshot_agents(agents), [])]
    for _ in range(params.horizon_steps):
        rec = step(state, check_invariants=check_invariants)
        if snapshot_every > 1 and rec.step % snapshot_every != 0 and rec.step != params.horizon_steps:
            rec = StepRecord(rec.step, None, rec.transitions)
        records.append(rec)
    log = EventLog(build_header(params, arena, ext, snapshot_every), records)
    log.summary = {
        "coverage_warnings": state.coverage_warnings,
        "final_beacon_count": sum(1 for a in agents if a.mode is AgentMode.BEACON),
        "released_count": sum(1 for a in agents if a.released),
        "total_trips": sum(a.trips_completed for a in agents),
    }
    return log
