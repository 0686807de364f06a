"""One synchronous protocol round: signal exchange with multiplicative noise,
reward computation, beacon memory updates, velocity selection, collision
avoidance, and motion integration.

Every function is pure given an explicit rng handle; the engine calls them in
a fixed order so the random stream is reproducible per seed.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .geometry import Arena, Vec2, in_region
from .model import Agent, AgentMode, BeaconBroadcast, ForagerBroadcast, SimParams

GUIDE_EPS = 1e-9  # below this field magnitude the guiding vector is undefined


def disturbance(rng, sigma2: float) -> float:
    """One multiplicative noise draw, Normal(1, sigma2). sigma2 == 0 is an
    exact identity and consumes no randomness."""
    if sigma2 == 0.0:
        return 1.0
    return rng.normalvariate(1.0, math.sqrt(sigma2))


def collect_beacon_signals(beacons: Sequence[Agent], forager: Agent,
                           params: SimParams, rng) -> list:
    """Deliver in-range beacon broadcasts to one forager.

    Each delivered copy gets independent |mu| noise on both weights (the
    seek-target weight is drawn first); guiding vectors arrive exactly as
    stored. Beacons are visited in ascending id order so the rng stream is
    reproducible.
    """
    fx, fy = forager.pos
    d2 = params.delta_m * params.delta_m
    out = []
    for b in beacons:
        dx = b.pos[0] - fx
        dy = b.pos[1] - fy
        if dx * dx + dy * dy <= d2:
            m = b.beacon
            wt = abs(disturbance(rng, params.sigma2)) * m.w_seek_target
            wn = abs(disturbance(rng, params.sigma2)) * m.w_seek_nest
            out.append(BeaconBroadcast(wt, wn, m.u_seek_target, m.u_seek_nest))
    return out


def form_forager_broadcast(forager: Agent, reward: float,
                           params: SimParams, rng) -> ForagerBroadcast:
    """Payload a forager sends this round: its state, its reward, and the
    velocity of its previous move disturbed once (same draw on both
    components); every receiving beacon sees the same copy."""
    mu = disturbance(rng, params.sigma2)
    return ForagerBroadcast(forager.mode, reward,
                            (mu * forager.vel[0], mu * forager.vel[1]))


def collect_forager_signals(foragers: Sequence[Agent], broadcasts: dict,
                            beacon: Agent, params: SimParams, rng) -> list:
    """Gather in-range forager broadcasts at a beacon, capped at max_signals.

    Over the cap, a uniform random subset is kept (drawn without
    replacement); kept signals stay in ascending sender order.
    """
    bx, by = beacon.pos
    d2 = params.delta_m * params.delta_m
    ids = []
    for f in foragers:
        dx = f.pos[0] - bx
        dy = f.pos[1] - by
        if dx * dx + dy * dy <= d2:
            ids.append(f.id)
    if len(ids) > params.max_signals:
        keep = rng.sample(range(len(ids)), params.max_signals)
        ids = [ids[i] for i in sorted(keep)]
    return [broadcasts[i] for i in ids]


def compute_gamma(mode: AgentMode, pos: Vec2, arena: Arena, reward_r: float) -> float:
    """Constant reward for standing in the goal disc the forager departs
    from: target-seekers are rewarded in the nest, nest-seekers in the
    target."""
    if mode is AgentMode.SEEK_TARGET and in_region(arena.nest, pos):
        return reward_r
    if mode is AgentMode.SEEK_NEST and in_region(arena.target, pos):
        return reward_r
    return 0.0


def forager_reward(mode: AgentMode, gamma: float, view: Sequence[BeaconBroadcast],
                   lam: float) -> float:
    best = 0.0  # an empty neighborhood contributes nothing
    if mode is AgentMode.SEEK_TARGET:
        for s in view:
            if s.w_seek_target > best:
                best = s.w_seek_target
    else:
        for s in view:
            if s.w_seek_nest > best:
                best = s.w_seek_nest
    return gamma + lam * best


def beacon_update_weight(w: float, rewards: Sequence[float], rho: float) -> float:
    """Exponential smoothing toward the mean received reward; exact hold when
    nothing was heard."""
    if not rewards:
        return w
    return (1.0 - rho) * w + rho * (sum(rewards) / len(rewards))


def beacon_update_guide(u: Vec2, velocities: Sequence[Vec2], rho: float) -> Vec2:
    """Exponential smoothing toward the negated mean forager velocity (the
    stored direction points back along the traffic); exact hold when nothing
    was heard."""
    if not velocities:
        return u
    n = len(velocities)
    mx = sum(v[0] for v in velocities) / n
    my = sum(v[1] for v in velocities) / n
    return ((1.0 - rho) * u[0] - rho * mx, (1.0 - rho) * u[1] - rho * my)


def guiding_vector(mode: AgentMode, view: Sequence[BeaconBroadcast],
                   v0: float) -> Optional[Vec2]:
    """Weight-averaged direction of the opposite state's field, at speed v0.

    Returns None when nothing was received or the field sums to (numerically)
    zero; the caller then falls back to the random-heading branch. Scaling
    all weights by a positive constant leaves the result unchanged.
    """
    sx = 0.0
    sy = 0.0
    if mode is AgentMode.SEEK_TARGET:
        for s in view:
            sx += s.w_seek_nest * s.u_seek_nest[0]
            sy += s.w_seek_nest * s.u_seek_nest[1]
    else:
        for s in view:
            sx += s.w_seek_target * s.u_seek_target[0]
            sy += s.w_seek_target * s.u_seek_target[1]
    norm = math.hypot(sx, sy)
    if norm < GUIDE_EPS:
        return None
    return (v0 * sx / norm, v0 * sy / norm)


def choose_velocity(agent: Agent, guide: Optional[Vec2], params: SimParams,
                    mode_switched: bool, rng) -> Vec2:
    """Stochastic velocity rule for a released forager.

    A seek-state switch on the previous step forces a turn-around, overriding
    everything else. Otherwise the guide is followed with probability
    1 - epsilon; with probability epsilon (or always, when no guide exists)
    the heading is perturbed by a uniform random angle at speed v0.
    """
    if mode_switched:
        return (-agent.vel[0], -agent.vel[1])
    if guide is not None and rng.random() >= params.epsilon:
        return guide
    a = agent.heading + rng.uniform(-math.pi, math.pi)
    return (params.v0_mps * math.cos(a), params.v0_mps * math.sin(a))


def avoid_collisions(arena: Arena, agent: Agent, all_agents: Sequence[Agent],
                     proposed: Vec2, params: SimParams) -> Vec2:
    """Endpoint-clearance steering filter, the stand-in for the hardware
    proximity reflex.

    The proposed velocity is accepted if its endpoint keeps every surface
    distance (walls and obstacles minus robot_radius, other released robots
    minus two radii) strictly above collision_trigger_m. Otherwise headings
    rotated by +-pi/8, +-2pi/8, ... +-pi are tried nearest-first, and a zero
    velocity (wait in place) is returned when all 16 candidates are blocked.
    """
    if not params.collision_avoidance:
        return proposed
    speed = math.hypot(proposed[0], proposed[1])
    if speed == 0.0:
        return proposed
    tau = params.tau_s
    px, py = agent.pos
    wall_lim = params.collision_trigger_m + params.robot_radius_m
    robot_lim2 = (params.collision_trigger_m + 2.0 * params.robot_radius_m) ** 2

    def endpoint_ok(vx: float, vy: float) -> bool:
        ex = px + vx * tau
        ey = py + vy * tau
        if (ex <= wall_lim or ey <= wall_lim
                or arena.width - ex <= wall_lim or arena.height - ey <= wall_lim):
            return False
        for obs in arena.obstacles:
            if obs.clearance_from((ex, ey)) <= wall_lim:
                return False
        for other in all_agents:
            if other is agent or not other.released:
                continue
            dx = other.pos[0] - ex
            dy = other.pos[1] - ey
            if dx * dx + dy * dy <= robot_lim2:
                return False
        return True

    if endpoint_ok(proposed[0], proposed[1]):
        return proposed
    base = math.atan2(proposed[1], proposed[0])
    for k in range(1, 9):
        for sign in (1.0, -1.0):
            a = base + sign * k * (math.pi / 8.0)
            vx = speed * math.cos(a)
            vy = speed * math.sin(a)
            if endpoint_ok(vx, vy):
                return (vx, vy)
    return (0.0, 0.0)


def integrate(pos: Vec2, v: Vec2, tau: float, arena: Arena) -> Vec2:
    """Euler position update, clamped to the arena bounds (the clamp only
    engages when collision avoidance is disabled)."""
    x = pos[0] + v[0] * tau
    y = pos[1] + v[1] * tau
    if x < 0.0:
        x = 0.0
    elif x > arena.width:
        x = arena.width
    if y < 0.0:
        y = 0.0
    elif y > arena.height:
        y = arena.height
    return (x, y)
