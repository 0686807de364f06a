import math
import random

import pytest

from beaconswarm.dynamics import (avoid_collisions, beacon_update_guide,
                                  beacon_update_weight, choose_velocity,
                                  collect_beacon_signals, collect_forager_signals,
                                  compute_gamma, disturbance, forager_reward,
                                  form_forager_broadcast, guiding_vector, integrate)
from beaconswarm.geometry import Arena, Disc, DiscObstacle
from beaconswarm.model import Agent, AgentMode, BeaconBroadcast, BeaconMemory, ForagerBroadcast
from conftest import make_params, plain_arena


def beacon_at(pos, aid=0, w_t=0.0, w_n=0.0, u_t=(0.0, 0.0), u_n=(0.0, 0.0)):
    mem = BeaconMemory(w_seek_target=w_t, w_seek_nest=w_n,
                       u_seek_target=u_t, u_seek_nest=u_n)
    return Agent(aid, pos, 0.0, AgentMode.BEACON, released=True, beacon=mem)


def forager_at(pos, aid=1, mode=AgentMode.SEEK_TARGET, vel=(0.0, 0.0)):
    return Agent(aid, pos, 0.0, mode, released=True, vel=vel)


class TestSignalCollection:
    def test_range_inclusive(self):
        p = make_params(sigma2=0.0)
        f = forager_at((0.0, 5.0))
        near = beacon_at((0.39, 5.0), aid=2, w_t=1.0)
        far = beacon_at((0.41, 5.0), aid=3, w_t=2.0)
        view = collect_beacon_signals([near, far], f, p, random.Random(0))
        assert len(view) == 1 and view[0].w_seek_target == 1.0

    def test_zero_noise_passthrough(self):
        p = make_params(sigma2=0.0)
        f = forager_at((0.0, 0.0))
        b = beacon_at((0.1, 0.0), w_t=1.25, w_n=0.5, u_t=(0.3, 0.4))
        view = collect_beacon_signals([b], f, p, random.Random(0))
        assert view[0] == BeaconBroadcast(1.25, 0.5, (0.3, 0.4), (0.0, 0.0))

    def test_noise_keeps_weights_non_negative(self):
        p = make_params(sigma2=4.0)  # large noise so raw draws often go negative
        f = forager_at((0.0, 0.0))
        b = beacon_at((0.1, 0.0), w_t=1.0, w_n=1.0)
        rng = random.Random(0)
        for _ in range(200):
            view = collect_beacon_signals([b], f, p, rng)
            assert view[0].w_seek_target >= 0.0 and view[0].w_seek_nest >= 0.0

    def test_cap_keeps_all_when_under(self):
        p = make_params(sigma2=0.0)
        b = beacon_at((0.0, 0.0))
        foragers = [forager_at((0.01 * i, 0.0), aid=10 + i) for i in range(3)]
        broadcasts = {f.id: ForagerBroadcast(f.mode, 0.5, (0.0, 0.0)) for f in foragers}
        view = collect_forager_signals(foragers, broadcasts, b, p, random.Random(0))
        assert len(view) == 3

    def test_cap_selects_random_subset(self):
        p = make_params(sigma2=0.0, max_signals=5)
        b = beacon_at((0.0, 0.0))
        foragers = [forager_at((0.02 * i, 0.0), aid=10 + i) for i in range(8)]
        broadcasts = {f.id: ForagerBroadcast(f.mode, float(f.id), (0.0, 0.0)) for f in foragers}
        seen = set()
        for seed in range(6):
            view = collect_forager_signals(foragers, broadcasts, b, p, random.Random(seed))
            assert len(view) == 5
            seen.add(tuple(s.reward for s in view))
        assert len(seen) > 1  # the kept subset depends on the seed

    def test_empty_view_and_hold(self):
        p = make_params(sigma2=0.0)
        b = beacon_at((5.0, 5.0), w_t=2.0)
        view = collect_forager_signals([], {}, b, p, random.Random(0))
        assert view == []
        assert beacon_update_weight(2.0, [s.reward for s in view], p.rho) == 2.0

    def test_broadcast_velocity_disturbed_same_draw_per_component(self):
        p = make_params(sigma2=0.09)
        f = forager_at((0.0, 0.0), vel=(0.2, -0.1))
        msg = form_forager_broadcast(f, 1.0, p, random.Random(12))
        mu_x = msg.disturbed_velocity[0] / 0.2
        mu_y = msg.disturbed_velocity[1] / -0.1
        assert mu_x == pytest.approx(mu_y, abs=1e-12)


class TestRewards:
    def test_gamma_cases(self, empty_scenario):
        arena = empty_scenario.arena
        assert compute_gamma(AgentMode.SEEK_TARGET, arena.nest.center, arena, 1.0) == 1.0
        assert compute_gamma(AgentMode.SEEK_NEST, arena.target.center, arena, 1.0) == 1.0
        assert compute_gamma(AgentMode.SEEK_TARGET, arena.target.center, arena, 1.0) == 0.0

    def test_discounted_max(self):
        view = [BeaconBroadcast(0.5, 9.0, (0, 0), (0, 0)),
                BeaconBroadcast(1.0, 9.0, (0, 0), (0, 0))]
        assert forager_reward(AgentMode.SEEK_TARGET, 0.0, view, 0.8) == pytest.approx(0.8)

    def test_empty_view(self):
        assert forager_reward(AgentMode.SEEK_TARGET, 1.0, [], 0.8) == 1.0

    def test_fixed_point(self):
        view = [BeaconBroadcast(5.0, 0.0, (0, 0), (0, 0))]
        assert forager_reward(AgentMode.SEEK_TARGET, 1.0, view, 0.8) == 5.0

    def test_reward_recursion_converges_to_fixed_point(self):
        # independent oracle: iterate reward -> weight update until stationary
        # (contraction factor 1 - rho*(1-lam) = 0.998 per step)
        w = 0.0
        for _ in range(20_000):
            delta = 1.0 + 0.8 * w
            w = beacon_update_weight(w, [delta], 0.01)
        assert w == pytest.approx(5.0, abs=1e-9)


class TestBeaconUpdates:
    def test_weight_step(self):
        assert beacon_update_weight(0.0, [1.0], 0.01) == pytest.approx(0.01, abs=1e-12)

    def test_weight_fixed_point(self):
        assert beacon_update_weight(5.0, [5.0, 5.0], 0.01) == pytest.approx(5.0, abs=1e-12)

    def test_weight_hold(self):
        assert beacon_update_weight(2.0, [], 0.37) == 2.0

    def test_weight_contraction(self):
        rng = random.Random(8)
        for _ in range(300):
            w = rng.uniform(0, 5)
            rewards = [rng.uniform(0, 5) for _ in range(rng.randint(1, 5))]
            rho = rng.random()
            mean = sum(rewards) / len(rewards)
            out = beacon_update_weight(w, rewards, rho)
            assert min(w, mean) - 1e-12 <= out <= max(w, mean) + 1e-12

    def test_guide_step(self):
        out = beacon_update_guide((0.0, 0.0), [(0.25, 0.0)], 0.5)
        assert out[0] == pytest.approx(-0.125, abs=1e-12)
        assert out[1] == 0.0

    def test_guide_hold(self):
        assert beacon_update_guide((1.0, 0.0), [], 0.9) == (1.0, 0.0)

    def test_guide_fixed_point(self):
        out = beacon_update_guide((-0.25, 0.0), [(0.25, 0.0), (0.25, 0.0)], 0.73)
        assert out[0] == pytest.approx(-0.25, abs=1e-12)
        assert out[1] == pytest.approx(0.0, abs=1e-12)


class TestGuidingVector:
    def test_symmetric_pair(self):
        view = [BeaconBroadcast(9.0, 1.0, (9, 9), (1.0, 0.0)),
                BeaconBroadcast(9.0, 1.0, (9, 9), (0.0, 1.0))]
        g = guiding_vector(AgentMode.SEEK_TARGET, view, 0.25)
        assert g[0] == pytest.approx(0.25 * math.sqrt(2) / 2)
        assert g[1] == pytest.approx(0.25 * math.sqrt(2) / 2)

    def test_normalization_kills_magnitude(self):
        view = [BeaconBroadcast(2.0, 9.0, (0.0, -3.0), (9, 9))]
        g = guiding_vector(AgentMode.SEEK_NEST, view, 0.25)
        assert g == pytest.approx((0.0, -0.25))

    def test_cancellation_gives_none(self):
        view = [BeaconBroadcast(9.0, 1.0, (9, 9), (1.0, 0.0)),
                BeaconBroadcast(9.0, 1.0, (9, 9), (-1.0, 0.0))]
        assert guiding_vector(AgentMode.SEEK_TARGET, view, 0.25) is None

    def test_empty_view_gives_none(self):
        assert guiding_vector(AgentMode.SEEK_TARGET, [], 0.25) is None

    def test_scale_invariance(self):
        rng = random.Random(13)
        for _ in range(100):
            view = [BeaconBroadcast(0.0, rng.uniform(0.01, 3.0),
                                    (0, 0), (rng.uniform(-1, 1), rng.uniform(-1, 1)))
                    for _ in range(rng.randint(1, 5))]
            g1 = guiding_vector(AgentMode.SEEK_TARGET, view, 0.25)
            c = rng.uniform(0.1, 50.0)
            scaled = [BeaconBroadcast(0.0, s.w_seek_nest * c, (0, 0), s.u_seek_nest)
                      for s in view]
            g2 = guiding_vector(AgentMode.SEEK_TARGET, scaled, 0.25)
            if g1 is None:
                assert g2 is None
            else:
                assert g1[0] == pytest.approx(g2[0], abs=1e-9)
                assert g1[1] == pytest.approx(g2[1], abs=1e-9)


class TestChooseVelocity:
    def test_turn_around_overrides(self):
        p = make_params()
        f = forager_at((1.0, 1.0), vel=(0.25, 0.0))
        v = choose_velocity(f, (0.0, 0.25), p, True, random.Random(0))
        assert v == (-0.25, 0.0)

    def test_deterministic_guide_branch(self):
        p = make_params(epsilon=0.0)
        f = forager_at((1.0, 1.0))
        assert choose_velocity(f, (0.0, 0.25), p, False, random.Random(0)) == (0.0, 0.25)

    def test_no_guide_walks_randomly_even_at_zero_epsilon(self):
        p = make_params(epsilon=0.0)
        f = forager_at((1.0, 1.0))
        v = choose_velocity(f, None, p, False, random.Random(0))
        assert math.hypot(*v) == pytest.approx(p.v0_mps)

    def test_speed_always_v0(self):
        p = make_params(epsilon=0.3)
        rng = random.Random(77)
        f = forager_at((1.0, 1.0))
        for _ in range(200):
            v = choose_velocity(f, (0.25, 0.0), p, False, rng)
            assert math.hypot(*v) == pytest.approx(p.v0_mps)

    def test_full_exploration_heading_uniform(self):
        # chi-square over the turn angle distribution at epsilon = 1
        p = make_params(epsilon=1.0)
        rng = random.Random(20_24)
        f = forager_at((1.0, 1.0))
        f.heading = 0.4
        bins = [0] * 16
        draws = 100_000
        for _ in range(draws):
            v = choose_velocity(f, (0.25, 0.0), p, False, rng)
            turn = (math.atan2(v[1], v[0]) - f.heading) % (2 * math.pi)
            bins[int(turn / (2 * math.pi) * 16)] += 1
        expected = draws / 16
        chi2 = sum((b - expected) ** 2 / expected for b in bins)
        assert chi2 < 37.70  # chi-square critical value, df=15, alpha=0.001


class TestAvoidCollisions:
    def test_free_space_identity(self):
        p = make_params()
        a = forager_at((5.0, 5.0))
        arena = plain_arena()
        assert avoid_collisions(arena, a, [a], (0.25, 0.0), p) == (0.25, 0.0)

    def test_wall_ahead_postcondition(self):
        p = make_params()
        arena = plain_arena()
        a = forager_at((9.95, 5.0))  # 5 cm from the east wall, heading into it
        v = avoid_collisions(arena, a, [a], (0.25, 0.0), p)
        ex, ey = a.pos[0] + v[0] * p.tau_s, a.pos[1] + v[1] * p.tau_s
        if v != (0.0, 0.0):
            wall = min(ex, arena.width - ex, ey, arena.height - ey)
            assert wall - p.robot_radius_m > p.collision_trigger_m

    def test_surrounded_agent_waits(self):
        p = make_params()
        arena = plain_arena()
        a = forager_at((5.0, 5.0))
        ring_r = p.v0_mps * p.tau_s  # blockers sitting on every candidate endpoint
        others = [forager_at((5.0 + ring_r * math.cos(k * math.pi / 8),
                              5.0 + ring_r * math.sin(k * math.pi / 8)), aid=10 + k)
                  for k in range(16)]
        assert avoid_collisions(arena, a, [a] + others, (0.25, 0.0), p) == (0.0, 0.0)

    def test_disabled_passthrough(self):
        p = make_params(collision_avoidance=False)
        arena = plain_arena()
        a = forager_at((9.99, 5.0))
        assert avoid_collisions(arena, a, [a], (0.25, 0.0), p) == (0.25, 0.0)

    def test_unreleased_robots_do_not_block(self):
        p = make_params()
        arena = plain_arena()
        a = forager_at((5.0, 5.0))
        ghost = Agent(9, (5.25, 5.0), 0.0, AgentMode.SEEK_TARGET, released=False)
        assert avoid_collisions(arena, a, [a, ghost], (0.25, 0.0), p) == (0.25, 0.0)

    def test_postcondition_fuzz(self):
        p = make_params()
        arena = Arena(2.0, 2.0, Disc((0.3, 0.3), 0.1), Disc((1.7, 1.7), 0.1),
                      (DiscObstacle((1.0, 1.0), 0.2),))
        rng = random.Random(31)
        for _ in range(300):
            pos = (rng.uniform(0.05, 1.95), rng.uniform(0.05, 1.95))
            if any(o.clearance_from(pos) == 0.0 for o in arena.obstacles):
                continue
            a = forager_at(pos)
            others = [forager_at((rng.uniform(0, 2), rng.uniform(0, 2)), aid=50 + k)
                      for k in range(3)]
            ang = rng.uniform(-math.pi, math.pi)
            v = avoid_collisions(arena, a, [a] + others,
                                 (0.25 * math.cos(ang), 0.25 * math.sin(ang)), p)
            if v == (0.0, 0.0):
                continue
            ex, ey = pos[0] + v[0] * p.tau_s, pos[1] + v[1] * p.tau_s
            wall = min(ex, arena.width - ex, ey, arena.height - ey)
            assert wall - p.robot_radius_m > p.collision_trigger_m
            for obs in arena.obstacles:
                assert obs.clearance_from((ex, ey)) - p.robot_radius_m > p.collision_trigger_m
            for other in others:
                gap = math.dist((ex, ey), other.pos) - 2 * p.robot_radius_m
                assert gap > p.collision_trigger_m


class TestIntegrate:
    def test_basic_step(self, empty_scenario):
        arena = empty_scenario.arena
        assert integrate((0.5, 0.5), (0.25, 0.0), 1.0, arena) == (0.75, 0.5)

    def test_zero_velocity(self, empty_scenario):
        arena = empty_scenario.arena
        assert integrate((1.0, 2.0), (0.0, 0.0), 1.0, arena) == (1.0, 2.0)

    def test_clamped_to_bounds(self, empty_scenario):
        arena = empty_scenario.arena
        out = integrate((2.4, 0.5), (0.25, 0.0), 1.0, arena)
        assert out == (arena.width, 0.5)


def test_disturbance_identity_at_zero_variance():
    rng = random.Random(0)
    before = rng.getstate()
    assert disturbance(rng, 0.0) == 1.0
    assert rng.getstate() == before  # consumes no randomness
