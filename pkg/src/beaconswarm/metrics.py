"""Quantitative measures over event logs: trip counts, navigation delay,
convergence time, hierarchic social entropy, and the shortest-path lower
bound.

All functions are pure over immutable logs; windows are closed on the left
and open on the right, and a completed trip is one seek_nest -> seek_target
transition (the agent returned to the nest after visiting the target).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .geometry import Arena, Vec2, shortest_path_length
from .model import AgentMode, SimParams

_TRIP_FROM = AgentMode.SEEK_NEST.value
_TRIP_TO = AgentMode.SEEK_TARGET.value
_BEACON = AgentMode.BEACON.value


# --- single-linkage clustering and entropy -----------------------------------


@dataclass(frozen=True)
class MergeEvent:
    distance: float
    size_a: int
    size_b: int


@dataclass(frozen=True)
class Dendrogram:
    """Agglomeration record: merge distances are non-decreasing and the last
    merge joins everything into one cluster."""

    n_points: int
    merges: tuple


def single_linkage(positions: Sequence[Vec2]) -> Dendrogram:
    """Single-linkage agglomeration under Euclidean distance.

    Computed as the minimum spanning tree (Prim) with edges replayed in
    sorted order; ties sort by the (smaller, larger) endpoint index pair, so
    degenerate inputs merge lowest-index-first.
    """
    n = len(positions)
    if n < 1:
        raise ValueError("at least one position required")
    if n == 1:
        return Dendrogram(1, ())
    pts = np.asarray(positions, dtype=float)
    best_d2 = ((pts - pts[0]) ** 2).sum(axis=1)
    best_src = np.zeros(n, dtype=np.int64)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    edges = []
    for _ in range(n - 1):
        masked = np.where(in_tree, np.inf, best_d2)
        j = int(np.argmin(masked))
        s = int(best_src[j])
        edges.append((math.sqrt(float(best_d2[j])), min(s, j), max(s, j)))
        in_tree[j] = True
        d2 = ((pts - pts[j]) ** 2).sum(axis=1)
        closer = d2 < best_d2
        best_d2 = np.where(closer, d2, best_d2)
        best_src = np.where(closer, j, best_src)
    edges.sort()

    parent = list(range(n))
    size = [1] * n

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    merges = []
    for d, i, j in edges:
        ra, rb = find(i), find(j)
        merges.append(MergeEvent(d, size[ra], size[rb]))
        parent[rb] = ra
        size[ra] += size[rb]
    return Dendrogram(n, tuple(merges))


def social_entropy(sizes: Sequence[int], n: int) -> float:
    """Shannon entropy (bits) of the cluster-size fractions."""
    if sum(sizes) != n:
        raise ValueError("cluster sizes must sum to the population size")
    h = 0.0
    for c in sizes:
        p = c / n
        h -= p * math.log2(p)
    return h


def hierarchic_entropy(dendrogram: Dendrogram, n: int, delta0: float = 0.04) -> float:
    """Integral of the clustering entropy over the merge threshold.

    The entropy is piecewise constant between consecutive merge distances and
    zero above the last one, so the integral is evaluated exactly; the first
    interval is clipped to start at delta0 and merges below delta0 contribute
    nothing.
    """
    if n != dendrogram.n_points:
        raise ValueError("population size does not match the dendrogram")
    if delta0 < 0.0:
        raise ValueError("delta0 must be non-negative")
    if n <= 1:
        return 0.0
    # running entropy via T = sum(c*log2(c)) over cluster sizes
    total = 0.0
    prev_h = delta0
    t_sum = 0.0  # all singletons: 1*log2(1) each
    log2n = math.log2(n)
    entropy = log2n
    for ev in dendrogram.merges:
        if ev.distance > prev_h:
            total += entropy * (ev.distance - prev_h)
            prev_h = ev.distance
        a, b = ev.size_a, ev.size_b
        t_sum += (a + b) * math.log2(a + b)
        if a > 1:
            t_sum -= a * math.log2(a)
        if b > 1:
            t_sum -= b * math.log2(b)
        entropy = log2n - t_sum / n
    return total


def entropy_normalizer(arena: Arena, n_foragers: int, rng,
                       draws: int = 100, delta0: float = 0.04) -> float:
    """Practical entropy ceiling: mean hierarchic entropy over uniform
    placements of n_foragers in the arena's free space."""
    if draws < 1:
        raise ValueError("draws must be at least 1")
    if n_foragers <= 1:
        return 0.0
    total = 0.0
    for _ in range(draws):
        pts = [_uniform_free_point(arena, rng) for _ in range(n_foragers)]
        total += hierarchic_entropy(single_linkage(pts), n_foragers, delta0)
    return total / draws


def _uniform_free_point(arena: Arena, rng) -> Vec2:
    while True:
        p = (rng.uniform(0.0, arena.width), rng.uniform(0.0, arena.height))
        if not any(obs.contains(p) for obs in arena.obstacles):
            return p


class EntropyNormalizerCache:
    """Caches the placement-entropy ceiling per forager count for one arena.
    Each count gets its own deterministic stream so cached and uncached
    evaluation orders agree."""

    def __init__(self, arena: Arena, seed: int = 0, draws: int = 100,
                 delta0: float = 0.04):
        self.arena = arena
        self.seed = seed
        self.draws = draws
        self.delta0 = delta0
        self._cache = {}

    def __call__(self, n_foragers: int) -> float:
        if n_foragers not in self._cache:
            rng = random.Random(f"entropy-normalizer:{self.seed}:{n_foragers}")
            self._cache[n_foragers] = entropy_normalizer(
                self.arena, n_foragers, rng, self.draws, self.delta0)
        return self._cache[n_foragers]


# --- trip metrics ------------------------------------------------------------


@dataclass(frozen=True)
class DelayResult:
    mean_s: float
    censored_fraction: float


def count_trips(log, window: tuple) -> dict:
    """Per-agent completed trips with timestamps in [t0, t1)."""
    t0, t1 = window
    if not t0 < t1:
        raise ValueError("empty window")
    tau = log.tau
    end = log.end_time()
    if t0 < 0.0 or t1 > end + tau:
        raise ValueError("window outside log range")
    counts = {i: 0 for i in range(int(log.header["params"]["n_agents"]))}
    for rec in log.records:
        t = rec.step * tau
        if t < t0 or t >= t1:
            continue
        for aid, frm, to in rec.transitions:
            if frm == _TRIP_FROM and to == _TRIP_TO:
                counts[aid] += 1
    return counts


def navigation_delay(counts: dict, window: tuple, population: Iterable[int]) -> DelayResult:
    """Mean window-length-per-trip over the population; agents with zero
    trips are censored at one trip and their fraction reported alongside."""
    t0, t1 = window
    if not t0 < t1:
        raise ValueError("empty window")
    ids = list(population)
    if not ids:
        raise ValueError("empty population")
    length = t1 - t0
    total = 0.0
    zeros = 0
    for i in ids:
        c = counts.get(i, 0)
        if c == 0:
            zeros += 1
        total += length / max(c, 1)
    return DelayResult(total / len(ids), zeros / len(ids))


def detect_t_conv(log) -> Optional[float]:
    """Time of the first completed full trip by any agent, or None."""
    tau = log.tau
    for rec in log.records:
        for _, frm, to in rec.transitions:
            if frm == _TRIP_FROM and to == _TRIP_TO:
                return rec.step * tau
    return None


def final_modes(log) -> dict:
    """Agent mode at the last snapshot that carries agent data."""
    for rec in reversed(log.records):
        if rec.agents is not None:
            return {a[0]: a[4] for a in rec.agents}
    raise ValueError("log carries no agent snapshots")


def forager_ids_at_end(log) -> list:
    return [i for i, mode in sorted(final_modes(log).items()) if mode != _BEACON]


def all_ids(log) -> list:
    return list(range(int(log.header["params"]["n_agents"])))


def delay_summary(log, window: Optional[tuple] = None) -> dict:
    """Convenience bundle: t_conv, all-agent and forager-only delays over the
    given window (default: first full trip to end of log)."""
    t_conv = detect_t_conv(log)
    end = log.end_time()
    if window is None:
        t0 = t_conv if t_conv is not None and t_conv < end else 0.0
        window = (t0, end)
    counts = count_trips(log, window)
    out = {
        "t_conv_s": t_conv,
        "window": window,
        "all": navigation_delay(counts, window, all_ids(log)),
    }
    foragers = forager_ids_at_end(log)
    out["foragers"] = navigation_delay(counts, window, foragers) if foragers else None
    return out


# --- entropy over a log -------------------------------------------------------


def forager_positions(record) -> list:
    """Positions of released forager-mode agents in one snapshot."""
    return [(a[1], a[2]) for a in record.agents
            if a[5] and a[4] != _BEACON]


def entropy_series_raw(log, every: int = 5, delta0: float = 0.04) -> list:
    """(time, raw_entropy, n_foragers) samples every `every` steps over the
    released foragers."""
    tau = log.tau
    out = []
    for rec in log.records:
        if rec.agents is None or rec.step % every != 0:
            continue
        pts = forager_positions(rec)
        n = len(pts)
        if n < 2:
            out.append((rec.step * tau, 0.0, n))
            continue
        out.append((rec.step * tau, hierarchic_entropy(single_linkage(pts), n, delta0), n))
    return out


def entropy_series(log, normalizer: Optional[Callable[[int], float]] = None,
                   every: int = 5, delta0: float = 0.04) -> list:
    """(time, raw, normalized) hierarchic-entropy samples. Without a
    normalizer the normalized column repeats the raw value."""
    out = []
    for t, raw, n in entropy_series_raw(log, every, delta0):
        if normalizer is None or n < 2:
            out.append((t, raw, raw if normalizer is None else 0.0))
        else:
            ceiling = normalizer(n)
            out.append((t, raw, raw / ceiling if ceiling > 0.0 else 0.0))
    return out


# --- lower bound ---------------------------------------------------------------

_lower_bound_cache = {}


def lower_bound_delay(arena: Arena, params: SimParams) -> float:
    """Round-trip time of an ideal agent running the optimal path between the
    goal-disc rims at cruise speed."""
    key = (arena, params.robot_radius_m, params.v0_mps)
    if key not in _lower_bound_cache:
        length = shortest_path_length(arena, params.robot_radius_m,
                                      arena.nest.center, arena.target.center)
        one_way = max(0.0, length - arena.nest.radius - arena.target.radius)
        _lower_bound_cache[key] = 2.0 * one_way / params.v0_mps
    return _lower_bound_cache[key]
