"""Static rendering: per-step vector frames and summary plots.

Consumes only the public log schema and the batch metrics CSV; nothing here
reaches into engine internals.
"""

from __future__ import annotations

import csv
import math
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Circle, Rectangle

from .engine import EventLog
from .geometry import DiscObstacle
from .model import AgentMode

_BEACON = AgentMode.BEACON.value

_MODE_COLORS = {
    AgentMode.SEEK_TARGET.value: "tab:green",
    AgentMode.SEEK_NEST.value: "tab:red",
}


def _record_at_step(log: EventLog, step: int):
    for rec in log.records:
        if rec.step == step and rec.agents is not None:
            return rec
    raise ValueError("step out of range")


def render_frame(log: EventLog, step: int, out_path: str) -> str:
    """Draw one snapshot: goal discs, obstacles, beacons as dots scaled by
    their total stored weight with both guiding vectors as arrows, foragers
    colored by mode."""
    if not log.records or all(r.agents is None for r in log.records):
        raise ValueError("no records")
    rec = _record_at_step(log, step)
    arena = log.arena

    fig, ax = plt.subplots(figsize=(5.0, 5.0 * arena.height / arena.width))
    ax.set_xlim(0, arena.width)
    ax.set_ylim(0, arena.height)
    ax.set_aspect("equal")
    ax.set_title(f"t = {step * log.tau:g} s")

    for obs in arena.obstacles:
        if isinstance(obs, DiscObstacle):
            ax.add_patch(Circle(obs.center, obs.radius, color="0.55"))
        else:
            x0, y0 = obs.min_corner
            x1, y1 = obs.max_corner
            ax.add_patch(Rectangle((x0, y0), x1 - x0, y1 - y0, color="0.55"))
    ax.add_patch(Circle(arena.nest.center, arena.nest.radius,
                        fill=False, color="green", lw=1.5, label="nest"))
    ax.add_patch(Circle(arena.target.center, arena.target.radius,
                        fill=False, color="red", lw=1.5, label="target"))

    max_w = 1e-9
    beacons = []
    for a in rec.agents:
        if a[4] == _BEACON and a[5] and a[7] is not None:
            beacons.append(a)
            max_w = max(max_w, a[7][0] + a[7][1])
    for a in beacons:
        x, y = a[1], a[2]
        w = a[7][0] + a[7][1]
        ax.scatter([x], [y], s=6.0 + 60.0 * w / max_w, color="black", zorder=3)
        for ux, uy, color in ((a[7][2], a[7][3], "tab:blue"),
                              (a[7][4], a[7][5], "tab:orange")):
            norm = math.hypot(ux, uy)
            if norm > 1e-9:
                scale = 0.12 / norm
                ax.arrow(x, y, ux * scale, uy * scale, head_width=0.015,
                         color=color, length_includes_head=True, zorder=2)
    for a in rec.agents:
        if a[5] and a[4] != _BEACON:
            ax.scatter([a[1]], [a[2]], s=10, color=_MODE_COLORS[a[4]], zorder=4)

    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def _read_csv(path: str) -> list:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def plot_delay_vs_n(csv_path: str, out_path: str) -> str:
    """Median forager delay against swarm size per scenario, with IQR bars
    and the dashed ideal-path lower bound."""
    rows = _read_csv(csv_path)
    agg = [r for r in rows if r.get("kind") == "aggregate"]
    if not agg:
        raise ValueError("no aggregate rows in the metrics CSV")
    fig, ax = plt.subplots(figsize=(6, 4))
    scenarios = sorted({r["scenario"] for r in agg})
    for scenario in scenarios:
        pts = sorted((int(r["n"]), float(r["delay_foragers_s"]),
                      float(r["delay_foragers_iqr_s"] or 0.0)) for r in agg
                     if r["scenario"] == scenario and r["delay_foragers_s"])
        if not pts:
            continue
        ns = [p[0] for p in pts]
        med = [p[1] for p in pts]
        iqr = [p[2] / 2.0 for p in pts]
        ax.errorbar(ns, med, yerr=iqr, marker="o", capsize=3, label=scenario)
        bounds = [float(r["lower_bound_s"]) for r in agg
                  if r["scenario"] == scenario and r["lower_bound_s"]]
        if bounds:
            ax.axhline(bounds[0], ls="--", lw=1.0, color="tab:blue", alpha=0.6)
    baseline = [float(r["delay_foragers_s"]) for r in rows
                if r.get("kind") == "baseline" and r["delay_foragers_s"]]
    if baseline:
        ax.axhline(sorted(baseline)[len(baseline) // 2], ls=":", lw=1.0,
                   color="tab:orange", alpha=0.8, label="random baseline")
    ax.set_xlabel("swarm size N")
    ax.set_ylabel("navigation delay (s)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def plot_entropy_over_time(entropy_dir: str, out_path: str) -> str:
    """Mean normalized forager entropy over time, one curve per scenario,
    averaged across the series files found in entropy_dir."""
    series = defaultdict(list)
    names = sorted(os.listdir(entropy_dir)) if os.path.isdir(entropy_dir) else []
    for name in names:
        if not name.endswith(".csv"):
            continue
        scenario = name.split("_N")[0]
        with open(os.path.join(entropy_dir, name), "r", encoding="utf-8", newline="") as fh:
            rows = [(float(r["t_s"]), float(r["normalized"])) for r in csv.DictReader(fh)]
        series[scenario].append(rows)
    if not series:
        raise ValueError(f"no entropy series found in {entropy_dir!r}")
    fig, ax = plt.subplots(figsize=(6, 4))
    for scenario, runs in sorted(series.items()):
        length = min(len(r) for r in runs)
        ts = [runs[0][i][0] for i in range(length)]
        mean = [sum(r[i][1] for r in runs) / len(runs) for i in range(length)]
        ax.plot(ts, mean, label=scenario)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("normalized entropy")
    ax.set_ylim(bottom=0)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
