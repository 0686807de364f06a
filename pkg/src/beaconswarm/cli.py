"""Command-line front end: single runs, multi-seed sweeps, offline metrics,
and static rendering.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
Flag precedence is flags > config file > defaults; the run header echoes the
effective values and where each came from.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Optional

from . import __version__
from .config import (BUILTIN_SCENARIOS, ConfigError, RunConfig,
                     apply_overrides, load_run_config, load_sweep_config,
                     scenario_config)
from .engine import EventLog, run
from .metrics import (EntropyNormalizerCache, count_trips, delay_summary,
                      detect_t_conv, entropy_series_raw, lower_bound_delay,
                      navigation_delay, all_ids, forager_ids_at_end)
from .model import validate_params

CSV_SCHEMA = "beaconswarm-metrics/1"

CSV_FIELDS = [
    "schema_version", "kind", "scenario", "n", "seed",
    "window_t0_s", "window_t1_s", "t_conv_s",
    "delay_all_s", "censored_all", "delay_foragers_s", "censored_foragers",
    "delay_all_iqr_s", "delay_foragers_iqr_s",
    "delay_random_baseline_s", "lower_bound_s",
    "final_beacons", "entropy_series", "error",
]


class _CliParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metrics_row(log: EventLog, *, kind: str = "run", scenario: str = "",
                window: Optional[tuple] = None, baseline_delay: Optional[float] = None,
                entropy_ref: str = "") -> dict:
    """One CSV row of recomputed metrics for a log."""
    params = log.params
    t_conv = detect_t_conv(log)
    end = log.end_time()
    if window is None:
        window = (t_conv if t_conv is not None and t_conv < end else 0.0, end)
    counts = count_trips(log, window)
    delay_all = navigation_delay(counts, window, all_ids(log))
    foragers = forager_ids_at_end(log)
    delay_foragers = navigation_delay(counts, window, foragers) if foragers else None
    row = {
        "schema_version": CSV_SCHEMA,
        "kind": kind,
        "scenario": scenario,
        "n": params.n_agents,
        "seed": params.seed,
        "window_t0_s": window[0],
        "window_t1_s": window[1],
        "t_conv_s": t_conv,
        "delay_all_s": delay_all.mean_s,
        "censored_all": delay_all.censored_fraction,
        "delay_foragers_s": delay_foragers.mean_s if delay_foragers else None,
        "censored_foragers": delay_foragers.censored_fraction if delay_foragers else None,
        "delay_all_iqr_s": None,
        "delay_foragers_iqr_s": None,
        "delay_random_baseline_s": baseline_delay,
        "lower_bound_s": None,
        "final_beacons": log.summary.get("final_beacon_count"),
        "entropy_series": entropy_ref,
        "error": "",
    }
    try:
        row["lower_bound_s"] = lower_bound_delay(log.arena, params)
    except RuntimeError as e:
        row["error"] = str(e)
    return row


def _write_csv(rows, stream) -> None:
    writer = csv.DictWriter(stream, fieldnames=CSV_FIELDS)
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k)) for k in CSV_FIELDS})


def _print_warnings(config: RunConfig) -> None:
    try:
        warnings = validate_params(config.params, config.arena)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)


# --- run ----------------------------------------------------------------------


def _resolve_run_config(args) -> tuple:
    if args.config:
        config = load_run_config(args.config)
        label = os.path.splitext(os.path.basename(args.config))[0]
    elif args.scenario:
        config = scenario_config(args.scenario)
        label = args.scenario
    else:
        raise ConfigError("one of --config or --scenario is required")
    extension = None
    if args.extension is not None:
        extension = args.extension == "on"
    config, sources = apply_overrides(config, seed=args.seed, n=args.n,
                                      extension=extension, output_dir=args.out)
    return config, label, sources


def cmd_run(args) -> int:
    config, label, sources = _resolve_run_config(args)
    p = config.params
    print(f"run {label}: N = {p.n_agents} ({sources['n_agents']}), "
          f"seed = {p.seed} ({sources['seed']}), horizon = {p.horizon_steps} steps, "
          f"extension = {'on' if config.extensions.enabled else 'off'} ({sources['extension']})")
    _print_warnings(config)
    log = run(p, config.arena, config.extensions, snapshot_every=config.snapshot_every)
    out_dir = config.output_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"run_{label}_seed{p.seed}.jsonl")
    log.save(path)
    summary = delay_summary(log)
    t_conv = summary["t_conv_s"]
    print(f"log: {path}")
    print(f"t_conv: {t_conv:g} s" if t_conv is not None else "t_conv: not reached")
    print(f"final beacons: {log.summary['final_beacon_count']}")
    window = summary["window"]
    print(f"delay over [{window[0]:g}, {window[1]:g}) s: "
          f"all = {summary['all'].mean_s:.1f} s "
          f"(censored {summary['all'].censored_fraction:.0%})", end="")
    if summary["foragers"] is not None:
        print(f", foragers = {summary['foragers'].mean_s:.1f} s "
              f"(censored {summary['foragers'].censored_fraction:.0%})")
    else:
        print()
    return 0


# --- batch ----------------------------------------------------------------------


def _run_one_job(job: dict) -> dict:
    """Worker for one sweep cell; module-level so process pools can pickle it."""
    from .config import run_config_from_dict  # local import keeps pickling light

    config = run_config_from_dict(job["config"])
    p = config.params
    try:  # a failed run must not sink the batch
        log = run(p, config.arena, config.extensions, snapshot_every=config.snapshot_every)
        out = {"job": job, "error": ""}
        if job.get("log_path"):
            log.save(job["log_path"])
        window = None
        t0 = job.get("window_t0")
        if t0 is not None and t0 < log.end_time():
            window = (t0, log.end_time())
        out["row"] = metrics_row(log, kind=job["kind"], scenario=job["scenario"], window=window)
        if job.get("entropy"):
            out["entropy_raw"] = entropy_series_raw(log)  # normalized in the parent
        return out
    except Exception as e:
        return {"job": job, "error": f"{type(e).__name__}: {e}"}


def _median(values):
    vals = [v for v in values if v is not None]
    return statistics.median(vals) if vals else None


def _iqr(values):
    vals = sorted(v for v in values if v is not None)
    if len(vals) < 2:
        return 0.0
    q = statistics.quantiles(vals, n=4, method="inclusive")
    return q[2] - q[0]


def cmd_batch(args) -> int:
    sweep = load_sweep_config(args.config)
    out_dir = args.out or sweep.base.output_dir or "batch_out"
    logs_dir = os.path.join(out_dir, "logs")
    entropy_dir = os.path.join(out_dir, "entropy")
    os.makedirs(logs_dir, exist_ok=True)
    os.makedirs(entropy_dir, exist_ok=True)

    jobs = []
    for scenario in sweep.scenarios:
        scenario_arena = scenario_config(scenario).arena
        for n in sweep.sizes:
            for seed in sweep.seeds:
                params = replace(sweep.base.params, n_agents=n, seed=seed)
                config = RunConfig(params, scenario_arena, sweep.base.extensions,
                                   None, sweep.base.snapshot_every)
                name = f"{scenario}_N{n}_seed{seed}"
                jobs.append({
                    "kind": "run", "scenario": scenario, "n": n, "seed": seed,
                    "config": config.to_dict(),
                    "log_path": os.path.join(logs_dir, f"{name}.jsonl"),
                    "entropy": True, "name": name,
                })

    results = _execute_jobs(jobs, args.workers)

    rows = []
    normalizers = {}
    t_convs = {}
    for res in results:
        job = res["job"]
        key = (job["scenario"], job["n"])
        if res["error"]:
            rows.append(_error_row(job, res["error"]))
            continue
        row = res["row"]
        t_convs.setdefault(key, []).append(row["t_conv_s"])
        if "entropy_raw" in res:
            scenario = job["scenario"]
            if scenario not in normalizers:
                normalizers[scenario] = EntropyNormalizerCache(
                    scenario_config(scenario).arena, seed=0)
            ref = os.path.join("entropy", f"{job['name']}.csv")
            _write_entropy_series(res["entropy_raw"], normalizers[scenario],
                                  os.path.join(out_dir, ref))
            row["entropy_series"] = ref
        rows.append(row)

    # random-walk baseline, one per (scenario, size), over the median self window
    baseline_jobs = []
    for scenario in sweep.scenarios:
        scenario_arena = scenario_config(scenario).arena
        for n in sweep.sizes:
            params = replace(sweep.base.params, n_agents=n, seed=sweep.seeds[0],
                             epsilon=1.0)
            config = RunConfig(params, scenario_arena, sweep.base.extensions,
                               None, sweep.base.snapshot_every)
            t0 = _median(t_convs.get((scenario, n), []))
            baseline_jobs.append({
                "kind": "baseline", "scenario": scenario, "n": n,
                "seed": sweep.seeds[0], "config": config.to_dict(),
                "window_t0": t0, "name": f"baseline_{scenario}_N{n}",
            })
    baseline_delay = {}
    for res in _execute_jobs(baseline_jobs, args.workers):
        job = res["job"]
        if res["error"]:
            rows.append(_error_row(job, res["error"]))
            continue
        row = res["row"]
        baseline_delay[(job["scenario"], job["n"])] = row["delay_foragers_s"]
        rows.append(row)
    for row in rows:
        if row["kind"] == "run" and not row["error"]:
            row["delay_random_baseline_s"] = baseline_delay.get((row["scenario"], row["n"]))

    # per (scenario, size) aggregates: medians plus interquartile ranges
    for scenario in sweep.scenarios:
        for n in sweep.sizes:
            cell = [r for r in rows if r["kind"] == "run" and not r["error"]
                    and r["scenario"] == scenario and r["n"] == n]
            if not cell:
                continue
            rows.append({
                "schema_version": CSV_SCHEMA, "kind": "aggregate",
                "scenario": scenario, "n": n, "seed": None,
                "window_t0_s": None, "window_t1_s": None,
                "t_conv_s": _median(r["t_conv_s"] for r in cell),
                "delay_all_s": _median(r["delay_all_s"] for r in cell),
                "censored_all": _median(r["censored_all"] for r in cell),
                "delay_foragers_s": _median(r["delay_foragers_s"] for r in cell),
                "censored_foragers": _median(r["censored_foragers"] for r in cell),
                "delay_all_iqr_s": _iqr(r["delay_all_s"] for r in cell),
                "delay_foragers_iqr_s": _iqr(r["delay_foragers_s"] for r in cell),
                "delay_random_baseline_s": baseline_delay.get((scenario, n)),
                "lower_bound_s": cell[0]["lower_bound_s"],
                "final_beacons": _median(r["final_beacons"] for r in cell),
                "entropy_series": "", "error": "",
            })

    order = {"run": 0, "baseline": 1, "aggregate": 2}
    rows.sort(key=lambda r: (order.get(r["kind"], 9), r["scenario"], r["n"],
                             r["seed"] if r["seed"] is not None else -1))
    csv_path = os.path.join(out_dir, "metrics.csv")
    tmp = csv_path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        _write_csv(rows, fh)
    os.replace(tmp, csv_path)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return 0


def _error_row(job: dict, error: str) -> dict:
    row = {k: None for k in CSV_FIELDS}
    row.update({"schema_version": CSV_SCHEMA, "kind": job["kind"],
                "scenario": job["scenario"], "n": job["n"], "seed": job["seed"],
                "entropy_series": "", "error": error})
    return row


def _execute_jobs(jobs, workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one_job, jobs))
    return [_run_one_job(j) for j in jobs]


def _write_entropy_series(samples, normalizer, path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "raw_bitm", "normalized"])
        for t, raw, n in samples:
            ceiling = normalizer(n) if n >= 2 else 0.0
            norm = raw / ceiling if ceiling > 0.0 else 0.0
            writer.writerow([_fmt(t), _fmt(raw), _fmt(norm)])
    os.replace(tmp, path)


# --- metrics --------------------------------------------------------------------


def cmd_metrics(args) -> int:
    window = tuple(args.window) if args.window else None
    rows = []
    for path in args.logs:
        log = EventLog.load(path)
        label = os.path.splitext(os.path.basename(path))[0]
        rows.append(metrics_row(log, kind="metrics", scenario=label, window=window))
    if args.out:
        tmp = args.out + ".tmp"
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            _write_csv(rows, fh)
        os.replace(tmp, args.out)
        print(f"wrote {args.out} ({len(rows)} rows)")
    else:
        buf = io.StringIO()
        _write_csv(rows, buf)
        sys.stdout.write(buf.getvalue())
    return 0


# --- render ---------------------------------------------------------------------


def cmd_render(args) -> int:
    from . import render  # lazy: matplotlib import is slow

    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    if args.plots:
        csv_path = args.path
        made = [render.plot_delay_vs_n(csv_path, os.path.join(out_dir, "delay_vs_n.svg"))]
        entropy_dir = args.entropy_dir or os.path.join(os.path.dirname(csv_path) or ".", "entropy")
        if os.path.isdir(entropy_dir):
            made.append(render.plot_entropy_over_time(
                entropy_dir, os.path.join(out_dir, "entropy_over_time.svg")))
        for path in made:
            print(f"wrote {path}")
        return 0
    if args.at_step is None:
        raise ConfigError("render needs either --at-step or --plots")
    log = EventLog.load(args.path)
    path = os.path.join(out_dir, f"frame_step{args.at_step:05d}.svg")
    render.render_frame(log, args.at_step, path)
    print(f"wrote {path}")
    return 0


# --- entry ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _CliParser(prog="beaconswarm",
                        description="Beacon-guided foraging swarm simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation and write its event log")
    p_run.add_argument("--config", help="run configuration JSON file")
    p_run.add_argument("--scenario", choices=BUILTIN_SCENARIOS,
                       help="bundled scenario instead of --config")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--n", type=int, help="override the swarm size")
    p_run.add_argument("--extension", choices=("on", "off"),
                       help="toggle the mobile-beacon extension")
    p_run.add_argument("--out", help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_batch = sub.add_parser("batch", help="run a (sizes x seeds x scenarios) sweep")
    p_batch.add_argument("--config", required=True, help="sweep configuration JSON file")
    p_batch.add_argument("--out", help="output directory")
    p_batch.add_argument("--workers", type=int, default=1,
                         help="parallel runs (default 1)")
    p_batch.set_defaults(func=cmd_batch)

    p_metrics = sub.add_parser("metrics", help="recompute metrics from event logs")
    p_metrics.add_argument("logs", nargs="+", help="event log files")
    p_metrics.add_argument("--window", nargs=2, type=float, metavar=("T0", "T1"),
                           help="seconds; default [t_conv, end]")
    p_metrics.add_argument("--out", help="CSV output path (default stdout)")
    p_metrics.set_defaults(func=cmd_metrics)

    p_render = sub.add_parser("render", help="render frames or summary plots")
    p_render.add_argument("path", help="event log (--at-step) or metrics CSV (--plots)")
    p_render.add_argument("--at-step", type=int, help="render one frame at this step")
    p_render.add_argument("--plots", action="store_true",
                          help="render delay and entropy summary plots from a sweep CSV")
    p_render.add_argument("--entropy-dir", help="directory of entropy series CSVs")
    p_render.add_argument("--out", help="output directory")
    p_render.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
