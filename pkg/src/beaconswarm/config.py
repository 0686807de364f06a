"""Run and sweep configuration: JSON schema, bundled scenarios, overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from typing import Optional

from .engine import arena_from_dict, arena_to_dict
from .extensions import ExtensionParams
from .geometry import Arena
from .model import SimParams

BUILTIN_SCENARIOS = ("empty", "central-obstacle")


class ConfigError(Exception):
    """Configuration file or flag problem; maps to exit code 1."""


@dataclass(frozen=True)
class RunConfig:
    params: SimParams
    arena: Arena
    extensions: ExtensionParams
    output_dir: Optional[str] = None
    snapshot_every: int = 1

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_json_dict(),
            "arena": arena_to_dict(self.arena),
            "extensions": self.extensions.to_json_dict(),
            "output_dir": self.output_dir,
            "snapshot_every": self.snapshot_every,
        }


def run_config_from_dict(data: dict, source: str = "<config>") -> RunConfig:
    try:
        params = SimParams.from_json_dict(data.get("params", {}))
        arena = arena_from_dict(data["arena"])
        extensions = ExtensionParams.from_json_dict(data.get("extensions", {}))
        snapshot_every = int(data.get("snapshot_every", 1))
        if snapshot_every < 1:
            raise ValueError("snapshot_every must be at least 1")
        return RunConfig(params=params, arena=arena, extensions=extensions,
                         output_dir=data.get("output_dir"),
                         snapshot_every=snapshot_every)
    except KeyError as e:
        raise ConfigError(f"{source}: missing required section {e.args[0]!r}") from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{source}: {e}") from e


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror or e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e


def load_run_config(path: str) -> RunConfig:
    return run_config_from_dict(_load_json(path), source=path)


def scenario_config(name: str) -> RunConfig:
    """Bundled scenario configuration shipped with the package."""
    if name not in BUILTIN_SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; available: {', '.join(BUILTIN_SCENARIOS)}")
    text = resources.files("beaconswarm").joinpath(f"scenarios/{name}.json").read_text("utf-8")
    return run_config_from_dict(json.loads(text), source=f"scenario:{name}")


def scenario_arena(name: str) -> Arena:
    return scenario_config(name).arena


def apply_overrides(config: RunConfig, *, seed: Optional[int] = None,
                    n: Optional[int] = None, extension: Optional[bool] = None,
                    output_dir: Optional[str] = None) -> tuple:
    """Flag-level overrides; returns the new config plus a {field: source}
    map so the run header can show where each effective value came from."""
    sources = {"seed": "config", "n_agents": "config", "extension": "config",
               "output_dir": "config"}
    params = config.params
    extensions = config.extensions
    out_dir = config.output_dir
    if seed is not None:
        params = replace(params, seed=seed)
        sources["seed"] = "flag"
    if n is not None:
        params = replace(params, n_agents=n)
        sources["n_agents"] = "flag"
    if extension is not None:
        extensions = replace(extensions, enabled=extension)
        sources["extension"] = "flag"
    if output_dir is not None:
        out_dir = output_dir
        sources["output_dir"] = "flag"
    return RunConfig(params, config.arena, extensions, out_dir,
                     config.snapshot_every), sources


DEFAULT_SWEEP_SIZES = (49, 73, 100, 120, 157)
DEFAULT_SWEEP_SEEDS = tuple(range(12))


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    sizes: tuple = DEFAULT_SWEEP_SIZES
    seeds: tuple = DEFAULT_SWEEP_SEEDS
    scenarios: tuple = BUILTIN_SCENARIOS

    def __post_init__(self):
        if not self.sizes:
            raise ConfigError("sweep needs at least one swarm size")
        if not self.seeds:
            raise ConfigError("sweep needs at least one seed")
        if not self.scenarios:
            raise ConfigError("sweep needs at least one scenario")
        for s in self.scenarios:
            if s not in BUILTIN_SCENARIOS:
                raise ConfigError(f"unknown scenario {s!r} in sweep")


def load_sweep_config(path: str) -> SweepConfig:
    data = _load_json(path)
    if "base" in data:
        base = run_config_from_dict(data["base"], source=f"{path}#base")
    else:
        base = scenario_config(data.get("base_scenario", "empty"))
    seeds = data.get("seeds")
    if seeds is None:
        seeds = tuple(range(int(data.get("n_seeds", 12))))
    return SweepConfig(
        base=base,
        sizes=tuple(data.get("sizes", DEFAULT_SWEEP_SIZES)),
        seeds=tuple(seeds),
        scenarios=tuple(data.get("scenarios", BUILTIN_SCENARIOS)),
    )
