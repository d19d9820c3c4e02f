"""Flat ``key = value`` configuration files.

One key per line, ``#`` starts a comment.  Model keys use the conventional
parameter symbols (``B_i``, ``B_o``, ``q_i``, ``q_o``, ``n``, ``N``, ``h``,
``r``, ``sigma``, ``mu``); the remaining keys configure the environment
schedule, the simulation and the analysis grids.  Unknown keys, unparsable
values and out-of-range values are errors.

Defaults are the baseline parameter table.  Note the baseline steepness and
slope (``h = 2``, ``r = 0.01``) differ from the library defaults of
:class:`~polarization.model.BenefitCurve`; the bundled configs set
them explicitly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable

from .equilibrium import MODELS, SWEEP_PARAMETERS
from .model import POWER_CURVATURE, SIGMOID_LINEAR, LINEAR, BenefitCurve, InteractionParams
from .simulation import (
    EXPECTED,
    GLOBAL_UNIFORM,
    GROUPS_FIXED,
    GROUPS_RESHUFFLE,
    LOCAL_STEP,
    REALIZED,
    EnvironmentSchedule,
    SimConfig,
)

__all__ = ["ConfigError", "KEYS", "DEFAULTS", "load_config", "parse_config", "resolve",
           "bundled_configs", "find_config", "interaction_params", "benefit_curve",
           "sim_config", "format_value"]


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key."""


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    check: Callable[[Any], bool] = lambda v: True
    bounds: str = ""


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError("not an integer")
    return int(v)


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return s
    return parse


def _initial(s):
    return s if s == "random" else _float(s)


def _auto_or(parse):
    def inner(s):
        return s if s == "auto" else parse(s)
    return inner


def _unit(v):
    return 0.0 <= v <= 1.0


KEYS: dict[str, Key] = {
    # interaction game and baseline table
    "B_i": Key(_float, 0.5, lambda v: v > 0, "> 0"),
    "B_o": Key(_float, 1.0, lambda v: v > 0, "> 0"),
    "q_i": Key(_float, 1.0, _unit, "[0, 1]"),
    "q_o": Key(_float, 0.6, _unit, "[0, 1]"),
    "n": Key(_int, 5, lambda v: v >= 1, ">= 1"),
    "N": Key(_int, 1000, lambda v: v >= 2, ">= 2"),
    "h": Key(_float, 2.0, lambda v: v > 0, "> 0"),
    "r": Key(_float, 0.01, lambda v: v >= 0, ">= 0"),
    "sigma": Key(_float, 10.0, lambda v: v >= 0, ">= 0"),
    "mu": Key(_float, 0.0001, _unit, "[0, 1]"),
    # model and benefit curve
    "model": Key(_choice(*MODELS), "fixed"),
    "curve": Key(_choice(SIGMOID_LINEAR, POWER_CURVATURE, LINEAR), SIGMOID_LINEAR),
    "beta": Key(_float, 0.0),
    # environment schedule
    "schedule": Key(_choice("sinusoid", "constant"), "sinusoid"),
    "theta": Key(_float, 0.0),
    "amplitude": Key(_float, 1.0),
    "period": Key(_auto_or(_float), "auto", lambda v: v == "auto" or v > 0, "> 0 or auto"),
    "phase": Key(_float, 0.0),
    # simulation
    "kernel": Key(_choice(GLOBAL_UNIFORM, LOCAL_STEP), GLOBAL_UNIFORM),
    "delta": Key(_float, 0.01, lambda v: 0 < v <= 1, "(0, 1]"),
    "payoff_mode": Key(_choice(REALIZED, EXPECTED), REALIZED),
    "group_mode": Key(_choice(GROUPS_FIXED, GROUPS_RESHUFFLE), GROUPS_FIXED),
    "initial": Key(_initial, "random", lambda v: v == "random" or _unit(v), "[0, 1] or random"),
    "total_events": Key(_auto_or(_int), "auto", lambda v: v == "auto" or v >= 1, ">= 1 or auto"),
    "checkpoints": Key(_int, 200, lambda v: v >= 1, ">= 1"),
    "ensemble_size": Key(_int, 1000, lambda v: v >= 1, ">= 1"),
    "seed": Key(_int, 0, lambda v: 0 <= v < 2**64, "[0, 2^64)"),
    # analysis grids
    "theta_min": Key(_float, -1.0),
    "theta_max": Key(_float, 1.0),
    "theta_points": Key(_int, 201, lambda v: v >= 1, ">= 1"),
    "p_points": Key(_int, 201, lambda v: v >= 1, ">= 1"),
    "resolution": Key(_int, 201, lambda v: v >= 8, ">= 8"),
    "mode": Key(_choice("optimal", "stable_set"), "optimal"),
    "sweep_param": Key(_choice("none", *SWEEP_PARAMETERS), "none"),
    "sweep_min": Key(_float, 0.5),
    "sweep_max": Key(_float, 1.0),
    "sweep_points": Key(_int, 101, lambda v: v >= 1, ">= 1"),
}

DEFAULTS = {name: key.default for name, key in KEYS.items()}


def _check(name, value, where):
    key = KEYS[name]
    if not key.check(value):
        raise ConfigError(f"{where}{name} = {value!r} out of range {key.bounds}")
    return value


def parse_value(name, text, where=""):
    if name not in KEYS:
        raise ConfigError(f"{where}unknown key {name!r}")
    try:
        value = KEYS[name].parse(text)
    except ValueError as exc:
        raise ConfigError(f"{where}cannot parse value {text!r} for {name!r}: {exc}") from None
    return _check(name, value, where)


def parse_config(text, source="<config>") -> dict:
    """Parse config text into a dict of explicitly set keys."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}: "
        if "=" not in line:
            raise ConfigError(f"{where}expected 'key = value', got {raw.strip()!r}")
        name, value = (part.strip() for part in line.split("=", 1))
        if name in values:
            raise ConfigError(f"{where}duplicate key {name!r}")
        values[name] = parse_value(name, value, where)
    return values


def resolve(values=None) -> dict:
    """Fill defaults and check cross-key constraints."""
    cfg = dict(DEFAULTS)
    for name, value in (values or {}).items():
        if name not in KEYS:
            raise ConfigError(f"unknown key {name!r}")
        cfg[name] = _check(name, value, "")
    if cfg["theta_min"] > cfg["theta_max"]:
        raise ConfigError("theta_min must not exceed theta_max")
    return cfg


def bundled_configs() -> list[str]:
    root = resources.files("polarization") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def find_config(spec) -> Path:
    """Resolve a path, or the name of a bundled config (with or without ``.cfg``)."""
    path = Path(spec)
    if path.is_file():
        return path
    name = path.name if path.name.endswith(".cfg") else path.name + ".cfg"
    bundled = resources.files("polarization") / "configs" / name
    if str(spec) == path.name and bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"config file {str(spec)!r} not found (bundled: {', '.join(bundled_configs())})")


def load_config(path) -> dict:
    """Read, validate and resolve a config file."""
    path = find_config(path)
    return resolve(parse_config(path.read_text(), str(path)))


def format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def interaction_params(cfg) -> InteractionParams:
    return InteractionParams(b_in=cfg["B_i"], b_out=cfg["B_o"], q_in=cfg["q_i"],
                             q_out=cfg["q_o"], n=cfg["n"])


def benefit_curve(cfg) -> BenefitCurve:
    return BenefitCurve(cfg["curve"], steepness=cfg["h"], slope=cfg["r"], curvature_exp=cfg["beta"])


def period_of(cfg) -> float:
    return 100.0 * cfg["N"] if cfg["period"] == "auto" else float(cfg["period"])


def schedule(cfg) -> EnvironmentSchedule:
    if cfg["schedule"] == "constant":
        return EnvironmentSchedule.constant(cfg["theta"])
    return EnvironmentSchedule.sinusoid(cfg["amplitude"], period_of(cfg), cfg["phase"])


def sim_config(cfg) -> SimConfig:
    total = cfg["total_events"]
    return SimConfig(
        population_size=cfg["N"],
        selection_strength=cfg["sigma"],
        mutation_rate=cfg["mu"],
        mutation_kernel=cfg["kernel"],
        mutation_step=cfg["delta"],
        model=cfg["model"],
        payoff_mode=cfg["payoff_mode"],
        schedule=schedule(cfg),
        total_events=int(round(period_of(cfg))) if total == "auto" else total,
        checkpoints=cfg["checkpoints"],
        ensemble_size=cfg["ensemble_size"],
        seed=cfg["seed"],
        group_mode=cfg["group_mode"],
    )
