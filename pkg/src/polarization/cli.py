"""Command-line front end.

Commands ``optimize``, ``pip``, ``field`` and ``simulate`` each write
``data.csv``, ``summary.json`` and ``manifest.json`` into ``--out``.
``replay`` re-runs a manifest.  Exit codes: 0 success, 2 usage or config
error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    benefit_curve,
    bundled_configs,
    interaction_params,
    load_config,
    parse_value,
    resolve,
    sim_config,
)
from .equilibrium import MODELS, SWEEP_PARAMETERS, gradient_field, pip, sweep
from .simulation import RNG_ALGORITHM, run_ensemble

COMMANDS = ("optimize", "pip", "field", "simulate")
DESK_SCALE = {"N": 200, "ensemble_size": 100, "period": "auto", "total_events": "auto"}


class UsageError(ValueError):
    pass


def fmt(x) -> str:
    """Round-trip exact float text."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def parse_range(text, name):
    """``"a:b:k"`` (``k`` evenly spaced points) or a single value ``"a"``."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        lo, hi, k = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"{name}: expected 'min:max:points' or a single value, got {text!r}") from None
    if k < 1 or lo > hi or (k == 1 and lo != hi):
        raise UsageError(f"{name}: empty range {text!r}")
    return np.linspace(lo, hi, k)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _theta_grid(cfg):
    return np.linspace(cfg["theta_min"], cfg["theta_max"], cfg["theta_points"])


def cmd_optimize(cfg, opts, out):
    thetas = parse_range(opts["theta_range"], "--theta-range") if opts.get("theta_range") else _theta_grid(cfg)
    if opts.get("param_sweep"):
        name, _, rng = opts["param_sweep"].partition("=")
        if name not in SWEEP_PARAMETERS or not rng:
            raise UsageError(f"--param-sweep: expected NAME=min:max:points with NAME in {SWEEP_PARAMETERS}")
        values = parse_range(rng, "--param-sweep")
    elif cfg["sweep_param"] != "none":
        name = cfg["sweep_param"]
        values = np.linspace(cfg["sweep_min"], cfg["sweep_max"], cfg["sweep_points"])
    else:
        name, values = "q_out", np.array([cfg["q_o"]])
    res = sweep(name, values, thetas, cfg["model"], benefit_curve(cfg), interaction_params(cfg),
                mode=cfg["mode"], grid_resolution=cfg["resolution"], threads=opts.get("threads"))
    rows = []
    for i, y in enumerate(res.y_axis):
        for j, th in enumerate(res.x_axis):
            if res.mode == "optimal":
                rows.append((th, y, res.p_star[i, j]))
            else:
                rows.extend((th, y, p) for p in res.p_star[i, j])
    _write_csv(out / "data.csv", ["theta", "swept_param_value", "p_star"], rows)
    summary = {"parameter": name, "mode": res.mode, "model": res.model,
               "cells": int(res.y_axis.size * res.x_axis.size),
               "clamped_cells": int(res.clamped.sum())}
    if res.mode == "optimal":
        p = res.p_star
        summary["cells_at_zero"] = int(np.sum(np.abs(p) <= 1e-6))
        summary["cells_at_one"] = int(np.sum(np.abs(p - 1) <= 1e-6))
        summary["interior_cells"] = summary["cells"] - summary["cells_at_zero"] - summary["cells_at_one"]
    return summary


def cmd_pip(cfg, opts, out):
    theta = float(opts["theta"]) if opts.get("theta") is not None else cfg["theta"]
    grid = pip(theta, cfg["model"], benefit_curve(cfg), interaction_params(cfg), cfg["resolution"])
    rows = ((f, g, grid.sign[i, j]) for i, f in enumerate(grid.mutant_axis)
            for j, g in enumerate(grid.resident_axis))
    _write_csv(out / "data.csv", ["p_mutant", "p_resident", "sign"], rows)
    return {"model": cfg["model"], "theta": theta, "resolution": cfg["resolution"],
            "stable_strategies": grid.stable_strategies()}


def cmd_field(cfg, opts, out):
    thetas = parse_range(opts["theta_grid"], "--theta-grid") if opts.get("theta_grid") else _theta_grid(cfg)
    ps = parse_range(opts["p_grid"], "--p-grid") if opts.get("p_grid") else np.linspace(0, 1, cfg["p_points"])
    if np.any(ps < 0) or np.any(ps > 1):
        raise UsageError("--p-grid must lie in [0, 1]")
    fld = gradient_field(thetas, ps, cfg["model"], benefit_curve(cfg), interaction_params(cfg),
                         threads=opts.get("threads"))
    rows = ((th, p, fld.value[i, j]) for i, th in enumerate(fld.theta) for j, p in enumerate(fld.p))
    _write_csv(out / "data.csv", ["theta", "p", "gradient"], rows)
    return {"model": cfg["model"], "cells": int(fld.value.size),
            "positive_cells": int(np.sum(fld.value > 0)),
            "negative_cells": int(np.sum(fld.value < 0)),
            "min_gradient": float(fld.value.min()), "max_gradient": float(fld.value.max())}


def cmd_simulate(cfg, opts, out):
    sc = sim_config(cfg)
    stats = run_ensemble(sc, benefit_curve(cfg), interaction_params(cfg), initial=cfg["initial"],
                         threads=opts.get("threads"))
    rows = zip(stats.event_index, stats.theta, stats.mean_p, stats.std_p)
    _write_csv(out / "data.csv", ["event_index", "theta", "mean_p", "std_p"], rows)
    return {"model": sc.model, "total_events": sc.total_events, "ensemble_size": sc.ensemble_size,
            "final_mean_p": float(stats.mean_p[-1]), "max_mean_p": float(stats.mean_p.max()),
            "min_mean_p": float(stats.mean_p.min()), "rng": RNG_ALGORITHM}


HANDLERS = {"optimize": cmd_optimize, "pip": cmd_pip, "field": cmd_field, "simulate": cmd_simulate}


def resolve_command_config(opts):
    """Config file, then ``--desk-scale``, then ``--set``, ``--model`` and ``--seed``."""
    values = {}
    if opts.get("config"):
        base = load_config(opts["config"])
        values = {k: v for k, v in base.items()}
    if opts.get("desk_scale"):
        values.update(DESK_SCALE)
    for item in opts.get("set") or []:
        key, sep, text = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = parse_value(key.strip(), text.strip(), "--set: ")
    if opts.get("model"):
        values["model"] = opts["model"]
    if opts.get("seed") is not None:
        values["seed"] = parse_value("seed", str(opts["seed"]), "--seed: ")
    if opts.get("resolution") is not None:
        values["resolution"] = parse_value("resolution", str(opts["resolution"]), "--resolution: ")
    return resolve(values)


def execute(command, opts, out_dir):
    """Run ``command`` with CLI-style ``opts``; returns the manifest dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = resolve_command_config(opts)
    start = time.perf_counter()
    summary = HANDLERS[command](cfg, opts, out)
    _write_json(out / "summary.json", summary)
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "options": {k: v for k, v in opts.items() if k not in ("config", "set", "desk_scale", "seed", "model")},
        "seed": cfg["seed"],
        "rng": RNG_ALGORITHM,
        "outputs": ["data.csv", "summary.json"],
        "duration_s": time.perf_counter() - start,
    }
    _write_json(out / "manifest.json", manifest)
    return manifest


def replay(manifest_path, out_dir, threads=None):
    """Re-run a manifest; ``data.csv`` is reproduced byte for byte."""
    manifest = json.loads(Path(manifest_path).read_text())
    if manifest.get("command") not in COMMANDS:
        raise UsageError(f"manifest has unknown command {manifest.get('command')!r}")
    opts = dict(manifest.get("options", {}))
    if threads is not None:
        opts["threads"] = threads
    values = {k: v for k, v in manifest["config"].items()}
    cfg = resolve(values)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    summary = HANDLERS[manifest["command"]](cfg, opts, out)
    _write_json(out / "summary.json", summary)
    manifest = dict(manifest, config=cfg, duration_s=time.perf_counter() - start)
    _write_json(out / "manifest.json", manifest)
    return manifest


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="polarization", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help=f"config file or bundled name ({', '.join(bundled_configs())})")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--threads", type=int, default=os.cpu_count())
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--desk-scale", action="store_true",
                       help="N=200, ensemble 100, period 100N")

    p = sub.add_parser("optimize", help="optimal strategies over environment x parameter grids")
    common(p)
    p.add_argument("--theta-range", help="min:max:points")
    p.add_argument("--param-sweep", help=f"NAME=min:max:points, NAME in {', '.join(SWEEP_PARAMETERS)}")
    p.add_argument("--model", choices=MODELS)

    p = sub.add_parser("pip", help="pairwise invasibility plot")
    common(p)
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--theta", type=float)
    p.add_argument("--resolution", type=int)

    p = sub.add_parser("field", help="selection-gradient field over (theta, p)")
    common(p)
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--theta-grid", help="min:max:points")
    p.add_argument("--p-grid", help="min:max:points")

    p = sub.add_parser("simulate", help="ensemble of individual-based simulations")
    common(p)
    p.add_argument("--model", choices=MODELS)

    p = sub.add_parser("replay", help="re-run a manifest.json")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=os.cpu_count())
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            replay(args.manifest, args.out, args.threads)
        else:
            opts = {k: v for k, v in vars(args).items() if k not in ("command", "out")}
            execute(args.command, opts, args.out)
    except (ConfigError, UsageError) as exc:
        print(f"polarization {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"polarization {args.command}: runtime error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
