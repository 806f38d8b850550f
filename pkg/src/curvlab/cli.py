"""curvlab command line: run configs, list bundled examples, print the version.

Exit codes: 0 consistent / holds, 2 inconsistent / fails, 3 inconclusive,
1 usage or config error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .model import CurvlabError
from .problems import ANALYSES, EXAMPLES, EXIT_CODES, Numerics, analyze, build_example, build_inline

CSV_COLUMNS = ("radius", "l1_norm", "ratio", "sampler_tag")

_NUMBER_LIST = {"type": "array", "items": {"type": "number"}}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem"],
    "properties": {
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "example": {"type": "string", "enum": sorted(EXAMPLES)},
                "params": {"type": "object"},
                "inline": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["dim", "set", "objective", "point"],
                    "properties": {
                        "name": {"type": "string"},
                        "dim": {"type": "integer", "minimum": 1},
                        "set": {"type": "object", "required": ["type"]},
                        "objective": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["value", "grad", "hess"],
                            "properties": {
                                "value": {"type": "string"},
                                "grad": {"type": "array", "items": {"type": "string"}},
                                "hess": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
                            },
                        },
                        "point": _NUMBER_LIST,
                        "multiplier": _NUMBER_LIST,
                    },
                },
            },
            "oneOf": [{"required": ["example"]}, {"required": ["inline"]}],
        },
        "analysis": {"type": "string", "enum": list(ANALYSES)},
        "seed": {"type": "integer", "minimum": 0},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"cells": {"type": "integer", "minimum": 2}},
        },
        "numerics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t0": {"type": "number", "exclusiveMinimum": 0},
                "k_max": {"type": "integer", "minimum": 2},
                "restarts": {"type": "integer", "minimum": 1},
                "n_directions": {"type": "integer", "minimum": 0},
                "samples_per_radius": {"type": "integer", "minimum": 1},
                "eps_schedule": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "curvature_method": {"type": "string", "enum": ["auto", "closed_form", "brute_force"]},
                "directions": {"type": "array", "items": _NUMBER_LIST},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "report": {"type": "string"},
                "samples": {"type": "string"},
            },
        },
    },
}

DEFAULT_NUMERICS = {
    "t0": 0.1,
    "k_max": 20,
    "restarts": 16,
    "n_directions": 16,
    "samples_per_radius": 64,
    "curvature_method": "auto",
}


class ConfigError(Exception):
    pass


def bundled_config_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("curvlab").joinpath("configs").iterdir() if p.name.endswith(".json"))


def _read_config(ref: str) -> tuple[dict, str]:
    path = Path(ref)
    if path.is_file():
        text, source = path.read_text(), str(path)
    else:
        stem = path.name[:-5] if path.name.endswith(".json") else path.name
        res = resources.files("curvlab").joinpath("configs", f"{stem}.json")
        if not res.is_file():
            raise ConfigError(f"{ref}: no such file and no bundled config named {stem!r}")
        text, source = res.read_text(), f"bundled:{stem}"
    try:
        return json.loads(text), source
    except json.JSONDecodeError as err:
        raise ConfigError(f"{source}: line {err.lineno}, column {err.colno}: {err.msg}") from None


def _apply_set(cfg: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set {key}: {p} is not an object")
    node[parts[-1]] = value


def resolve_config(raw: dict, overrides: list[str] = ()) -> dict:
    """Apply overrides, validate strictly and inject defaults (seed included)."""
    cfg = copy.deepcopy(raw)
    for item in overrides:
        _apply_set(cfg, item)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"{where}: {e.message}")
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))
    cfg.setdefault("analysis", "full")
    cfg.setdefault("seed", 0)
    num = cfg.setdefault("numerics", {})
    for k, v in DEFAULT_NUMERICS.items():
        num.setdefault(k, v)
    out = cfg.setdefault("output", {})
    out.setdefault("dir", "curvlab_out")
    out.setdefault("report", "report.json")
    out.setdefault("samples", "samples.csv")
    return cfg


def build_problem(cfg: dict):
    prob = cfg["problem"]
    if "inline" in prob:
        return build_inline(prob["inline"])
    params = dict(prob.get("params", {}))
    if "grid" in cfg and "cells" in cfg["grid"]:
        params["cells"] = cfg["grid"]["cells"]
    return build_example(prob["example"], params)


def numerics_from(cfg: dict, workers: int | None = None) -> Numerics:
    n = cfg["numerics"]
    eps = n.get("eps_schedule")
    return Numerics(
        seed=cfg["seed"],
        t0=n["t0"],
        k_max=n["k_max"],
        restarts=n["restarts"],
        workers=workers,
        n_directions=n["n_directions"],
        samples_per_radius=n["samples_per_radius"],
        eps_schedule=None if eps is None else tuple(eps),
        curvature_method=n["curvature_method"],
        directions=tuple(tuple(d) for d in n.get("directions", ())),
    )


def _clean(obj):
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats labelled."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("+infinity" if v > 0 else "-infinity")
    return obj


def run_config(cfg: dict, workers: int | None = None) -> tuple[dict, list]:
    """Deterministic report payload and CSV rows for a resolved config."""
    problem = build_problem(cfg)
    try:
        payload, growth = analyze(problem, cfg["analysis"], numerics_from(cfg, workers))
    except CurvlabError as err:
        payload = {
            "fonc": None,
            "ndc": None,
            "curvature": [],
            "snc": [],
            "ssc": None,
            "growth": None,
            "verdict": "inconclusive",
            "details": f"analysis error: {err}",
            "diagnostics": {"error": type(err).__name__},
        }
        growth = None
    report = {"config_echo": cfg, **payload}
    rows = growth.csv_rows() if growth is not None else []
    return _clean(report), rows


def _threads() -> int | None:
    raw = os.environ.get("CURVLAB_THREADS")
    if not raw:
        return None
    try:
        return max(int(raw), 1)
    except ValueError:
        raise ConfigError(f"CURVLAB_THREADS must be an integer, got {raw!r}") from None


def cmd_run(args) -> int:
    try:
        raw, source = _read_config(args.config)
        cfg = resolve_config(raw, args.set or [])
        workers = _threads()
        if args.out:
            cfg["output"]["dir"] = args.out
        start = time.time()
        report, rows = run_config(cfg, workers)
    except (ConfigError, CurvlabError) as err:
        print(f"curvlab: {err}", file=sys.stderr)
        return 1
    out_dir = Path(cfg["output"]["dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    report["metadata"] = {
        "version": __version__,
        "source": source,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "runtime_s": round(time.time() - start, 3),
        "threads": workers,
    }
    (out_dir / cfg["output"]["report"]).write_text(json.dumps(report, indent=2, allow_nan=False) + "\n")
    with open(out_dir / cfg["output"]["samples"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([repr(float(r[0])), repr(float(r[1])), repr(float(r[2])), r[3]])
    print(f"{report['verdict']}: {report['details']}")
    print(f"report written to {out_dir / cfg['output']['report']}")
    return EXIT_CODES[report["verdict"]]


def cmd_list(args) -> int:
    rows = [{"name": e.name, "topic": e.topic, "config": f"{e.name}.json"} for e in EXAMPLES.values()]
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        width = max(len(r["name"]) for r in rows)
        for r in rows:
            print(f"{r['name']:<{width}}  {r['topic']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an analysis from a JSON config")
    run.add_argument("config", help="config file, or the name of a bundled config")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry (dotted key)")
    run.add_argument("--out", help="output directory (overrides output.dir)")
    run.set_defaults(func=cmd_run)
    ls = sub.add_parser("list-examples", help="list bundled examples")
    ls.add_argument("--json", action="store_true", help="machine-readable listing")
    ls.set_defaults(func=cmd_list)
    ver = sub.add_parser("version", help="print the version")
    ver.set_defaults(func=lambda a: print(__version__) or 0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
