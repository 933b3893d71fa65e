"""Command-line scenario runner.

    phasemap run --config cfg.json [--scenario NAME] [--output PATH]
                 [--format json|text] [--seed N] [--steps N] [--timing]
                 [--csv-dir DIR]

Exit status: 0 when every check passes, 1 when any check fails, 2 on a
configuration or usage error. Without ``--output`` the report goes to
``$PHASEMAP_OUTPUT_DIR/<scenario>.<format>`` when that variable is set and to
stdout otherwise.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

from .errors import ConfigError
from .scenarios import SCENARIOS, Checks

CONFIG_KEYS = {"scenario", "n", "seed", "steps", "tolerances", "parameters"}
OUTPUT_ENV = "PHASEMAP_OUTPUT_DIR"


def _int(value, key, minimum):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{key}: expected an integer >= {minimum}, got {value!r}")
    return value


def load_config(source, overrides=None) -> dict:
    """Parse and validate a config from a path or a JSON string/dict.

    ``overrides`` (scenario, seed, steps) replace config values. Defaults are
    filled in so the returned dict is the complete effective config.
    """
    if isinstance(source, dict):
        raw = dict(source)
    else:
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, val in (overrides or {}).items():
        if val is not None:
            raw[key] = val
    name = raw.get("scenario")
    if name not in SCENARIOS:
        raise ConfigError(f"scenario: expected one of {sorted(SCENARIOS)}, got {name!r}")
    _, tol_defaults, param_keys, base = SCENARIOS[name]
    cfg = {"scenario": name,
           "n": _int(raw.get("n", base["n"]), "n", 1),
           "seed": _int(raw.get("seed", 0), "seed", 0),
           "steps": _int(raw.get("steps", base["steps"]), "steps", 2)}
    tols = raw.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ConfigError("tolerances: expected an object")
    bad = set(tols) - set(tol_defaults)
    if bad:
        raise ConfigError(f"tolerances: unknown keys {sorted(bad)} (allowed: {sorted(tol_defaults)})")
    merged = dict(tol_defaults)
    for key, val in tols.items():
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val) or val < 0:
            raise ConfigError(f"tolerances.{key}: expected a non-negative number, got {val!r}")
        merged[key] = float(val)
    params = raw.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("parameters: expected an object")
    bad = set(params) - param_keys
    if bad:
        raise ConfigError(f"parameters: unknown keys {sorted(bad)} for {name} (allowed: {sorted(param_keys)})")
    cfg["tolerances"] = merged
    cfg["parameters"] = params
    return cfg


def run(cfg: dict, timing=False):
    """Execute a validated config; returns ``(report, csv_files)``."""
    fn = SCENARIOS[cfg["scenario"]][0]
    checks = Checks(cfg["tolerances"])
    csv_out = {}
    start = time.perf_counter()
    fn(cfg, checks, csv_out)
    report = {"scenario": cfg["scenario"], "config": cfg, "checks": checks.items,
              "passed": bool(checks.items) and all(c["pass"] for c in checks.items)}
    if timing:
        report["wall_time_s"] = time.perf_counter() - start
    return report, csv_out


def _encode(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(_encode(x) for x in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(x, indent + 1) for x in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float) or hasattr(obj, "__float__") and not isinstance(obj, str):
        val = float(obj)
        if not math.isfinite(val):
            return json.dumps(str(val))
        text = format(val, ".17g")
        return text if any(c in text for c in ".en") else text + ".0"
    return json.dumps(obj)


def to_json(report) -> str:
    """Stable JSON: sorted keys, two-space indent, floats with 17 significant digits."""
    return _encode(report) + "\n"


def to_text(report) -> str:
    lines = [f"scenario: {report['scenario']}", f"overall:  {'PASS' if report['passed'] else 'FAIL'}", ""]
    lines.append(f"{'check':<44} {'value':>24} {'tolerance':>14}  result")
    for c in report["checks"]:
        val = c["value"]
        val = format(val, ".6e") if isinstance(val, float) else str(val)
        tol = c["tolerance"]
        tol = ("-" if tol is None else f"[{tol[0]:g}, {tol[1]:g}]" if isinstance(tol, list)
               else f"{c['comparison']} {tol:.1e}" if c["comparison"] != "info" else f"({tol:.1e})")
        res = "info" if c["comparison"] == "info" else ("PASS" if c["pass"] else "FAIL")
        lines.append(f"{c['name']:<44} {val:>24} {tol:>14}  {res}")
    if "wall_time_s" in report:
        lines.append(f"\nwall time: {report['wall_time_s']:.3f} s")
    return "\n".join(lines) + "\n"


def emit(report, fmt="json", path=None):
    text = to_json(report) if fmt == "json" else to_text(report)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def _parser():
    ap = argparse.ArgumentParser(prog="phasemap", description="Run phase-space mapping verification scenarios.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a JSON config")
    r.add_argument("--config", required=True, help="path to the JSON config")
    r.add_argument("--scenario", choices=sorted(SCENARIOS), help="override the config scenario")
    r.add_argument("--output", help="report path (default: $%s/<scenario>.<format> or stdout)" % OUTPUT_ENV)
    r.add_argument("--format", choices=("json", "text"), default="json")
    r.add_argument("--seed", type=int)
    r.add_argument("--steps", type=int)
    r.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical reruns)")
    r.add_argument("--csv-dir", help="directory for CSV trajectories produced by the scenario")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {"scenario": args.scenario, "seed": args.seed, "steps": args.steps})
    except (ConfigError, OSError) as exc:
        print(f"phasemap: {exc}", file=sys.stderr)
        return 2
    try:
        report, csv_out = run(cfg, timing=args.timing)
    except ConfigError as exc:
        print(f"phasemap: {exc}", file=sys.stderr)
        return 2
    path = args.output
    if path is None and os.environ.get(OUTPUT_ENV):
        path = os.path.join(os.environ[OUTPUT_ENV], f"{cfg['scenario']}.{args.format}")
    try:
        emit(report, args.format, path)
        if args.csv_dir:
            out = Path(args.csv_dir)
            out.mkdir(parents=True, exist_ok=True)
            for name, text in sorted(csv_out.items()):
                (out / f"{name}.csv").write_text(text)
    except OSError as exc:
        print(f"phasemap: cannot write output: {exc}", file=sys.stderr)
        return 2
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
