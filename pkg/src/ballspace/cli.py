"""Command-line driver.

    ballspace COMMAND [--config FILE] [--json TEXT] [--seed N] [--budget N]
                      [--grid-dirs N] [--grid-radii R,R,...] [--format json|csv]
                      [--out FILE] [--quiet] [--threads N]

A report is one header line carrying the timestamp, then a body that depends
only on the resolved configuration.  Any report can be fed back through
``--config`` to recompute the same numbers.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .distance import DISTANCES, distance_estimate
from .dsl import (
    parse_atomic,
    parse_function,
    parse_measure,
    parse_params,
    parse_series,
    parse_space,
    series_to_dsl,
    space_to_dsl,
)
from .errors import BallspaceError, DSLError
from .gap import dyadic_block_sum, gap_verdict_N, gap_verdict_hardy, holder_block_check
from .holo import Polynomial, atomic_synthesize, atomic_threshold
from .integrate import DEFAULT_BALL_BUDGET, set_threads
from .lattice import DEFAULT_CAP, atomic_carleson_check, generate_lattice
from .spaces import (
    DEFAULT_RADII,
    FORMS,
    LADDER,
    GridSpec,
    NSpace,
    carleson_norm,
    decay_profile,
    growth_norm,
    korenblum_profile,
    membership_report,
    moebius_norms,
    norm,
)

COMMANDS = ("norm", "membership", "gap", "lattice", "atomic", "carleson", "distance", "profile", "equivalence")
EXIT_OK, EXIT_INVALID, EXIT_UNRELIABLE, EXIT_USAGE = 0, 2, 3, 64
HEADER_PREFIX = "# ballspace report"
CSV_COLUMNS = ("space", "function_id", "value", "std_error", "argmax", "verdict")

USAGE = f"usage: ballspace {{{','.join(COMMANDS)}}} [--config FILE] [--json TEXT] [options]\n"


# ---------------------------------------------------------------- serialization


def clean(value):
    """JSON-ready copy with floats rounded to 12 significant digits."""
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [clean(float(value.real)), clean(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.12g}")
    return value


def render_json(config: dict, result) -> str:
    body = {"config": config, "result": result}
    return json.dumps(clean(body), sort_keys=True, indent=2) + "\n"


def render_csv(config: dict, rows: list) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(clean(config), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        cells = []
        for key in CSV_COLUMNS:
            v = clean(row.get(key))
            cells.append("" if v is None else (json.dumps(v, sort_keys=True) if isinstance(v, (list, dict)) else v))
        writer.writerow(cells)
    return buf.getvalue()


def header_line() -> str:
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"{HEADER_PREFIX} generated {stamp} version {__version__}\n"


def load_config(text: str, source: str) -> dict:
    """A config object, or a previous report (JSON or CSV) whose embedded config is reused."""
    lines = text.splitlines()
    if lines and lines[0].startswith(HEADER_PREFIX):
        lines = lines[1:]
    for line in lines:
        if line.startswith("# config: "):
            return _decode(line[len("# config: "):], source)
    data = _decode("\n".join(lines), source)
    if not isinstance(data, dict):
        raise DSLError("the configuration must be a JSON object", source)
    if "config" in data and "result" in data:
        return data["config"]
    return data


def _decode(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DSLError(f"line {exc.lineno} column {exc.colno}: {exc.msg}", source) from None


# ---------------------------------------------------------------- config resolution


def _grid(config: dict) -> GridSpec:
    g = config.get("grid") or {}
    if not isinstance(g, dict):
        raise DSLError("expected an object", "grid")
    radii = g.get("radii", list(DEFAULT_RADII))
    if not isinstance(radii, list) or not all(isinstance(r, (int, float)) and 0 <= r < 1 for r in radii) or not radii:
        raise DSLError("radii must be a nonempty list of numbers in [0, 1)", "grid.radii")
    dirs = g.get("dirs")
    if dirs is not None and (not isinstance(dirs, int) or dirs < 1):
        raise DSLError("dirs must be a positive integer", "grid.dirs")
    return GridSpec(dirs, tuple(float(r) for r in radii), bool(g.get("refine", True)))


def _functions(config: dict) -> list:
    """[(id, payload)] from 'function' or 'functions'."""
    if "functions" in config:
        items = config["functions"]
        if not isinstance(items, list) or not items:
            raise DSLError("expected a nonempty list", "functions")
        out = []
        for i, item in enumerate(items):
            if isinstance(item, dict) and "function" in item:
                out.append((str(item.get("id", f"f{i}")), item["function"], f"functions[{i}].function"))
            else:
                out.append((f"f{i}", item, f"functions[{i}]"))
        return out
    if "function" not in config:
        raise DSLError("missing field 'function'", "config")
    return [(str(config.get("function_id", "f0")), config["function"], "function")]


def _require(config, key):
    if key not in config:
        raise DSLError(f"missing field {key!r}", "config")
    return config[key]


def _estimate_row(space, fid, est) -> dict:
    d = est.to_dict()
    return {"space": d["space"] or getattr(space, "label", ""), "function_id": fid, "value": d["value"],
            "std_error": d["std_error"], "argmax": d["argmax"], "verdict": d["verdict"], "reliable": d["reliable"]}


# ---------------------------------------------------------------- commands


def cmd_norm(config, budget, seed, grid):
    spaces = config.get("spaces") or [_require(config, "space")]
    rows = []
    for si, sp in enumerate(spaces):
        space = parse_space(sp, f"spaces[{si}]" if "spaces" in config else "space")
        for fid, payload, path in _functions(config):
            f = parse_function(payload, path)
            rows.append(_estimate_row(space, fid, norm(space, f, budget, seed, grid)))
    return {"rows": rows}, rows, all(not r["reliable"] for r in rows)


def cmd_membership(config, budget, seed, grid):
    space = parse_space(_require(config, "space"))
    ladder = tuple(config.get("ladder", LADDER))
    rows, out = [], []
    for fid, payload, path in _functions(config):
        rep = membership_report(space, parse_function(payload, path), budget, seed, grid, ladder=ladder)
        out.append(dict(rep.to_dict(), function_id=fid))
        last = rep.evidence[-1] if rep.evidence else {}
        rows.append({"space": space.label, "function_id": fid, "value": last.get("value"),
                     "std_error": last.get("std_error"), "argmax": last.get("argmax"), "verdict": rep.verdict})
    return {"reports": out}, rows, all(r["verdict"] == "inconclusive" for r in out)


def cmd_gap(config, budget, seed, grid):
    series_obj = _require(config, "series")
    out, rows = [], []
    if "hardy" in config:
        h = config["hardy"]
        if not isinstance(h, dict) or "alpha" not in h or "beta" not in h:
            raise DSLError("needs 'alpha' and 'beta'", "hardy")
        series = parse_series(series_obj, "series", float(h["alpha"]))
        rec = gap_verdict_hardy(series, float(h["alpha"]), float(h["beta"]))
        out.append(dict(rec, hardy={"alpha": h["alpha"], "beta": h["beta"]}))
        rows.append({"space": f"H^{h['alpha']}_{h['beta']}", "function_id": "series", "verdict": rec["verdict"]})
        return {"verdicts": out, "series": series_to_dsl(series)}, rows, False
    plist = config.get("params_list") or [_require(config, "params")]
    use = config.get("use", "M")
    for i, pobj in enumerate(plist):
        params = parse_params(pobj, f"params_list[{i}]" if "params_list" in config else "params")
        series = parse_series(series_obj, "series", params.p)
        dyadic = dyadic_block_sum(series, params, use)
        rec = gap_verdict_N(series, params)
        holder = holder_block_check(series, params.p) if series.sup_norms is not None else None
        out.append(dict(dyadic.to_dict(), params=params.to_dict(), membership=rec["verdict"],
                        membership_reason=rec["reason"], holder=holder))
        rows.append({"space": f"N({params.p:g},{params.q:g},{params.s:g})", "function_id": "series",
                     "verdict": dyadic.verdict})
    return {"verdicts": out}, rows, False


def cmd_lattice(config, budget, seed, grid):
    n = int(_require(config, "n"))
    r = float(_require(config, "r"))
    cap = float(config.get("radius_cap", DEFAULT_CAP))
    lat = generate_lattice(n, r, cap, seed)
    checks = {"size": len(lat), "min_separation": lat.check_separation(),
              "covering": lat.check_covering(int(config.get("probes", 10_000)), seed + 1)}
    row = {"space": f"lattice(n={n},r={r:g},cap={cap:g})", "function_id": "", "value": len(lat),
           "verdict": "ok" if checks["min_separation"] >= r / 2 - 1e-9 and checks["covering"]["covered"] else "failed"}
    return {"lattice": lat.to_json(), "checks": checks}, [row], False


def cmd_atomic(config, budget, seed, grid):
    data = parse_atomic(_require(config, "atomic"))
    params = parse_params(_require(config, "params"))
    f = atomic_synthesize(data, params)
    est = atomic_carleson_check(data, params, grid)
    out = {"carleson": est.to_dict(), "threshold": atomic_threshold(params),
           "exponent_ok": data.b > atomic_threshold(params)}
    if config.get("growth", True) and len(data.coeffs):
        out["growth_norm"] = growth_norm(f, params)
    row = _estimate_row(None, "atomic", est)
    return out, [row], not est.reliable


def cmd_carleson(config, budget, seed, grid):
    mu = parse_measure(_require(config, "measure"))
    exponent = float(_require(config, "exponent"))
    modes = config.get("modes") or [config.get("mode", "tent_sup")]
    rows = []
    for mode in modes:
        est = carleson_norm(mu, exponent, mode, grid, budget, seed)
        rows.append(_estimate_row(None, "measure", est))
    return {"rows": rows}, rows, all(not r["reliable"] for r in rows)


def cmd_distance(config, budget, seed, grid):
    params = parse_params(_require(config, "params"))
    which = config.get("which", "d2")
    which = [which] if isinstance(which, str) else list(which)
    for w in which:
        if w not in DISTANCES:
            raise DSLError(f"unknown distance {w!r}; expected one of {sorted(DISTANCES)}", "which")
    eps = config.get("epsilon_grid")
    dgrid = GridSpec(grid.dirs, grid.radii, False)
    out, rows = [], []
    for fid, payload, path in _functions(config):
        f = parse_function(payload, path)
        for w in which:
            rep = distance_estimate(f, params, w, eps, budget, seed, dgrid)
            out.append(dict(rep, function_id=fid))
            rows.append({"space": f"{w}:N({params.p:g},{params.q:g},{params.s:g})", "function_id": fid,
                         "value": rep["value"], "verdict": "bracketed" if rep["bracketed"] else "unbracketed"})
    return {"distances": out}, rows, False


def cmd_profile(config, budget, seed, grid):
    kind = config.get("kind", "decay")
    radii = config.get("radii", list(DEFAULT_RADII))
    out, rows = [], []
    for fid, payload, path in _functions(config):
        f = parse_function(payload, path)
        if kind == "decay":
            space = parse_space(_require(config, "space"))
            if not isinstance(space, NSpace):
                raise DSLError("decay profiles need an N space", "space.space")
            prof = decay_profile(space, f, radii, budget, seed, grid.dirs)
            out.append({"function_id": fid, "rows": prof})
            rows += [{"space": space.label, "function_id": f"{fid}@r={row['r']:g}", "value": row["value"],
                      "std_error": row["std_error"]} for row in prof]
        elif kind == "korenblum":
            params = parse_params(_require(config, "params"))
            prof = korenblum_profile(params, f, radii, budget, seed, grid)
            out.append(dict(prof, function_id=fid))
            rows.append({"space": "korenblum-slope", "function_id": fid, "value": prof["slope"]})
        else:
            raise DSLError(f"unknown profile kind {kind!r}; expected 'decay' or 'korenblum'", "kind")
    return {"profiles": out}, rows, False


def cmd_equivalence(config, budget, seed, grid):
    params = parse_params(_require(config, "params"))
    forms = tuple(config.get("forms", FORMS if params.n > 1 else FORMS[:4]))
    if "I1" not in forms:
        raise DSLError("the ratio table is relative to I1, which must be listed", "forms")
    if "random" in config:
        spec = config["random"]
        rng = np.random.default_rng(np.random.SeedSequence([int(spec.get("seed", 0)), 11]))
        fns = [(f"r{i}", Polynomial.random(rng, params.n, int(spec.get("max_degree", 6))))
               for i in range(int(spec.get("count", 10)))]
    else:
        fns = [(fid, parse_function(p, path)) for fid, p, path in _functions(config)]
    table, rows = [], []
    for fid, f in fns:
        ests = moebius_norms(f, params, forms, budget, seed, grid)
        base = ests["I1"].value
        entry = {"function_id": fid, "values": {k: e.value for k, e in ests.items()},
                 "ratios": {k: ests[k].value / base for k in forms if k != "I1"}}
        table.append(entry)
        for k, e in ests.items():
            rows.append(_estimate_row(None, fid, e))
    spread = {k: [min(t["ratios"][k] for t in table), max(t["ratios"][k] for t in table)] for k in forms if k != "I1"}
    constant = max(max(hi, 1.0 / lo) for lo, hi in spread.values()) if spread else 1.0
    result = {"table": table, "spread": spread, "constant": constant}
    if "interval" in config:
        lo, hi = config["interval"]
        result["within_interval"] = all(lo <= r <= hi for t in table for r in t["ratios"].values())
    return result, rows, False


HANDLERS = {"norm": cmd_norm, "membership": cmd_membership, "gap": cmd_gap, "lattice": cmd_lattice,
            "atomic": cmd_atomic, "carleson": cmd_carleson, "distance": cmd_distance, "profile": cmd_profile,
            "equivalence": cmd_equivalence}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ballspace", description="Function spaces on the unit ball of C^n.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file or a previous report")
    ap.add_argument("--json", help="inline JSON config, merged over --config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--budget", type=int)
    ap.add_argument("--grid-dirs", type=int)
    ap.add_argument("--grid-radii", help="comma-separated radii in [0, 1)")
    ap.add_argument("--format", choices=("json", "csv"))
    ap.add_argument("--out", help="report path (default: stdout)")
    ap.add_argument("--quiet", action="store_true")
    ap.add_argument("--threads", type=int)
    return ap


def resolve(args) -> dict:
    config = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DSLError(str(exc), args.config) from None
        config.update(load_config(text, args.config))
    if args.json:
        extra = _decode(args.json, "--json")
        if not isinstance(extra, dict):
            raise DSLError("expected a JSON object", "--json")
        config.update(extra)
    if config.get("command", args.command) != args.command:
        raise DSLError(f"config is for command {config['command']!r}, not {args.command!r}", "command")
    config["command"] = args.command
    if args.seed is not None:
        config["seed"] = args.seed
    if args.budget is not None:
        config["budget"] = args.budget
    grid = dict(config.get("grid") or {})
    if args.grid_dirs is not None:
        grid["dirs"] = args.grid_dirs
    if args.grid_radii is not None:
        try:
            grid["radii"] = [float(x) for x in args.grid_radii.split(",") if x.strip()]
        except ValueError:
            raise DSLError("expected comma-separated numbers", "--grid-radii") from None
    config["grid"] = _grid(dict(config, grid=grid)).to_dict()
    config.setdefault("seed", 0)
    if config.get("budget") is None:
        config["budget"] = DEFAULT_BALL_BUDGET
    if not isinstance(config["seed"], int) or isinstance(config["seed"], bool):
        raise DSLError("seed must be an integer", "seed")
    if not isinstance(config["budget"], int) or isinstance(config["budget"], bool) or config["budget"] < 1:
        raise DSLError("budget must be a positive integer", "budget")
    config["format"] = args.format or config.get("format", "json")
    return config


def run(command: str, config: dict) -> tuple[int, str, str]:
    """(exit status, report body, format) for an already-resolved config."""
    grid = _grid(config)
    result, rows, unreliable = HANDLERS[command](config, config["budget"], config["seed"], grid)
    fmt = config.get("format", "json")
    body = render_csv(config, rows) if fmt == "csv" else render_json(config, result)
    return (EXIT_UNRELIABLE if unreliable else EXIT_OK), body, fmt


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in ("-h", "--help"):
        build_parser().print_help()
        return EXIT_OK
    if argv and argv[0] == "--version":
        print(__version__)
        return EXIT_OK
    if not argv or argv[0] not in COMMANDS:
        sys.stderr.write(USAGE)
        if argv:
            sys.stderr.write(f"unknown command {argv[0]!r}\n")
        return EXIT_USAGE
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        if args.threads is not None:
            set_threads(args.threads)
        config = resolve(args)
        status, body, _ = run(args.command, config)
    except DSLError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except BallspaceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    finally:
        set_threads(None)
    text = header_line() + body
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not args.quiet and args.out:
        sys.stderr.write(f"wrote {args.out} (exit {status})\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
