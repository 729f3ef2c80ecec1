"""Config-driven experiment runner.

    cfdirlab <command> <config.json> [--out PATH] [--jobs N] [--seed S] [--format json|csv|text]

Commands: build, validate, measure, scan, rigidity, suspend, audit, and
summarize (which reads a report instead of a config).  Exit status 0 on
success, 2 when a condition or certificate fails (the report is still
written), 1 on usage or configuration errors.

A report is {"header": {...}, "payload": {...}}; only the header carries a
timestamp, so identical config and seed give a byte-identical payload.
"""
from __future__ import annotations

import argparse
from datetime import datetime, timezone
from fractions import Fraction
import json
import os
from pathlib import Path
import random
import sys

import jsonschema

from . import __version__
from .analysis import (
    RecurrenceEvidence,
    report_csv,
    report_rows,
    rigidity_report,
    rigidity_search,
    scan_directions,
)
from .builders import (
    BuildError,
    Builder42Config,
    Builder43Config,
    BuilderH3Config,
    audit_h3,
    audit_zd_42,
    audit_zd_43,
    audit_zd_empty,
    build_h3,
    build_zd_42,
    build_zd_43,
    build_zd_empty,
)
from .cf import CFSchedule, Cylinder, cylinder, intersection_measure, multi_intersection_measure, validate_schedule
from .directions import KAPPA_VERSION, Direction, direction_net, theta_family_net, DirectionNet
from .pointsets import Explicit, pointset_from_json
from .serial import dumps, elem_in, elem_out, parse_q, qstr
from .suspension import cocycle_defect, rigidity_transfer_statistic, window_constant_on_grid, window_return_check

COMMANDS = ("build", "validate", "measure", "scan", "rigidity", "suspend", "audit")
REPORT_SCHEMA = "cfdirlab.report/1"


class UsageError(Exception):
    pass


class ConditionFailure(Exception):
    def __init__(self, payload):
        super().__init__("condition failure")
        self.payload = payload


# ---------------------------------------------------------------------------
# config schemas

_num = {"type": "number"}
_int = {"type": "integer"}
_cyl = {"type": "object", "required": ["level"],
        "properties": {"level": {"type": "integer", "minimum": 0}, "A": {}}}
_net = {"type": "object", "properties": {
    "resolution": {"type": "integer", "minimum": 1},
    "theta_t": {"type": "array"}, "include_inf": {"type": "boolean"},
    "directions": {"type": "array", "minItems": 1}}}

SCHEMAS = {
    "build": {"type": "object", "required": ["version", "builder", "config"], "properties": {
        "builder": {"enum": ["zd_42", "zd_empty", "zd_43", "h3"]},
        "config": {"type": "object"}, "schedule": {"type": "string"},
        "certificates": {"type": "string"}}},
    "validate": {"type": "object", "required": ["version", "schedule"], "properties": {
        "schedule": {"type": "string"}, "gamma_ball_radius": _num}},
    "measure": {"type": "object", "required": ["version", "schedule", "cylinder", "g", "depth"],
                "properties": {"schedule": {"type": "string"}, "cylinder": _cyl,
                               "g": {"type": "array"}, "depth": _int,
                               "p": {"type": "integer", "minimum": 1}}},
    "scan": {"type": "object", "required": ["version", "schedule", "net", "eps"], "properties": {
        "schedule": {"type": "string"}, "net": _net, "eps": {"type": "number", "exclusiveMinimum": 0},
        "depth": _int, "K": _num, "cylinder": _cyl, "min_ratio": {}, "mode": {
            "enum": ["auto", "materialize", "pruned", "targeted"]}}},
    "rigidity": {"type": "object", "required": ["version", "schedule", "net", "eps"], "properties": {
        "schedule": {"type": "string"}, "net": _net, "eps": {"type": "array", "minItems": 1},
        "levels": {"type": "array"}, "deltas": {"type": "array"}, "K": _num}},
    "suspend": {"type": "object", "required": ["version"], "properties": {
        "d": _int, "cocycle_samples": _int, "window_samples": _int, "window_eps": _num,
        "transfer": {"type": "array"}}},
    "audit": {"type": "object", "required": ["version", "schedule"], "properties": {
        "schedule": {"type": "string"}, "builder": {"type": "string"}, "config": {"type": "object"}}},
}
for _s in SCHEMAS.values():
    _s["properties"]["version"] = {"type": "integer", "const": 1}


def load_config(command, path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise UsageError(f"config {path}: {exc.message}") from exc
    return cfg


def _resolve(base, p):
    p = Path(p)
    return p if p.is_absolute() else base / p


def _load_schedule(base, rel):
    path = _resolve(base, rel)
    if not path.exists():
        raise UsageError(f"schedule file {path} not found")
    try:
        return CFSchedule.load(path), path
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"schedule file {path} is malformed: {exc}") from exc


def _net_from(obj, G):
    kind = "H3" if G.kind == "H3" else "Zd"
    if "resolution" in obj:
        return direction_net(G, obj["resolution"])
    if "theta_t" in obj:
        return theta_family_net([parse_q(t) for t in obj["theta_t"]], obj.get("include_inf", True))
    if "directions" in obj:
        return DirectionNet([Direction.from_json(d, kind) for d in obj["directions"]], None,
                            "explicit directions")
    raise UsageError("net needs resolution, theta_t or directions")


def _cylinder_from(s, obj, default_level=0):
    if obj is None:
        return cylinder(s, default_level, Explicit([s.G.identity]))
    A = obj.get("A")
    if A is None:
        return cylinder(s, obj["level"], Explicit([s.G.identity]))
    if A == "F":
        return cylinder(s, obj["level"])
    return Cylinder(s, obj["level"], pointset_from_json(A))


# ---------------------------------------------------------------------------
# commands; each returns (payload, artifacts) and raises ConditionFailure for exit 2


def cmd_build(cfg, base, ctx):
    kind, bc = cfg["builder"], cfg["config"]
    failures = []
    try:
        if kind == "zd_42":
            s = build_zd_42(Builder42Config.from_json(bc))
        elif kind == "zd_43":
            s = build_zd_43(Builder43Config.from_json(bc))
        elif kind == "zd_empty":
            s = build_zd_empty(Direction.from_json(bc["theta"]), int(bc["depth"]),
                               [float(e) for e in bc["eps"]], int(bc.get("safety", 3)),
                               bc.get("margin", 10))
        else:
            s = build_h3(BuilderH3Config.from_json(bc), strict=False)
            failures = s.provenance.get("failures", [])
    except BuildError as exc:
        payload = {"builder": kind, "error": str(exc), "level": exc.level,
                   "condition": exc.condition, "failures": exc.failures}
        raise ConditionFailure(payload) from exc
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad builder config: {exc}") from exc
    out = ctx["out"]
    sched_path = _resolve(base, cfg["schedule"]) if "schedule" in cfg else out.with_name(out.stem.split(".")[0] + ".schedule.json")
    cert_path = (_resolve(base, cfg["certificates"]) if "certificates" in cfg
                 else sched_path.with_name(sched_path.stem + ".certificates.json"))
    val = validate_schedule(s)
    sched_json = s.to_json()
    certs = {"builder": kind, "kappa": KAPPA_VERSION,
             "certificates": s.provenance.get("certificates", [])}
    payload = {"builder": kind, "depth": s.depth, "schedule_file": sched_path.name,
               "certificates_file": cert_path.name, "validation": val.to_json(),
               "failures": failures, "certificates": certs["certificates"]}
    artifacts = {sched_path: dumps(sched_json), cert_path: dumps(certs)}
    if failures or not val.ok:
        raise ConditionFailure(payload | {"artifacts": artifacts})
    return payload, artifacts


def cmd_validate(cfg, base, ctx):
    s, path = _load_schedule(base, cfg["schedule"])
    rep = validate_schedule(s, cfg.get("gamma_ball_radius", 0.0))
    payload = {"schedule_file": path.name, "validation": rep.to_json(), "provenance": s.provenance}
    if not rep.ok:
        raise ConditionFailure(payload)
    return payload, {}


def cmd_measure(cfg, base, ctx):
    s, path = _load_schedule(base, cfg["schedule"])
    c = _cylinder_from(s, cfg["cylinder"])
    g = elem_in(cfg["g"])
    m = cfg["depth"]
    if "p" in cfg:
        est = multi_intersection_measure(c, g, cfg["p"], m)
    else:
        est = intersection_measure(c, g, m)
    return {"schedule_file": path.name, "cylinder": c.to_json(), "g": elem_out(g),
            "estimate": est.to_json(), "provenance": s.provenance}, {}


def cmd_scan(cfg, base, ctx):
    s, path = _load_schedule(base, cfg["schedule"])
    net = _net_from(cfg["net"], s.G)
    c = _cylinder_from(s, cfg.get("cylinder"))
    rep = scan_directions(s, net, cfg["eps"], cfg.get("depth"), cfg.get("K"), c,
                          parse_q(cfg.get("min_ratio", 0)), cfg.get("mode", "auto"), ctx["jobs"])
    payload = rep.to_json()
    payload["schedule_file"] = path.name
    return payload, {}


def cmd_rigidity(cfg, base, ctx):
    s, path = _load_schedule(base, cfg["schedule"])
    net = _net_from(cfg["net"], s.G)
    eps = [float(e) for e in cfg["eps"]]
    deltas = [parse_q(x) for x in cfg["deltas"]] if "deltas" in cfg else None
    results = [rigidity_search(s, th, eps, cfg.get("levels"), None, None, deltas, cfg.get("K"))
               for th in net]
    params = {k: cfg[k] for k in ("eps", "levels", "deltas", "K", "net") if k in cfg}
    payload = rigidity_report(results, params, {k: s.provenance[k] for k in ("builder", "config")
                                                if k in s.provenance})
    payload["schedule_file"] = path.name
    return payload, {}


def cmd_suspend(cfg, base, ctx):
    rng = random.Random(ctx["seed"])
    d = cfg.get("d", 2)

    def rq():
        return Fraction(rng.randint(-400, 400), rng.randint(1, 40))

    n1 = cfg.get("cocycle_samples", 1000)
    bad = 0
    for _ in range(n1):
        g1, g2 = tuple(rq() for _ in range(d)), tuple(rq() for _ in range(d))
        y = tuple(Fraction(rng.randrange(0, 97), 97) for _ in range(d))
        if any(cocycle_defect(g1, g2, y)):
            bad += 1
    weps = Fraction(cfg.get("window_eps", 0.1)).limit_denominator(10 ** 6)
    n2 = cfg.get("window_samples", 1000)
    hits = misses = viol = 0
    while hits < n2 and hits + misses < 100 * n2:
        g = tuple(rng.randint(-50, 50) + Fraction(rng.randint(-99, 99), 1000) for _ in range(d))
        hit, gam = window_return_check(g, weps)
        if not hit:
            misses += 1
            continue
        hits += 1
        if max(abs(x - k) for x, k in zip(g, gam)) >= weps or not window_constant_on_grid(g, weps):
            viol += 1
    trans = [rigidity_transfer_statistic([float(x) for x in e]) for e in cfg.get("transfer", [])]
    payload = {"seed": ctx["seed"], "d": d,
               "cocycle": {"samples": n1, "defects": bad},
               "window": {"eps": qstr(weps), "hits": hits, "misses": misses, "violations": viol},
               "transfer": trans}
    if bad or viol:
        raise ConditionFailure(payload)
    return payload, {}


def _audit_failures(kind, out):
    fails = []
    for cert in out:
        if kind == "h3":
            fails += cert["failures"]
        elif not (cert.get("ok", cert.get("count_ok", True)) and cert.get("N_reproduced", True)):
            fails.append({"level": cert["level"], "condition": "certificate",
                          "detail": "certificate does not re-verify"})
    return fails


def cmd_audit(cfg, base, ctx):
    s, path = _load_schedule(base, cfg["schedule"])
    b = cfg.get("builder") or s.provenance.get("builder", "")
    try:
        if b == "zd_42":
            kind, out = b, audit_zd_42(s, Builder42Config.from_json(cfg["config"]) if "config" in cfg else None)
        elif b == "zd_43":
            kind, out = b, audit_zd_43(s, Builder43Config.from_json(cfg["config"]) if "config" in cfg else None)
        elif b == "zd_empty":
            kind, out = b, audit_zd_empty(s)
        elif b.startswith("h3"):
            kind, out = "h3", audit_h3(s, BuilderH3Config.from_json(cfg["config"]) if "config" in cfg else None)
        else:
            raise UsageError(f"no audit for builder {b!r}")
    except (KeyError, ValueError) as exc:
        raise UsageError(f"cannot audit: {exc}") from exc
    val = validate_schedule(s)
    fails = _audit_failures(kind, out)
    if not val.ok:
        fails += [{"level": None, "condition": "validation", "detail": f} for f in val.failures]
    payload = {"schedule_file": path.name, "builder": b, "audit": out, "validation": val.to_json(),
               "failures": fails}
    if fails:
        raise ConditionFailure(payload)
    return payload, {}


HANDLERS = {"build": cmd_build, "validate": cmd_validate, "measure": cmd_measure, "scan": cmd_scan,
            "rigidity": cmd_rigidity, "suspend": cmd_suspend, "audit": cmd_audit}


# ---------------------------------------------------------------------------
# reports


def make_report(command, cfg, payload, status, ctx):
    body = {"schema": REPORT_SCHEMA, "command": command, "status": status,
            "tool_version": __version__, "kappa": KAPPA_VERSION, "seed": ctx["seed"],
            "config": cfg, "result": payload}
    header = {"tool": "cfdirlab", "created": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    return {"header": header, "payload": body}


def payload_bytes(report):
    return dumps(report["payload"]).encode()


def summarize(report, fmt):
    if "payload" not in report or report["payload"].get("schema") != REPORT_SCHEMA:
        raise UsageError("not a cfdirlab report")
    body = report["payload"]
    res = body["result"]
    if fmt == "json":
        return dumps(report)
    if fmt == "csv":
        if "results" not in res or body["command"] != "scan":
            raise UsageError("csv summaries exist for scan reports only")
        return report_csv(res)
    lines = [f"command: {body['command']}  status: {body['status']}  tool {body['tool_version']}"]
    if "counts" in res:
        lines.append("  ".join(f"{k}: {v}" for k, v in sorted(res["counts"].items())))
    if body["command"] == "scan":
        lines.append(f"{'#':>4}  {'direction':<28} {'verdict':<11} {'ratio':>12} {'dist':>12}")
        for row in report_rows(res):
            r = row["ratio"]
            rf = f"{float(Fraction(r)):.6f}" if r != "" else "-"
            dd = f"{row['dist']:.3e}" if row["dist"] != "" else "-"
            lines.append(f"{row['index']:>4}  {row['label']:<28} {row['verdict']:<11} {rf:>12} {dd:>12}")
    if "failures" in res:
        for f in res["failures"]:
            lines.append(f"FAIL level {f.get('level')}: {f.get('condition')} {f.get('detail', '')}")
    return "\n".join(lines) + "\n"


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def run(command, config_path, out=None, jobs=None, seed=0, fmt="json", stream=None):
    """Execute one command; returns the exit status."""
    stream = stream or sys.stdout
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}")
    config_path = Path(config_path)
    cfg = load_config(command, config_path)
    base = config_path.parent
    out = Path(out) if out else config_path.with_name(config_path.stem + f".{command}.report.json")
    if jobs is None:
        try:
            jobs = int(os.environ.get("CFDIRLAB_JOBS", "1"))
        except ValueError as exc:
            raise UsageError("CFDIRLAB_JOBS must be an integer") from exc
    ctx = {"out": out, "jobs": max(1, jobs), "seed": seed}
    status, artifacts = 0, {}
    try:
        payload, artifacts = HANDLERS[command](cfg, base, ctx)
        state = "ok"
    except ConditionFailure as exc:
        payload = exc.payload
        artifacts = payload.pop("artifacts", {})
        status, state = 2, "condition_failure"
    for p, text in artifacts.items():
        _write(p, text)
    report = make_report(command, cfg, payload, state, ctx)
    _write(out, dumps(report))
    stream.write(summarize(report, fmt if fmt != "csv" or command == "scan" else "text"))
    return status


def main(argv=None):
    ap = argparse.ArgumentParser(prog="cfdirlab", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", help=", ".join(COMMANDS + ("summarize",)))
    ap.add_argument("config", help="config JSON (a report JSON for summarize)")
    ap.add_argument("--out", help="report path")
    ap.add_argument("--jobs", type=int, help="worker processes (default $CFDIRLAB_JOBS or 1)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--format", default="json", choices=["json", "csv", "text"])
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; the contract reserves 2 for condition failures
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "summarize":
            try:
                with open(args.config) as fh:
                    rep = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read report: {exc}") from exc
            text = summarize(rep, args.format)
            if args.out:
                _write(Path(args.out), text)
            else:
                sys.stdout.write(text)
            return 0
        return run(args.command, args.config, args.out, args.jobs, args.seed, args.format)
    except UsageError as exc:
        print(f"cfdirlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
