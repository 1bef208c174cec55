"""Command-line front end: ``python -m krflab {flow,reaction,envelope,lemma,report}``.

Exit status is 0 on success, 1 on a domain error raised by the numerics
(for example MetricDegenerate), and 2 on a configuration error.
"""
import argparse
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, envelopes, flow, quadform, reaction, report
from .curvature import tensor_from_json, tensor_to_json
from .errors import ConfigError, KrflabError

log = logging.getLogger("krflab")

_GLOBAL = {
    "out": {"type": "string"},
    "seed": {"type": "integer"},
    "log_level": {"enum": ["DEBUG", "INFO", "WARNING", "ERROR"]},
}


def _schema(payload):
    return {
        "type": "object",
        "properties": {
            "command": {"type": "string"},
            **_GLOBAL,
            "payload": {"type": "object", "additionalProperties": False, **payload},
        },
        "required": ["command", "out", "payload"],
        "additionalProperties": False,
    }


_INIT = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["fs", "perturbed"]},
        "amplitude": {"type": "number"},
        "mode": {"type": "number"},
        "seed": {"type": "integer"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SCHEMAS = {
    "flow": _schema(
        {
            "properties": {
                "n": {"type": "integer", "minimum": 2},
                "N": {"type": "integer", "minimum": 16},
                "t_end": {"type": "number", "minimum": 0},
                "safety": {"type": "number", "exclusiveMinimum": 0},
                "cadence": {"type": "number", "exclusiveMinimum": 0},
                "init": _INIT,
                "restarts": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "fields": {"type": "boolean"},
                "extremizers": {"type": "boolean"},
            },
            "required": ["n", "N", "t_end"],
        }
    ),
    "reaction": _schema(
        {
            "properties": {
                "tensor": {"type": "object"},
                "t_end": {"type": "number", "minimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "samples": {"type": "integer", "minimum": 2},
                "frame": {"enum": ["fixed", "unitary"]},
                "snapshots": {"type": "boolean"},
            },
            "required": ["tensor", "t_end"],
        }
    ),
    "envelope": _schema(
        {
            "properties": {
                "family": {"type": "string"},
                "params": {"type": "object"},
                "t_end": {"type": "number", "minimum": 0},
                "samples": {"type": "integer", "minimum": 2},
                "at": {"type": "array", "items": {"type": "number"}},
            },
            "required": ["family", "params", "t_end"],
        }
    ),
    "lemma": _schema(
        {
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "samples": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "sampler": {"enum": sorted(quadform.SAMPLERS)},
            },
            "required": ["n", "samples"],
        }
    ),
    "report": _schema(
        {
            "properties": {"inputs": {"type": "array", "items": {"type": "string"}}},
            "required": ["inputs"],
        }
    ),
}


def validate_config(cfg):
    """Schema check of a RunConfig dict; unknown keys are rejected."""
    cmd = cfg.get("command")
    if cmd not in SCHEMAS:
        raise ConfigError(f"unknown command {cmd!r}")
    try:
        jsonschema.validate(cfg, SCHEMAS[cmd])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    return cfg


def thread_cap():
    try:
        return max(1, int(os.environ.get("KRFLAB_THREADS", "1")))
    except ValueError:
        raise ConfigError("KRFLAB_THREADS must be an integer") from None


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


# runners: each takes a validated config and returns {relative name: text}


def run_flow_cmd(cfg):
    p = dict(cfg["payload"])
    fields = p.pop("fields", False)
    rec = flow.run_flow(flow.FlowConfig(**p), keep_states=fields)
    files = {"trajectory.csv": report.csv_text(flow.CSV_COLUMNS, rec.rows())}
    if fields:
        dump = [
            {
                "t": float(st.t),
                "x": st.potential.x.tolist(),
                "scalar": st.scalar.tolist(),
                "ricci_radial": st.ricci_radial.tolist(),
                "ricci_transverse": st.ricci_transverse.tolist(),
                "F": flow.F_field(st).tolist(),
            }
            for st in rec.states
        ]
        files["fields.json"] = report.json_text(dump)
    return files


REACTION_COLUMNS = ("t", "scalar_min", "ricci_min", "holsec_min", "orthbis_min", "mu_star")


def run_reaction_cmd(cfg):
    p = cfg["payload"]
    R0 = tensor_from_json(p["tensor"])
    tr = reaction.integrate_reaction(
        R0,
        (0.0, float(p["t_end"])),
        tol=p.get("tol", 1e-9),
        samples=p.get("samples", 21),
        frame=p.get("frame", "fixed"),
        seed=cfg.get("seed", 0),
    )
    rows = [
        (t, b.scalar_min, b.ricci_min, b.holsec_min, b.orthbis_min, b.mu_star)
        for t, b in zip(tr.times, tr.bounds)
    ]
    files = {"trajectory.csv": report.csv_text(REACTION_COLUMNS, rows)}
    if p.get("snapshots"):
        snaps = [{"t": float(t), "tensor": tensor_to_json(T)} for t, T in zip(tr.times, tr.tensors)]
        files["snapshots.json"] = report.json_text(snaps)
    return files


def run_envelope_cmd(cfg):
    p = cfg["payload"]
    try:
        env = envelopes.ComparisonEnvelope(p["family"], dict(p["params"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    t = np.linspace(0.0, float(p["t_end"]), p.get("samples", 101))
    t = np.unique(np.concatenate([t, np.asarray(p.get("at", []), dtype=float)]))
    vals = np.asarray(env.evaluate(t))
    return {
        "envelope.csv": report.csv_text(("t", "value"), zip(t, vals)),
        "envelope.json": report.json_text(env.to_json()),
    }


def run_lemma_cmd(cfg):
    p = cfg["payload"]
    n, total, seed = p["n"], p["samples"], p.get("seed", cfg.get("seed", 0))
    sampler = p.get("sampler", "general")
    shards = min(thread_cap(), total)
    sizes = [total // shards + (k < total % shards) for k in range(shards)]
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
    with ThreadPoolExecutor(max_workers=shards) as ex:
        parts = list(
            ex.map(lambda a: quadform.lemma_fuzz(n, a[1], seed + a[0], sampler), zip(starts, sizes))
        )
    # deterministic reduction: lowest seed wins ties
    worst = min(parts, key=lambda s: (s.worst_slack, s.worst_seed))
    firsts = [s.first_violation_seed for s in parts if s.first_violation_seed is not None]
    summary = {
        "n": n,
        "sampler": sampler,
        "samples": total,
        "violations": int(sum(s.violations for s in parts)),
        "worst_slack": worst.worst_slack,
        "worst_seed": worst.worst_seed,
        "first_violation_seed": min(firsts) if firsts else None,
    }
    return {"lemma.json": report.json_text(summary)}


RUNNERS = {
    "flow": run_flow_cmd,
    "reaction": run_reaction_cmd,
    "envelope": run_envelope_cmd,
    "lemma": run_lemma_cmd,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="krflab", description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="krflab-out", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("flow", help="U(n)-invariant flow on CP^n")
    f.add_argument("--config", required=True, help="JSON: {n, N, t_end, safety, cadence, init}")
    f.add_argument("--fields", action="store_true", help="also dump per-node fields")

    r = sub.add_parser("reaction", help="pointwise reaction ODE from a tensor")
    r.add_argument("--tensor", required=True, help="tensor JSON {n, entries}")
    r.add_argument("--t-end", type=float, required=True)
    r.add_argument("--tol", type=float, default=1e-9)
    r.add_argument("--samples", type=int, default=21)
    r.add_argument("--frame", choices=["fixed", "unitary"], default="fixed")
    r.add_argument("--snapshots", action="store_true")

    e = sub.add_parser("envelope", help="sample a comparison envelope")
    e.add_argument("--family", required=True)
    e.add_argument("--mu0", type=float, required=True, help="starting bound (h0 for scalar-upper)")
    e.add_argument("--nu", type=float)
    e.add_argument("--n", type=int)
    e.add_argument("--rate", type=float, help="logistic growth rate override")
    e.add_argument("--t-end", type=float, required=True)
    e.add_argument("--samples", type=int, default=101)
    e.add_argument("--at", type=float, nargs="*", default=[], help="extra sample times")

    lm = sub.add_parser("lemma", help="fuzz the block trace inequality")
    lm.add_argument("--n", type=int, required=True)
    lm.add_argument("--samples", type=int, required=True)
    lm.add_argument("--sampler", choices=sorted(quadform.SAMPLERS), default="general")

    rp = sub.add_parser("report", help="SVG charts and summary from trajectory CSVs")
    rp.add_argument("inputs", nargs="*")
    return ap


def config_from_args(args):
    cfg = {"command": args.command, "out": args.out, "seed": args.seed, "log_level": args.log_level}
    if args.command == "flow":
        payload = _load_json(args.config)
        if not isinstance(payload, dict):
            raise ConfigError("flow config must be a JSON object")
        if args.fields:
            payload["fields"] = True
    elif args.command == "reaction":
        payload = {
            "tensor": _load_json(args.tensor),
            "t_end": args.t_end,
            "tol": args.tol,
            "samples": args.samples,
            "frame": args.frame,
            "snapshots": args.snapshots,
        }
    elif args.command == "envelope":
        params = {"mu0": args.mu0}
        for k in ("nu", "n", "rate"):
            if getattr(args, k) is not None:
                params[k] = getattr(args, k)
        payload = {
            "family": args.family,
            "params": params,
            "t_end": args.t_end,
            "samples": args.samples,
            "at": list(args.at),
        }
    elif args.command == "lemma":
        payload = {"n": args.n, "samples": args.samples, "seed": args.seed, "sampler": args.sampler}
    else:
        payload = {"inputs": list(args.inputs)}
    cfg["payload"] = payload
    return validate_config(cfg)


def _config_hash(cfg):
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def write_manifest(out, cfg, status, files, wall):
    manifest = {
        "tool": "krflab",
        "version": __version__,
        "command": cfg["command"],
        "config_sha256": _config_hash(cfg),
        "status": status,
        "wall_clock_s": round(wall, 3),
        "files": {name: report.sha256(out / name) for name in sorted(files)},
    }
    (out / "manifest.json").write_text(report.json_text(manifest))


def dispatch(argv=None):
    """Parse, validate, run and persist; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        cfg = config_from_args(args)
        thread_cap()
    except ConfigError as exc:
        log.error("%s", exc)
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    try:
        if cfg["command"] == "report":
            names = [p.name for p in report.emit_report(cfg["payload"]["inputs"], out)]
        else:
            files = RUNNERS[cfg["command"]](cfg)
            for name, text in files.items():
                (out / name).write_text(text)
            names = list(files)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KrflabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        write_manifest(out, cfg, f"error: {type(exc).__name__}", [], time.perf_counter() - start)
        return 1
    write_manifest(out, cfg, "ok", names, time.perf_counter() - start)
    for name in names:
        print(out / name)
    return 0


def main():  # pragma: no cover - console entry
    sys.exit(dispatch())
