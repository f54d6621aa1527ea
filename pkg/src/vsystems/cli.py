"""Command-line interface.

Exit status: 0 when the check passes, 1 on a mathematical failure, 2 on an
input or configuration error.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np

from . import files
from .algebra import DEFAULT_TOL, is_rational
from .coxeter import build_root_system, fundamental_weight, small_orbit_check, weyl_orbit
from .errors import (
    InputError,
    Infeasible,
    LemmaViolation,
    OrbitOverflow,
    UnknownName,
    UnsupportedSpec,
    UnsupportedWeight,
    VSystemError,
)
from .openvee import OpenSystem, catalog_base_spec, check_open_vee, solve_open_constants
from .prepotential import (
    auxiliary_lemma_check,
    open_wdvv_residual,
    sample_closed_points,
    wdvv_residual_closed,
)
from .superpotential import (
    build_superpotential,
    compare_intersection_form,
    discriminant_point,
    random_points,
    residue_metrics,
)
from .veesys import CovectorSystem, check_vee

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
CONFIG_ERRORS = (InputError, UnknownName, UnsupportedSpec, UnsupportedWeight, OSError)

FAMILIES = [
    {"name": "A:n", "ranks": "n >= 1", "small_orbits": ["w1", "wn"]},
    {"name": "B:n", "ranks": "n >= 1", "small_orbits": ["w1", "w3 (B:3 only)"]},
    {"name": "D:n", "ranks": "n >= 2", "small_orbits": ["w1", "w3, w4 (D:4 only)"]},
    {"name": "G2", "ranks": "2", "small_orbits": ["w1"]},
    {"name": "I2:N", "ranks": "N >= 2", "small_orbits": ["w0 (vertex orbit, proportional)"]},
    {"name": "H3", "ranks": "3", "small_orbits": ["w1 (12 weights, proportional)"]},
]

OPEN_CATALOG = ["A:n:w1", "A:3:w2", "B:n:w1", "B:3:w3", "D:n:w1", "D:4:w3", "D:4:w4", "G2:w1", "I2:N:w0", "H3:w1"]


# ---------------------------------------------------------------------------
# configuration


def _env_float(name):
    value = os.environ.get(name)
    if value is None or value == "":
        return None
    try:
        return float(value)
    except ValueError:
        raise InputError(f"{name}={value!r} is not a number") from None


def _env_int(name):
    value = os.environ.get(name)
    if value is None or value == "":
        return None
    try:
        return int(value)
    except ValueError:
        raise InputError(f"{name}={value!r} is not an integer") from None


def resolve_config(args) -> dict:
    """Flags take precedence over ``VEE_TOL`` / ``VEE_SEED``, which beat the defaults."""
    tol = args.tolerance if args.tolerance is not None else _env_float("VEE_TOL")
    seed = args.seed if args.seed is not None else _env_int("VEE_SEED")
    tolerances = DEFAULT_TOL if tol is None else replace(DEFAULT_TOL, eq=tol, vee=tol, wdvv=tol)
    if tol is not None and tol <= 0:
        raise InputError("tolerance must be positive")
    return {
        "tolerances": tolerances,
        "seed": 0 if seed is None else seed,
        "samples": args.samples,
        "mode": args.mode,
        "output": args.output,
        "override": args.override,
    }


def _mode_flag(mode):
    return {"exact": True, "float": False}.get(mode)


def parse_overrides(text: str | None) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        if "=" not in item:
            raise InputError(f"override {item!r} is not key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in ("h", "k", "k0") and not re.fullmatch(r"h_\w+", key):
            raise InputError(f"unknown override key {key!r}")
        out[key] = files.parse_scalar(value)
    return out


CLASS_KEYS = {"h_s": "short", "h_l": "long", "h_root": "root"}


def apply_overrides_closed(system: CovectorSystem, overrides: dict) -> CovectorSystem:
    classes = {}
    for key, value in overrides.items():
        if key in CLASS_KEYS:
            if CLASS_KEYS[key] not in system.classes:
                raise InputError(f"{system.name} has no {CLASS_KEYS[key]} roots for {key}")
            classes[CLASS_KEYS[key]] = value
        elif key.startswith("h_") and key[2:] in system.classes:
            classes[key[2:]] = value
        elif key == "h":
            if system.exact and not is_rational(value):
                system = system.to_float()
            system = system.with_h(value)
        elif key not in ("k", "k0"):
            raise InputError(f"unknown override {key!r}")
    if classes:
        system = system.with_class_multiplicities(classes)
    return system


def apply_overrides_open(open_sys: OpenSystem, overrides: dict) -> OpenSystem:
    base = apply_overrides_closed(open_sys.base, {k: v for k, v in overrides.items() if k not in ("k", "k0")})
    out = open_sys.with_base(base)
    if "k" in overrides or "k0" in overrides:
        out = out.with_constants(overrides.get("k"), overrides.get("k0", "keep"))
    return out


# ---------------------------------------------------------------------------
# serialization helpers


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (Fraction, int, np.integer, complex, np.complexfloating)):
        return files.format_scalar(complex(obj) if isinstance(obj, np.complexfloating) else obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _vec(v):
    return [files.format_scalar(x) for x in v]


# ---------------------------------------------------------------------------
# commands; each returns (verdict, result)


def cmd_catalog(args, config):
    if args.action == "list":
        return "info", {"families": FAMILIES, "open_systems": OPEN_CATALOG}
    if not args.name:
        raise InputError("catalog show needs a name")
    spec, _ = files.parse_catalog_name(args.name)
    system = build_root_system(spec)
    mode = "proportional" if not spec.crystallographic else "strict"
    weights = []
    for idx in spec.weight_indices:
        seed = fundamental_weight(spec, idx)
        try:
            strict = small_orbit_check(system, seed, "strict", config["tolerances"].eq)
            prop = small_orbit_check(system, seed, "proportional", config["tolerances"].eq)
        except OrbitOverflow:
            weights.append({"index": idx, "weight": _vec(seed), "orbit_size": None})
            continue
        weights.append(
            {
                "index": idx,
                "weight": _vec(seed),
                "orbit_size": strict.orbit_size,
                "small_strict": strict.is_small,
                "small_proportional": prop.is_small,
                "small": strict.is_small if mode == "strict" else prop.is_small,
            }
        )
    counts = {}
    for c in system.classes:
        counts[c] = counts.get(c, 0) + 1
    return "info", {
        "name": spec.name,
        "roots": len(system),
        "positive_roots": len(system.positive_indices),
        "dimension": system.dim,
        "classes": counts,
        "smallness_mode": mode,
        "weights": weights,
    }


def cmd_check(args, config):
    tol = config["tolerances"]
    exact = _mode_flag(config["mode"])
    overrides = parse_overrides(config["override"])
    kind = args.kind
    if kind in ("vee", "wdvv"):
        system = apply_overrides_closed(files.load_closed(args.target, exact), overrides)
        if kind == "vee":
            report = check_vee(system, tol)
            failures = [
                {"alpha": _vec(system.vectors[c.alpha]), "plane": c.plane, "residual": c.residual}
                for c in report.failures()[:20]
            ]
            return ("pass" if report.passed else "fail"), {
                "system": system.name,
                "exact": report.exact,
                "checks": len(report.checks),
                "planes": len(report.partition),
                "worst_residual": report.worst_residual,
                "failures": failures,
            }
        samples = config["samples"] or 20
        points = sample_closed_points(system, samples, config["seed"], exact, tol)
        res = [wdvv_residual_closed(system, z, tol=tol) for z in points]
        worst = Fraction(0) if all(r == 0 for r in res) and system.exact else max(float(r) for r in res)
        ok = worst == 0 if system.exact and exact is not False else float(worst) <= tol.wdvv
        return ("pass" if ok else "fail"), {
            "system": system.name,
            "exact": system.exact and exact is not False,
            "samples": samples,
            "worst_residual": worst,
        }
    open_sys = apply_overrides_open(files.load_open(args.target, exact), overrides)
    if kind == "open-vee":
        report = check_open_vee(open_sys, tol)
        records = []
        for rec in report.records:
            point = "zero" if rec.base_point < 0 else _vec(open_sys.weights[rec.base_point])
            records.append(
                {
                    "base_point": point,
                    "passed": rec.passed,
                    "condA": rec.cond_a,
                    "condA_detail": list(rec.cond_a_detail),
                    "condB": [{"holds": r.holds, "evidence": r.text} for r in rec.cond_b],
                    "condC": [{"holds": r.holds, "evidence": r.text} for r in rec.cond_c],
                }
            )
        evidence = sorted({r.text for rec in report.records for r in rec.cond_b + rec.cond_c if not r.holds})
        return ("pass" if report.passed else "fail"), {
            "system": open_sys.name,
            "flags": list(report.flags),
            "failing_evidence": evidence,
            "records": records,
        }
    if kind == "open-wdvv":
        samples = config["samples"] or 100
        rep = open_wdvv_residual(open_sys, samples, config["seed"], exact, tol)
        return ("pass" if rep.passed else "fail"), {
            "system": open_sys.name,
            "exact": rep.exact,
            "samples": samples,
            "closed_residual": rep.closed_residual,
            "open_residual_set1": rep.open_residual_set1,
            "open_residual_set2": rep.open_residual_set2,
            "set2_above_1e-3": rep.count_above(1e-3),
        }
    if kind == "lemma":
        samples = config["samples"] or 100
        try:
            rep = auxiliary_lemma_check(open_sys, samples, config["seed"], exact, tol)
        except LemmaViolation as exc:
            return "fail", {"system": open_sys.name, "violation": str(exc)}
        return "pass", {
            "system": open_sys.name,
            "status": rep.status,
            "qualifying": rep.qualifying,
            "samples": rep.samples,
        }
    raise InputError(f"unknown check {kind!r}")


def _parse_z(text: str, open_sys: OpenSystem) -> np.ndarray:
    vals = np.array([float(files.parse_scalar(t.strip(), False)) for t in text.split(",")])
    base = open_sys.base.to_float()
    if len(vals) == base.dim:
        return vals
    if len(vals) == base.ambient_dim and base.constraint:
        return base.project(vals)
    raise InputError(f"--z needs {base.dim} components")


def cmd_superpotential(args, config):
    tol = config["tolerances"]
    open_sys = apply_overrides_open(files.load_open(args.target, _mode_flag(config["mode"])), parse_overrides(config["override"]))
    sp = build_superpotential(open_sys)
    if args.z == "on-discriminant":
        zs = [discriminant_point(open_sys, config["seed"])]
    elif args.z is not None:
        zs = [_parse_z(args.z, open_sys)]
    else:
        zs = random_points(open_sys, args.random or 10, config["seed"])
    metrics = [residue_metrics(sp, z, tol) for z in zs]
    fit = compare_intersection_form(metrics, open_sys.base.metric)
    points = []
    for z, m in zip(zs, metrics):
        asym = max(float(np.max(np.abs(m.g - m.g.T))), float(np.max(np.abs(m.eta - m.eta.T))))
        points.append(
            {
                "z": z,
                "lambda": sp.describe_at(z),
                "critical_points": [complex(x) for x in m.critical_points],
                "critical_values": [complex(v) for v in m.critical_values],
                "eta": m.eta,
                "g": m.g,
                "asymmetry": asym,
                "residue_check": m.residue_check,
            }
        )
    residue_ok = all(m.residue_check <= 1e-8 for m in metrics)
    fit_ok = fit.worst_misfit <= 1e-6 and fit.z_variation <= 1e-6
    return ("pass" if residue_ok and fit_ok else "fail"), {
        "system": open_sys.name,
        "lambda": sp.describe(),
        "points": points,
        "fit": {
            "c_star": fit.c_star,
            "misfit": fit.worst_misfit,
            "z_variation": fit.z_variation,
            "samples": fit.samples,
        },
        "notes": list(sp.notes),
    }


def cmd_solve(args, config):
    exact = _mode_flag(config["mode"])
    target = args.target
    if target.startswith(files.CATALOG_PREFIX):
        spec, weight = files.parse_catalog_name(target)
        real = catalog_base_spec(spec)
        if weight is None:
            weight = 0 if spec.family in ("I2", "G2") else 1
        if spec.family == "G2":
            weight = 0
        base = build_root_system(real)
        seed = fundamental_weight(real, weight)
    else:
        data = files.read_json(target)
        base_ref = data.get("base")
        weights = data.get("weights", "")
        if base_ref is None or not isinstance(weights, str) or not weights.startswith("orbit-of:"):
            raise InputError("solve-constants needs a base and 'orbit-of: <weight>'")
        spec = None
        if isinstance(base_ref, str):
            spec, _ = files.parse_catalog_name(base_ref)
            base = build_root_system(catalog_base_spec(spec))
        else:
            base = files.system_from_dict(base_ref, exact)
        seed = files._orbit_seed(weights[len("orbit-of:"):], spec, exact)
    if exact is False:
        base = base.to_float()
    orbit = weyl_orbit(base, seed)
    try:
        sol = solve_open_constants(base, orbit, not args.per_weight, None, config["tolerances"])
    except Infeasible as exc:
        return "fail", {"system": base.name, "infeasible": exc.relation, "reason": str(exc)}
    return "pass", {
        "system": base.name,
        "orbit_size": len(orbit),
        "solution": sol.as_dict(),
        "equations": list(sol.equations),
        "free": list(sol.free),
    }


# ---------------------------------------------------------------------------
# text rendering


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


def render_text(report: dict) -> str:
    lines = [f"{report['command_name']}: {report['verdict'].upper()}"]

    def walk(obj, indent):
        pad = "  " * indent
        for key in sorted(obj):
            val = obj[key]
            if isinstance(val, dict):
                lines.append(f"{pad}{key}:")
                walk(val, indent + 1)
            elif isinstance(val, list) and val and isinstance(val[0], dict):
                lines.append(f"{pad}{key}:")
                for item in val:
                    lines.append(f"{pad}  -")
                    walk(item, indent + 2)
            elif isinstance(val, list) and len(val) > 8 and all(isinstance(v, str) for v in val):
                lines.append(f"{pad}{key}:")
                lines.extend(f"{pad}  {v}" for v in val)
            else:
                lines.append(f"{pad}{key}: {_fmt(val)}")

    walk(report.get("result", {}), 1)
    if "error" in report:
        lines.append(f"  error: {report['error']}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=None, help="pass threshold (env VEE_TOL)")
    common.add_argument("--samples", type=int, default=None, help="number of sample points")
    common.add_argument("--seed", type=int, default=None, help="sampling seed (env VEE_SEED)")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact", default="auto")
    mode.add_argument("--float", dest="mode", action="store_const", const="float")
    common.add_argument("--output", choices=("text", "json"), default="text")
    common.add_argument("--override", default=None, help="comma separated key=value (h_s, h_l, h, k, k0)")

    parser = argparse.ArgumentParser(prog="vsystems", description="vee-system and open WDVV checks")
    sub = parser.add_subparsers(dest="command", required=True)
    cat = sub.add_parser("catalog", parents=[common], help="list or show catalog systems")
    cat.add_argument("action", choices=("list", "show"))
    cat.add_argument("name", nargs="?")
    chk = sub.add_parser("check", parents=[common], help="run a verification")
    chk.add_argument("kind", choices=("vee", "open-vee", "wdvv", "open-wdvv", "lemma"))
    chk.add_argument("target", help="catalog:NAME[:wN] or a JSON file")
    sup = sub.add_parser("superpotential", parents=[common], help="residue metrics of the superpotential")
    sup.add_argument("target")
    where = sup.add_mutually_exclusive_group()
    where.add_argument("--z", default=None, help="comma separated point, or 'on-discriminant'")
    where.add_argument("--random", type=int, default=None, help="number of random points")
    sol = sub.add_parser("solve-constants", parents=[common], help="solve for the open constants")
    sol.add_argument("target")
    sol.add_argument("--per-weight", action="store_true", help="one constant per weight")
    return parser


COMMANDS = {
    "catalog": cmd_catalog,
    "check": cmd_check,
    "superpotential": cmd_superpotential,
    "solve-constants": cmd_solve,
}


def run(argv: list[str]) -> tuple[int, dict, str]:
    """Execute a command; returns (exit code, JSON-ready report, output format)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_PASS if exc.code == 0 else EXIT_ERROR), {}, "text"
    name = args.command + (f" {args.kind}" if args.command == "check" else "")
    report = {"command": list(argv), "command_name": name}
    start = time.perf_counter()
    try:
        config = resolve_config(args)
        report["config"] = {
            "mode": config["mode"],
            "samples": config["samples"],
            "seed": config["seed"],
            "override": config["override"],
            "tolerances": dict(vars(config["tolerances"])),
        }
        verdict, result = COMMANDS[args.command](args, config)
        report["verdict"] = verdict
        report["result"] = result
        code = {"pass": EXIT_PASS, "info": EXIT_PASS}.get(verdict, EXIT_FAIL)
    except CONFIG_ERRORS as exc:
        report["verdict"] = "error"
        report["error"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_ERROR
    except VSystemError as exc:
        report["verdict"] = "fail"
        report["error"] = f"{type(exc).__name__}: {exc}"
        code = EXIT_FAIL
    report["timing"] = {"seconds": round(time.perf_counter() - start, 4)}
    report["exit_code"] = code
    return code, jsonable(report), args.output


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    code, report, output = run(argv)
    if not report:
        return code
    if output == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(render_text(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
