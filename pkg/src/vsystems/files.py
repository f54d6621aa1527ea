"""JSON system files and catalog references.

A system file::

    {"name": "B2", "dimension": 2, "constraint": null, "normalization_h": "1",
     "covectors": [{"components": [1, 0], "multiplicity": 1}, ...]}

Numbers are integers, decimals or strings ``"p/q"``; in float mode strings
may also be expressions in ``sqrt2`` and ``tau``. An open system file has
``base`` (an inline system or ``"catalog:B:3"``), ``weights`` (component
arrays or ``"orbit-of: w1"`` / ``"orbit-of: 1,0,0"``), ``k`` (number or
array) and optional ``k_zero``. Without ``k`` the constants are solved.
"""
from __future__ import annotations

import ast
import json
import math
import operator
from fractions import Fraction
from pathlib import Path

import numpy as np

from .algebra import is_rational
from .coxeter import TAU, CoxeterSpec, build_root_system, fundamental_weight, weyl_orbit
from .errors import InputError, UnknownName, UnsupportedSpec, UnsupportedWeight
from .openvee import OpenSystem, build_catalog_open_system, catalog_base_spec, open_system_from_orbit
from .veesys import SUM_ZERO, CovectorSystem

CATALOG_PREFIX = "catalog:"

_CONSTANTS = {"sqrt2": math.sqrt(2), "tau": TAU, "sqrt5": math.sqrt(5)}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval_expr(node):
    if isinstance(node, ast.Expression):
        return _eval_expr(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name) and node.id in _CONSTANTS:
        return _CONSTANTS[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_expr(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_expr(node.left), _eval_expr(node.right))
    raise InputError(f"unsupported expression element {ast.dump(node)}")


def parse_scalar(value, exact: bool | None = None):
    """Fraction where possible; float for ``sqrt2``/``tau`` expressions.

    ``exact=True`` rejects irrational literals, ``exact=False`` returns floats.
    """
    if isinstance(value, bool):
        raise InputError(f"not a number: {value!r}")
    if isinstance(value, (int, Fraction)):
        out = Fraction(value)
    elif isinstance(value, float):
        out = Fraction(repr(value)) if math.isfinite(value) else None
        if out is None:
            raise InputError(f"not a finite number: {value!r}")
    elif isinstance(value, str):
        text = value.strip()
        try:
            out = Fraction(text)
        except (ValueError, ZeroDivisionError):
            if exact:
                raise InputError(f"{value!r} is not rational; use --float") from None
            try:
                out = float(_eval_expr(ast.parse(text, mode="eval")))
            except (SyntaxError, ZeroDivisionError) as exc:
                raise InputError(f"cannot parse number {value!r}") from exc
    else:
        raise InputError(f"not a number: {value!r}")
    if exact is False:
        return float(out)
    return out


def format_scalar(x):
    """JSON-friendly scalar: ints, ``"p/q"`` strings or floats."""
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, complex):
        return [float(x.real), float(x.imag)]
    return float(x)


def _scalars(values, exact):
    return [parse_scalar(v, exact) for v in values]


def _finalize(values, exact):
    """Apply the mode: exact requires all rational; otherwise floats if any irrational."""
    if exact is None:
        exact = all(is_rational(v) for v in values)
    if not exact:
        return [float(v) for v in values], False
    if not all(is_rational(v) for v in values):
        raise InputError("irrational entries in exact mode")
    return values, True


# ---------------------------------------------------------------------------
# closed systems


def read_json(source) -> dict:
    if isinstance(source, dict):
        return source
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc}") from exc
    try:
        return json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: invalid JSON ({exc})") from exc


def _file_mode(data: dict, exact):
    """An explicit ``"mode": "float"|"exact"`` in the file applies unless a mode is forced."""
    if exact is not None:
        return exact
    mode = data.get("mode")
    if mode not in (None, "exact", "float"):
        raise InputError(f"unknown mode {mode!r}")
    return None if mode is None else mode == "exact"


def system_from_dict(data: dict, exact: bool | None = None) -> CovectorSystem:
    exact = _file_mode(data, exact)
    try:
        covs = data["covectors"]
    except (KeyError, TypeError):
        raise InputError("system file needs 'covectors'") from None
    comps = [c["components"] if isinstance(c, dict) else c for c in covs]
    mults = [c.get("multiplicity", 1) if isinstance(c, dict) else 1 for c in covs]
    classes = [c.get("class", "") if isinstance(c, dict) else "" for c in covs]
    dim = data.get("dimension")
    if not comps:
        raise InputError("no covectors")
    if any(len(c) != len(comps[0]) for c in comps):
        raise InputError("covectors of different lengths")
    constraint = data.get("constraint")
    if constraint not in (None, SUM_ZERO):
        raise InputError(f"unknown constraint {constraint!r}")
    if dim is not None:
        expected = len(comps[0]) - (1 if constraint == SUM_ZERO else 0)
        if int(dim) != expected:
            raise InputError(f"dimension {dim} does not match covector length {len(comps[0])}")
    flat = _scalars([x for c in comps for x in c] + mults + [data.get("normalization_h", 1)], exact)
    flat, ex = _finalize(flat, exact)
    n = len(comps[0])
    vecs = [flat[i * n:(i + 1) * n] for i in range(len(comps))]
    mu = flat[len(comps) * n: len(comps) * n + len(comps)]
    h = flat[-1]
    return CovectorSystem.from_covectors(
        vecs, mu, h=h, constraint=constraint, name=data.get("name", ""), classes=classes, exact=ex
    )


def system_to_dict(system: CovectorSystem) -> dict:
    covs = []
    for v, m, c in zip(system.vectors, system.multiplicities, system.classes or [""] * len(system)):
        entry = {"components": [format_scalar(x) for x in v], "multiplicity": format_scalar(m)}
        if c:
            entry["class"] = c
        covs.append(entry)
    return {
        "name": system.name,
        "mode": "exact" if system.exact else "float",
        "dimension": system.dim,
        "constraint": system.constraint,
        "normalization_h": format_scalar(system.h),
        "covectors": covs,
    }


def systems_equal(a: CovectorSystem, b: CovectorSystem) -> bool:
    return (
        a.exact == b.exact
        and a.name == b.name
        and a.constraint == b.constraint
        and tuple(a.classes) == tuple(b.classes)
        and a.vectors.shape == b.vectors.shape
        and all(x == y for x, y in zip(a.vectors.flat, b.vectors.flat))
        and all(x == y for x, y in zip(a.multiplicities, b.multiplicities))
        and a.h == b.h
    )


# ---------------------------------------------------------------------------
# catalog references


def parse_catalog_name(text: str) -> tuple[CoxeterSpec, int | None]:
    """``"B:3"`` -> (B3, None); ``"B:3:w1"`` -> (B3, 1); ``"I2:5:w0"`` -> (I2(5), 0)."""
    if text.startswith(CATALOG_PREFIX):
        text = text[len(CATALOG_PREFIX):]
    parts = [p for p in text.split(":") if p]
    weight = None
    if parts and parts[-1].lower().startswith("w") and parts[-1][1:].isdigit():
        weight = int(parts[-1][1:])
        parts = parts[:-1]
    try:
        return CoxeterSpec.parse(":".join(parts)), weight
    except UnsupportedSpec as exc:
        raise UnknownName(f"unknown catalog entry {text!r}: {exc}") from exc


def load_closed(target: str, exact: bool | None = None) -> CovectorSystem:
    """Closed system from ``catalog:NAME`` or a system / open-system file."""
    if target.startswith(CATALOG_PREFIX):
        spec, weight = parse_catalog_name(target)
        if weight is not None:
            return load_open(target, exact).base
        system = build_root_system(spec)
    else:
        data = read_json(target)
        if "base" in data:
            return load_open(data, exact).base
        system = system_from_dict(data, exact)
    return _apply_mode(system, exact)


def _apply_mode(system, exact):
    if exact is False:
        return system.to_float()
    if exact and not system.exact:
        raise InputError(f"{system.name or 'system'} has irrational data; exact mode unavailable")
    return system


# ---------------------------------------------------------------------------
# open systems


def _orbit_seed(text: str, base_spec: CoxeterSpec | None, exact):
    text = text.strip()
    if text.lower().startswith("w") and text[1:].isdigit():
        if base_spec is None:
            raise InputError("'orbit-of: wN' needs a catalog base")
        try:
            return fundamental_weight(catalog_base_spec(base_spec), int(text[1:]))
        except UnsupportedWeight as exc:
            raise InputError(str(exc)) from exc
    vals, _ = _finalize(_scalars(text.split(","), exact), exact)
    return np.array(vals, dtype=object if all(is_rational(v) for v in vals) else float)


def open_from_dict(data: dict, exact: bool | None = None) -> OpenSystem:
    exact = _file_mode(data, exact)
    base_ref = data.get("base")
    if base_ref is None:
        raise InputError("open system file needs 'base'")
    spec = None
    if isinstance(base_ref, str):
        spec, weight = parse_catalog_name(base_ref)
        if weight is not None:
            raise InputError("base reference must be a closed catalog entry")
        base = build_root_system(catalog_base_spec(spec))
    else:
        base = system_from_dict(base_ref, exact)
    if exact is False:
        base = base.to_float()
    weights = data.get("weights")
    name = data.get("name", "")
    if isinstance(weights, str):
        if not weights.startswith("orbit-of:"):
            raise InputError("weights must be a list or 'orbit-of: <weight>'")
        seed = _orbit_seed(weights[len("orbit-of:"):], spec, exact)
        if "k" not in data:
            return open_system_from_orbit(base, seed, name=name)
        weights = [list(w) for w in weyl_orbit(base, seed).elements]
    if not isinstance(weights, list) or not weights:
        raise InputError("weights must be a non-empty list")
    k = data.get("k", 1)
    k_list = k if isinstance(k, list) else [k] * len(weights)
    if len(k_list) != len(weights):
        raise InputError("k has the wrong length")
    k_zero = data.get("k_zero")
    n = base.ambient_dim
    raw = [x for w in weights for x in w] + list(k_list) + ([k_zero] if k_zero is not None else [])
    if any(len(w) != n for w in weights):
        raise InputError(f"weights must have {n} components")
    vals, ex = _finalize(_scalars(raw, exact), exact)
    if not ex:
        base = base.to_float()
    elif not base.exact:
        vals = [float(v) for v in vals]
    w_vals = [vals[i * n:(i + 1) * n] for i in range(len(weights))]
    k_vals = vals[len(weights) * n: len(weights) * n + len(weights)]
    kz = vals[-1] if k_zero is not None else None
    return OpenSystem.create(base, w_vals, k_vals, kz, name=name)


def open_to_dict(open_sys: OpenSystem) -> dict:
    out = {
        "name": open_sys.name,
        "mode": "exact" if open_sys.exact else "float",
        "base": system_to_dict(open_sys.base),
        "weights": [[format_scalar(x) for x in w] for w in open_sys.weights],
        "k": [format_scalar(x) for x in open_sys.k],
    }
    if open_sys.k_zero is not None:
        out["k_zero"] = format_scalar(open_sys.k_zero)
    return out


def open_systems_equal(a: OpenSystem, b: OpenSystem) -> bool:
    return (
        systems_equal(a.base, b.base)
        and a.name == b.name
        and a.weights.shape == b.weights.shape
        and all(x == y for x, y in zip(a.weights.flat, b.weights.flat))
        and all(x == y for x, y in zip(a.k, b.k))
        and a.k_zero == b.k_zero
    )


def load_open(target, exact: bool | None = None) -> OpenSystem:
    """Open system from ``catalog:NAME[:wN]`` or a file / dict."""
    if isinstance(target, str) and target.startswith(CATALOG_PREFIX):
        spec, weight = parse_catalog_name(target)
        open_sys = build_catalog_open_system(spec, weight)
    else:
        open_sys = open_from_dict(read_json(target), exact)
    if exact is False:
        return open_sys.to_float()
    if exact and not open_sys.exact:
        raise InputError(f"{open_sys.name or 'system'} has irrational data; exact mode unavailable")
    return open_sys


def write_json(data: dict, path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")

