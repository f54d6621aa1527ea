"""Superpotentials ``lambda = c x^{k0} prod_B (x - b(z))^{k_b}`` with
``d_x Omega = log lambda`` and the residue metrics of ``lambda``.

For vector fields ``d_{z_i}`` lifted at fixed ``x`` and ``omega = dx``,

    eta_ij = sum_{x_c} (d_i lambda)(d_j lambda) / lambda''
    g_ij   = sum_{x_c} (d_i lambda)(d_j lambda) / (lambda lambda'')

over the critical points ``lambda'(x_c) = 0``. With ``P_i = d_i log lambda``
and ``L = d_x log lambda`` these become ``sum lambda P_i P_j / L'`` and
``sum P_i P_j / L'``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .algebra import DEFAULT_TOL, MetricData, Tolerances, float_array, is_rational
from .errors import (
    CriticalValueZero,
    DegenerateCritical,
    NonIntegerExponent,
    NonIntegerExponentWarning,
    SamplingExhausted,
)
from .openvee import OpenSystem


def _is_integer(x) -> bool:
    if is_rational(x):
        return x == int(x)
    return abs(float(x) - round(float(x))) <= 1e-9


@dataclass(frozen=True, eq=False)
class Superpotential:
    """``weights`` are restricted covectors (rows) with ``exponents``."""

    weights: np.ndarray
    exponents: np.ndarray
    zero_exponent: object = 0
    constant: object = 1
    name: str = ""
    notes: tuple[str, ...] = field(default=())

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @property
    def integer_exponents(self) -> bool:
        return all(_is_integer(e) for e in self.exponents) and _is_integer(self.zero_exponent)

    def factor_values(self, z) -> np.ndarray:
        return self.weights @ np.asarray(z)

    def value(self, x, z):
        out = self.constant * (x ** self.zero_exponent if self.zero_exponent else 1)
        for b, e in zip(self.factor_values(z), self.exponents):
            out = out * (x - b) ** e
        return out

    def log_derivative(self, x, z):
        """``lambda'/lambda = sum k / (x - b(z)) + k0 / x``; exact for rational input."""
        out = sum(e / (x - b) for b, e in zip(self.factor_values(z), self.exponents))
        if self.zero_exponent:
            out = out + self.zero_exponent / x
        return out

    def log_gradient(self, x, z) -> np.ndarray:
        """``d_{z_i} log lambda = -sum k b_i / (x - b(z))``."""
        vals = self.factor_values(z)
        coeff = np.array([-e / (x - b) for b, e in zip(vals, self.exponents)])
        return coeff @ self.weights

    def describe(self, names=None) -> str:
        """Factored form with the linear forms ``b(z)`` written out."""
        names = names or [f"z{i + 1}" for i in range(self.dim)]
        parts = []
        if self.zero_exponent:
            parts.append(f"x^{_num(self.zero_exponent)}")
        for b, e in zip(self.weights, self.exponents):
            form = _linear(b, names)
            if form.startswith("-"):
                term = f"(x + {_linear(-b, names)})" if " " not in form else f"(x + ({_linear(-b, names)}))"
            else:
                term = f"(x - {form})" if " " not in form else f"(x - ({form}))"
            parts.append(term if e == 1 else f"{term}^{_num(e)}")
        body = " * ".join(parts) or "1"
        return body if self.constant == 1 else f"{_num(self.constant)} * {body}"

    def describe_at(self, z) -> str:
        """Factored form at a point, conjugate factors paired into ``x^2 - r^2``."""
        roots = merged_factors(self, z)
        parts, used = [], set()
        for i, (r, e) in enumerate(roots):
            if i in used or r == 0:
                continue
            j = next(
                (j for j, (s, f) in enumerate(roots) if j not in used and j != i and s == -r and f == e), None
            )
            if j is not None:
                used.update((i, j))
                term = f"(x^2 - {_num(r * r)})"
            else:
                used.add(i)
                term = f"(x - {_num(r)})" if r >= 0 else f"(x + {_num(-r)})"
            parts.append(term if e == 1 else f"{term}^{_num(e)}")
        num = " * ".join(parts) or "1"
        zero = next((e for r, e in roots if r == 0), 0)
        if zero > 0:
            num = f"x^{_num(zero)} * {num}" if zero != 1 else f"x * {num}"
        elif zero < 0:
            num = f"{num} / x^{_num(-zero)}" if zero != -1 else f"{num} / x"
        return num


def _num(x) -> str:
    if is_rational(x):
        return str(x)
    x = float(x)
    return str(int(round(x))) if abs(x - round(x)) <= 1e-12 else f"{x:.10g}"


def _linear(b, names) -> str:
    terms = []
    for c, n in zip(b, names):
        if c == 0:
            continue
        cs = _num(abs(c))
        mag = n if cs == "1" else f"{cs}*{n}"
        terms.append(("- " if c < 0 else "+ ") + mag)
    if not terms:
        return "0"
    out = " ".join(terms)
    return out[2:] if out.startswith("+ ") else "-" + out[2:]


def build_superpotential(open_sys: OpenSystem) -> Superpotential:
    """``lambda`` whose logarithm is ``d_x Omega`` up to an additive constant."""
    k0 = open_sys.k_zero if open_sys.k_zero is not None else 0
    sp = Superpotential(
        weights=open_sys.restricted_weights,
        exponents=open_sys.k,
        zero_exponent=k0,
        name=open_sys.name,
        notes=("overall constant fixed to 1",),
    )
    if not sp.integer_exponents:
        warnings.warn(
            f"{open_sys.name}: non-integer exponents; residue metrics unavailable",
            NonIntegerExponentWarning,
            stacklevel=2,
        )
    return sp


# ---------------------------------------------------------------------------
# critical points


def merged_factors(sp: Superpotential, z, tol: float = DEFAULT_TOL.eq) -> list[tuple]:
    """Distinct zeros/poles ``r_j`` of ``lambda`` with their total exponents."""
    out: list[list] = []
    entries = list(zip(sp.factor_values(z), sp.exponents))
    if sp.zero_exponent:
        entries.append((0 * entries[0][0] if entries else 0, sp.zero_exponent))
    for r, e in entries:
        for item in out:
            same = item[0] == r if (is_rational(r) and is_rational(item[0])) else abs(float(item[0]) - float(r)) <= tol * max(1.0, abs(float(r)))
            if same:
                item[1] = item[1] + e
                break
        else:
            out.append([r, e])
    return [(r, e) for r, e in out if e != 0]


def _numerator(roots, exps) -> np.ndarray:
    """Coefficients (highest first) of ``sum_j e_j prod_{i != j} (x - r_i)``."""
    total = np.zeros(len(roots), dtype=complex)
    for j, e in enumerate(exps):
        others = [r for i, r in enumerate(roots) if i != j]
        poly = np.poly(others) if others else np.array([1.0])
        total[len(total) - len(poly):] += e * poly
    scale = float(np.max(np.abs(total))) if len(total) else 0.0
    k = 0
    while k < len(total) - 1 and abs(total[k]) <= 1e-12 * scale:
        k += 1
    return total[k:]


def _second_derivative(roots, exps, x, j=None):
    """``lambda''(x)`` at a critical point (``j`` set when ``x`` is the zero ``r_j``)."""
    if j is not None:
        if exps[j] != 2:
            return 0.0
        val = 2.0
        for i, (r, e) in enumerate(zip(roots, exps)):
            if i != j:
                val *= (x - r) ** e
        return val
    lam = np.prod([(x - r) ** e for r, e in zip(roots, exps)])
    dl = -sum(e / (x - r) ** 2 for r, e in zip(roots, exps))
    return lam * dl


def critical_points(sp: Superpotential, z, tol: Tolerances = DEFAULT_TOL) -> list:
    """All finite critical points of ``lambda`` (complex ones included)."""
    factors = merged_factors(sp, z, tol.eq)
    roots = [complex(float(r)) for r, _ in factors]
    exps = [float(e) for _, e in factors]
    num = _numerator(roots, exps)
    pts = list(np.roots(num)) if len(num) > 1 else []
    deriv = np.polyder(num) if len(num) > 1 else np.array([0.0])
    refined = []
    for x in pts:
        d = np.polyval(deriv, x)
        if d != 0:
            x = x - np.polyval(num, x) / d
        refined.append(complex(x))
    crit = [(x, None) for x in refined]
    crit += [(roots[j], j) for j, e in enumerate(exps) if e >= 2]
    for x, j in crit:
        if abs(_second_derivative(roots, exps, x, j) * sp.constant) <= tol.crit:
            raise DegenerateCritical(f"lambda''({x:.6g}) vanishes; z is on or near the discriminant")
    return [_clean(x) for x, _ in crit]


def _clean(x: complex):
    return x.real if abs(x.imag) <= 1e-12 * max(1.0, abs(x)) else x


# ---------------------------------------------------------------------------
# residue metrics


@dataclass(frozen=True, eq=False)
class ResidueMetrics:
    z: np.ndarray
    critical_points: tuple
    critical_values: tuple
    g: np.ndarray
    eta: np.ndarray
    imaginary_part: float
    residue_check: float
    min_second_derivative: float


def residue_metrics(sp: Superpotential, z, tol: Tolerances = DEFAULT_TOL, contour_points: int = 1024) -> ResidueMetrics:
    if not sp.integer_exponents:
        raise NonIntegerExponent(f"{sp.name or 'superpotential'} has non-integer exponents")
    z = float_array(z)
    pts = critical_points(sp, z, tol)
    factors = merged_factors(sp, z, tol.eq)
    roots = [complex(float(r)) for r, _ in factors]
    exps = [float(e) for _, e in factors]
    weights = float_array(sp.weights)
    ks = float_array(sp.exponents)
    vals = weights @ z
    scale = max([1.0] + [abs(r) for r in roots]) ** max(1.0, sum(abs(e) for e in exps))
    n = sp.dim
    g = np.zeros((n, n), dtype=complex)
    eta = np.zeros((n, n), dtype=complex)
    crit_vals, min_dd = [], math.inf
    for x in pts:
        x = complex(x)
        lam = sp.constant * np.prod([(x - r) ** e for r, e in zip(roots, exps)])
        crit_vals.append(lam)
        if abs(lam) <= tol.crit * scale:
            raise CriticalValueZero(f"critical value lambda({_clean(x):.6g}) = 0; z is on the discriminant")
        dl = -sum(e / (x - r) ** 2 for r, e in zip(roots, exps))
        min_dd = min(min_dd, abs(lam * dl))
        p = -((ks / (x - vals)) @ weights)
        g += np.outer(p, p) / dl
        eta += lam * np.outer(p, p) / dl
    check = _residue_theorem_defect(g, roots, exps, weights, ks, vals, contour_points)
    imag = float(max(np.max(np.abs(g.imag)), np.max(np.abs(eta.imag))))
    return ResidueMetrics(
        z=z,
        critical_points=tuple(pts),
        critical_values=tuple(_clean(complex(v)) for v in crit_vals),
        g=g.real.copy(),
        eta=eta.real.copy(),
        imaginary_part=imag,
        residue_check=check,
        min_second_derivative=min_dd,
    )


def _residue_theorem_defect(g, roots, exps, weights, ks, vals, m: int) -> float:
    """Relative mismatch between the finite residues of ``P_i P_j / L dx`` and
    its contour integral over a circle enclosing all of them."""
    n = weights.shape[1]
    finite = g.copy()
    for r, e in zip(roots, exps):
        near = np.abs(vals - r.real) <= 1e-9 * max(1.0, abs(r))
        q = -(ks[near] @ weights[near]) if near.any() else np.zeros(n)
        finite += np.outer(q, q) / e
    radius = 2.0 * max([1.0] + [abs(r) for r in roots]) + 1.0
    total = np.zeros((n, n), dtype=complex)
    for t in range(m):
        x = radius * np.exp(2j * math.pi * t / m)
        p = -((ks / (x - vals)) @ weights)
        lder = sum(e / (x - r) for r, e in zip(roots, exps))
        total += np.outer(p, p) / lder * x  # dx = i x dtheta, the i cancels 1/(2 pi i)
    total /= m
    scale = max(1.0, float(np.max(np.abs(finite))))
    return float(np.max(np.abs(finite - total))) / scale


# ---------------------------------------------------------------------------
# comparison with the closed metric


@dataclass(frozen=True)
class FormFit:
    c_star: float
    misfit: float
    worst_misfit: float
    z_variation: float
    samples: int
    per_sample_c: tuple = ()


def _fit(g: np.ndarray, gram: np.ndarray) -> tuple[float, float]:
    c = float(np.sum(g * gram) / np.sum(gram * gram))
    denom = float(np.linalg.norm(c * gram))
    mis = float(np.linalg.norm(g - c * gram)) / denom if denom else math.inf
    return c, mis


def compare_intersection_form(metrics, metric: MetricData) -> FormFit:
    """Least-squares fit ``g ~ c* G`` over one or several residue evaluations."""
    if isinstance(metrics, ResidueMetrics):
        metrics = [metrics]
    gram = float_array(metric.gram)
    gs = [m.g for m in metrics]
    mean = sum(gs) / len(gs)
    c, mis = _fit(mean, gram)
    per = [_fit(g, gram) for g in gs]
    worst = max(p[1] for p in per)
    scale = max(float(np.max(np.abs(mean))), 1e-300)
    var = max(
        (float(np.max(np.abs(a - b))) for i, a in enumerate(gs) for b in gs[i + 1:]), default=0.0
    ) / scale
    return FormFit(c, mis, worst, var, len(gs), tuple(p[0] for p in per))


# ---------------------------------------------------------------------------
# sample points


def random_points(open_sys: OpenSystem, count: int, seed: int = 0, margin: float = 0.05) -> list[np.ndarray]:
    """Seeded points ``z`` in intrinsic coordinates with well separated ``b(z)``
    and off the root hyperplanes."""
    base = open_sys.base.to_float()
    w = float_array(open_sys.restricted_weights)
    roots = base.restricted[list(base.positive_indices)]
    rng = np.random.default_rng(seed)
    out, draws = [], 0
    while len(out) < count and draws < 1000 * max(count, 1):
        draws += 1
        amb = rng.uniform(-1, 1, base.ambient_dim)
        z = base.project(amb) if base.constraint else amb
        vals = w @ z
        gaps = [abs(a - b) for i, a in enumerate(vals) for b in vals[i + 1:]]
        if min(np.abs(roots @ z)) < margin or (gaps and min(gaps) < margin):
            continue
        if open_sys.k_zero is not None and min(np.abs(vals)) < margin:
            continue
        out.append(z)
    if len(out) < count:
        raise SamplingExhausted(f"found {len(out)} of {count} well separated points")
    return out


def discriminant_point(open_sys: OpenSystem, seed: int = 0) -> np.ndarray:
    """A point where two factors of ``lambda`` coincide (a critical value vanishes)."""
    z = random_points(open_sys, 1, seed)[0]
    w = float_array(open_sys.restricted_weights)
    d = w[0] - w[1]
    return z - (d @ z) / (d @ d) * d
