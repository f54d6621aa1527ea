"""Open vee-systems: difference decomposition, conditions (A)/(B)/(C) and
solving for the open constants.

For a base point ``b0`` of the weight set the differences ``b0 - b`` split
into those parallel to a root (the bullet part) and the rest (the circle
part). Writing every difference as ``c * d`` for a direction ``d``:

* (A) the bullet directions are exactly the root directions ``d`` with
  ``b0(d^vee) != 0``, and every circle difference is parallel to ``b0``;
* (B) for every such root direction,
  ``sum_bullet k_b c = b0(d^vee) * sum_{gamma || d} h_gamma t_gamma^2``
  where ``gamma = t_gamma d`` runs over the positive roots along ``d``;
* (C) the circle differences along ``b0`` cancel: ``sum k_b c = 0``
  (the zero weight contributes ``k_zero * 1``).

With the metric normalized to the Euclidean one these read
``2k = h_s``, ``k = h_l`` for ``B_n`` and ``2k + k_0 = 0`` for ``D_n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    Tolerances,
    as_array,
    direction_classes,
    float_array,
    is_exact,
    is_rational,
    proportionality,
    zeros,
)
from .coxeter import CoxeterSpec, WeightOrbit, build_root_system, fundamental_weight, weyl_orbit
from .errors import Infeasible, NotConstructible, WeightNotInSystem
from .veesys import CovectorSystem

ZERO = -1

CLASS_SYMBOL = {"short": "h_s", "long": "h_l", "root": "h", "": "h"}


@dataclass(frozen=True, eq=False)
class OpenSystem:
    """Weights ``B`` with constants ``k_b`` over a closed system.

    ``weights`` are ambient components, one per row. ``k_zero`` is ``None``
    unless the zero covector is a formal member of ``B``.
    """

    base: CovectorSystem
    weights: np.ndarray
    k: np.ndarray
    k_zero: object = None
    name: str = ""
    notes: tuple[str, ...] = field(default=())

    @classmethod
    def create(cls, base, weights, k=1, k_zero=None, name="") -> "OpenSystem":
        weights = [list(w) for w in weights]
        if not weights:
            raise ValueError("weight set must be non-empty")
        if np.isscalar(k) or isinstance(k, Fraction):
            k = [k] * len(weights)
        values = [x for w in weights for x in w] + list(k) + ([k_zero] if k_zero is not None else [])
        exact = base.exact and all(is_rational(x) for x in values)
        if not exact:
            base = base.to_float()
        w_arr = as_array(weights, exact)
        for i in range(len(w_arr)):
            for j in range(i):
                if _same(w_arr[i], w_arr[j], exact):
                    raise ValueError(f"duplicate weight {weights[i]}")
        kz = None if k_zero is None else as_array([k_zero], exact)[0]
        return cls(base, w_arr, as_array(k, exact), kz, name or base.name)

    @property
    def exact(self) -> bool:
        return self.base.exact and is_exact(self.weights)

    @property
    def dim(self) -> int:
        return self.base.dim

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def restricted_weights(self) -> np.ndarray:
        return self.weights @ self.base.frame

    def members(self):
        """``(source index, restricted weight, constant)`` including the zero weight."""
        rw = self.restricted_weights
        out = [(i, rw[i], self.k[i]) for i in range(len(rw))]
        if self.k_zero is not None:
            out.append((ZERO, zeros(self.dim, self.exact), self.k_zero))
        return out

    @property
    def total_constant(self):
        total = sum(self.k)
        return total + self.k_zero if self.k_zero is not None else total

    def with_base(self, base: CovectorSystem) -> "OpenSystem":
        exact = base.exact and self.exact
        w = self.weights if exact else float_array(self.weights)
        k = self.k if exact else float_array(self.k)
        kz = self.k_zero if (exact or self.k_zero is None) else float(self.k_zero)
        return OpenSystem(base if exact else base.to_float(), w, k, kz, self.name, self.notes)

    def with_constants(self, k=None, k_zero="keep") -> "OpenSystem":
        k = self.k if k is None else k
        if np.isscalar(k) or isinstance(k, Fraction):
            k = [k] * len(self.weights)
        kz = self.k_zero if k_zero == "keep" else k_zero
        values = list(k) + ([kz] if kz is not None else [])
        exact = self.exact and all(is_rational(x) for x in values)
        base = self.base if exact else self.base.to_float()
        w = self.weights if exact else float_array(self.weights)
        kz_val = None if kz is None else as_array([kz], exact)[0]
        return OpenSystem(base, w, as_array(k, exact), kz_val, self.name, self.notes)

    def to_float(self) -> "OpenSystem":
        if not self.exact:
            return self
        return OpenSystem(
            self.base.to_float(),
            float_array(self.weights),
            float_array(self.k),
            None if self.k_zero is None else float(self.k_zero),
            self.name,
            self.notes,
        )


def _same(a, b, exact):
    if exact:
        return all(x == y for x, y in zip(a, b))
    return bool(np.allclose(a, b, atol=1e-12, rtol=0))


def _is_zero_vec(v, exact, tol):
    if exact:
        return all(x == 0 for x in v)
    return float(np.max(np.abs(np.asarray(v, dtype=float)))) <= tol


# ---------------------------------------------------------------------------
# differences


@dataclass(frozen=True)
class BulletEntry:
    delta: tuple
    root: int
    coefficient: object
    source: int


@dataclass(frozen=True)
class CircleEntry:
    delta: tuple
    source: int


@dataclass(frozen=True)
class DiffDecomposition:
    base_point: int
    bullet: tuple[BulletEntry, ...]
    circle: tuple[CircleEntry, ...]
    root_cover: tuple[int, ...]


def _root_directions(base: CovectorSystem, tol: float):
    """Positive roots grouped by direction; maps root index -> group id."""
    pos = list(base.positive_indices)
    groups = direction_classes(base.restricted[pos], tol)
    groups = [[pos[i] for i in g] for g in groups]
    where = {r: gi for gi, g in enumerate(groups) for r in g}
    return groups, where


def _locate(open_sys: OpenSystem, beta0) -> int:
    if isinstance(beta0, (int, np.integer)):
        if beta0 == ZERO and open_sys.k_zero is not None:
            return ZERO
        if 0 <= beta0 < len(open_sys):
            return int(beta0)
        raise WeightNotInSystem(f"no weight with index {beta0}")
    v = as_array(beta0, open_sys.exact)
    for i, w in enumerate(open_sys.weights):
        if _same(v, w, open_sys.exact) or (
            not open_sys.exact and np.allclose(np.asarray(v, float), np.asarray(w, float), atol=1e-9)
        ):
            return i
    raise WeightNotInSystem(f"{list(beta0)} is not a weight of the system")


def _decompose(open_sys: OpenSystem, idx: int, pairing, tol: float, groups, where):
    base = open_sys.base
    exact = open_sys.exact
    members = open_sys.members()
    b0 = next(w for s, w, _ in members if s == idx)
    roots = base.restricted
    bullet, circle = [], []
    for src, w, _ in members:
        if src == idx:
            continue
        delta = b0 - w
        if _is_zero_vec(delta, exact, tol):
            continue
        match = None
        for g in groups:
            c = proportionality(delta, roots[g[0]], tol)
            if c is not None:
                match = BulletEntry(tuple(delta), g[0], c, src)
                break
        if match is None:
            circle.append(CircleEntry(tuple(delta), src))
        else:
            bullet.append(match)
    cover = tuple(
        r for r in base.positive_indices if not _is_zero_vec([pairing(b0, roots[r])], exact, tol)
    )
    return DiffDecomposition(idx, tuple(bullet), tuple(circle), cover)


def difference_decomposition(
    open_sys: OpenSystem, beta0, tol: float = DEFAULT_TOL.eq
) -> DiffDecomposition:
    """Split ``beta0 - B`` into root-parallel and residual differences.

    The root cover uses the Euclidean pairing of the realization.
    """
    idx = _locate(open_sys, beta0)
    groups, where = _root_directions(open_sys.base, tol)
    return _decompose(open_sys, idx, open_sys.base.euclid_dual_pair, tol, groups, where)


# ---------------------------------------------------------------------------
# conditions


@dataclass(frozen=True)
class Relation:
    condition: str
    direction: int | None
    lhs: object
    rhs: object
    holds: bool
    text: str


@dataclass(frozen=True)
class BasePointRecord:
    base_point: int
    decomposition: DiffDecomposition
    cond_a: bool
    cond_a_detail: tuple[str, ...]
    cond_b: tuple[Relation, ...]
    cond_c: tuple[Relation, ...]

    @property
    def passed(self) -> bool:
        return self.cond_a and all(r.holds for r in self.cond_b) and all(r.holds for r in self.cond_c)


@dataclass(frozen=True)
class OpenVeeReport:
    records: tuple[BasePointRecord, ...]
    passed: bool
    flags: tuple[str, ...] = ("reconstructed-condition",)

    def record(self, base_point: int) -> BasePointRecord:
        return next(r for r in self.records if r.base_point == base_point)

    def failing(self, condition: str) -> list[Relation]:
        out = []
        for rec in self.records:
            out.extend(r for r in (rec.cond_b if condition == "B" else rec.cond_c) if not r.holds)
        return out


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    return str(x)


def _equal_scalars(a, b, exact: bool, tol: float) -> bool:
    if exact:
        return a == b
    return abs(float(a) - float(b)) <= tol * max(1.0, abs(float(a)), abs(float(b)))


def _k_name(src: int, single: bool) -> str:
    if src == ZERO:
        return "k0"
    return "k" if single else f"k[{src}]"


def _evaluate_point(open_sys: OpenSystem, idx: int, tol: Tolerances, groups, where) -> BasePointRecord:
    base = open_sys.base
    exact = open_sys.exact
    metric = base.metric
    dec = _decompose(open_sys, idx, metric.dual_pair, tol.eq, groups, where)
    kmap = {s: c for s, _, c in open_sys.members()}
    single = len(set(_fmt(x) for x in open_sys.k)) == 1
    roots = base.restricted
    mults = base.multiplicities

    if idx == ZERO:
        # residue at x = 0: the weights must cancel along every direction
        deltas = [np.array(e.delta, dtype=roots.dtype) for e in dec.bullet] + [
            np.array(e.delta, dtype=roots.dtype) for e in dec.circle
        ]
        sources = [e.source for e in dec.bullet] + [e.source for e in dec.circle]
        rels = []
        for cls in direction_classes(deltas, tol.eq) if deltas else []:
            ref = deltas[cls[0]]
            total = sum(kmap[sources[i]] * proportionality(deltas[i], ref, tol.eq) for i in cls)
            zero = Fraction(0) if exact else 0.0
            ok = _equal_scalars(total, zero, exact, tol.eq)
            rels.append(Relation("C", None, total, zero, ok, f"sum k*c along {_fmt_vec(ref)} = 0 ({_fmt(total)})"))
        return BasePointRecord(idx, dec, True, (), (), tuple(rels))

    b0 = open_sys.restricted_weights[idx]
    cover_dirs = {where[r] for r in dec.root_cover}
    bullet_dirs = {where[e.root] for e in dec.bullet}
    detail = []
    if cover_dirs - bullet_dirs:
        detail.append(
            "root directions with no matching difference: "
            + ", ".join(_fmt_vec(roots[groups[g][0]]) for g in sorted(cover_dirs - bullet_dirs))
        )
    if bullet_dirs - cover_dirs:
        detail.append(
            "differences along roots orthogonal to the base point: "
            + ", ".join(_fmt_vec(roots[groups[g][0]]) for g in sorted(bullet_dirs - cover_dirs))
        )
    off_axis = [e for e in dec.circle if proportionality(np.array(e.delta, dtype=roots.dtype), b0, tol.eq) is None]
    if off_axis:
        detail.append("residual differences not parallel to the base point: " + ", ".join(_fmt_vec(e.delta) for e in off_axis))
    cond_a = not detail

    cond_b = []
    for g in sorted(cover_dirs | bullet_dirs):
        rep = groups[g][0]
        entries = [e for e in dec.bullet if where[e.root] == g]
        lhs = sum((kmap[e.source] * e.coefficient for e in entries), Fraction(0) if exact else 0.0)
        weight = sum(
            mults[r] * proportionality(roots[r], roots[rep], tol.eq) ** 2 for r in groups[g]
        )
        pair = metric.dual_pair(b0, roots[rep])
        rhs = pair * weight
        ok = _equal_scalars(lhs, rhs, exact, tol.eq)
        lhs_txt = " + ".join(f"{_k_name(e.source, single)}*{_fmt(e.coefficient)}" for e in entries) or "0"
        classes = sorted({base.classes[r] for r in groups[g]})
        h_txt = "+".join(CLASS_SYMBOL.get(c, f"h_{c}") for c in classes)
        sign = "=" if ok else "!="
        text = (
            f"along {_fmt_vec(roots[rep])}: {lhs_txt} {sign} {h_txt}*<b0,a>* "
            f"({_fmt(lhs)} {sign} {_fmt(weight)}*{_fmt(pair)})"
        )
        cond_b.append(Relation("B", rep, lhs, rhs, ok, text))

    on_axis = [e for e in dec.circle if e not in off_axis]
    total = sum(
        (kmap[e.source] * proportionality(np.array(e.delta, dtype=roots.dtype), b0, tol.eq) for e in on_axis),
        Fraction(0) if exact else 0.0,
    )
    zero = Fraction(0) if exact else 0.0
    ok = _equal_scalars(total, zero, exact, tol.eq)
    terms = " + ".join(
        f"{_k_name(e.source, single)}*{_fmt(proportionality(np.array(e.delta, dtype=roots.dtype), b0, tol.eq))}"
        for e in on_axis
    ) or "0"
    cond_c = Relation("C", None, total, zero, ok, f"{terms} {'=' if ok else '!='} 0 ({_fmt(total)})")
    return BasePointRecord(idx, dec, cond_a, tuple(detail), tuple(cond_b), (cond_c,))


def _fmt_vec(v) -> str:
    return "(" + ",".join(_fmt(x) for x in v) + ")"


def check_open_vee(open_sys: OpenSystem, tol: Tolerances = DEFAULT_TOL) -> OpenVeeReport:
    """Evaluate (A), (B), (C) at every base point of ``B`` (and the zero weight)."""
    groups, where = _root_directions(open_sys.base, tol.eq)
    points = list(range(len(open_sys)))
    if open_sys.k_zero is not None:
        points.append(ZERO)
    records = tuple(_evaluate_point(open_sys, i, tol, groups, where) for i in points)
    return OpenVeeReport(records, all(r.passed for r in records))


# ---------------------------------------------------------------------------
# solving for constants


@dataclass(frozen=True)
class ConstantSolution:
    k: object
    k_zero: object
    h: dict
    normalization_h: object
    append_zero: bool
    equations: tuple[str, ...]
    free: tuple[str, ...] = ()
    per_weight_k: tuple = ()

    def as_dict(self) -> dict:
        out = {"k": self.k, "h": dict(self.h), "normalization_h": self.normalization_h}
        if self.append_zero:
            out["k_zero"] = self.k_zero
        return out


class _LinearSystem:
    """Incrementally assembled linear equations ``sum coeff * var = 0``."""

    def __init__(self, names, exact, tol):
        self.names = list(names)
        self.exact = exact
        self.tol = tol
        self.rows = []  # list of (coeff vector, rhs, text)

    def add(self, coeffs: dict, rhs, text: str):
        row = [coeffs.get(n, 0) for n in self.names]
        self.rows.append((row, rhs, text))
        self._check()

    def _matrix(self):
        a = as_array([r[0] for r in self.rows], self.exact)
        b = as_array([[r[1]] for r in self.rows], self.exact)
        return a, b

    def _check(self):
        from .algebra import _eliminate

        a, b = self._matrix()
        m, pivots = _eliminate(a, b, self.tol)
        n = len(self.names)
        for i in range(len(pivots), m.shape[0]):
            resid = m[i, n]
            if (resid != 0) if self.exact else abs(resid) > self.tol * 10:
                raise Infeasible(f"inconsistent relation: {self.rows[-1][2]}", self.rows[-1][2])

    def solve(self):
        from .algebra import _eliminate

        a, b = self._matrix()
        m, pivots = _eliminate(a, b, self.tol)
        n = len(self.names)
        values = {}
        free = [self.names[j] for j in range(n) if j not in pivots]
        one = Fraction(1) if self.exact else 1.0
        for name in free:
            values[name] = one
        for r, p in enumerate(pivots):
            val = m[r, n] - sum(m[r, j] * one for j in range(n) if self.names[j] in free)
            values[self.names[p]] = val
        return values, free


def solve_open_constants(
    base: CovectorSystem,
    orbit,
    assume_single_k: bool = True,
    append_zero: bool | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> ConstantSolution:
    """Solve (A)-(C) for ``k`` (normalized to 1), ``k_zero`` and the ``h_alpha``
    of each root class, with the pairing fixed to the Euclidean one.

    With ``append_zero=None`` the zero weight is appended only if the
    system without it is infeasible.
    """
    if not isinstance(orbit, WeightOrbit):
        orbit = weyl_orbit(base, orbit)
    if append_zero is None:
        try:
            return solve_open_constants(base, orbit, assume_single_k, False, tol)
        except Infeasible as first:
            try:
                return solve_open_constants(base, orbit, assume_single_k, True, tol)
            except Infeasible:
                raise first from None
    exact = base.exact and is_exact(orbit.seed)
    if not exact:
        base = base.to_float()
    weights = [as_array(w, exact) for w in orbit.elements]
    classes = sorted(set(base.classes[i] for i in base.positive_indices))
    k_names = ["k"] if assume_single_k else [f"k[{i}]" for i in range(len(weights))]
    names = k_names + (["k0"] if append_zero else []) + [f"h:{c}" for c in classes]
    one = Fraction(1) if exact else 1.0
    zero = Fraction(0) if exact else 0.0
    system = _LinearSystem(names, exact, max(tol.eq, 1e-12))
    system.add({k_names[0]: one}, one, f"{k_names[0]} = 1")

    open_sys = OpenSystem(
        base, as_array([list(w) for w in weights], exact), as_array([1] * len(weights), exact),
        one if append_zero else None, base.name,
    )
    groups, where = _root_directions(base, tol.eq)
    roots = base.restricted
    rw = open_sys.restricted_weights
    points = [0] if assume_single_k else list(range(len(weights)))

    def kvar(src):
        if src == ZERO:
            return "k0"
        return k_names[0] if assume_single_k else f"k[{src}]"

    for idx in points:
        b0 = rw[idx]
        dec = _decompose(open_sys, idx, base.euclid_dual_pair, tol.eq, groups, where)
        cover_dirs = {where[r] for r in dec.root_cover}
        bullet_dirs = {where[e.root] for e in dec.bullet}
        if cover_dirs != bullet_dirs:
            raise Infeasible("condition (A): difference directions do not match the root hyperplanes", "(A)")
        on_axis = []
        for e in dec.circle:
            c = proportionality(np.array(e.delta, dtype=roots.dtype), b0, tol.eq)
            if c is None:
                raise Infeasible(
                    f"condition (A): residual difference {_fmt_vec(e.delta)} not parallel to the base point",
                    "(A)",
                )
            on_axis.append((e.source, c))
        for g in sorted(bullet_dirs):
            rep = groups[g][0]
            coeffs: dict = {}
            for e in dec.bullet:
                if where[e.root] == g:
                    coeffs[kvar(e.source)] = coeffs.get(kvar(e.source), zero) + e.coefficient
            pair = base.euclid_dual_pair(b0, roots[rep])
            for r in groups[g]:
                t = proportionality(roots[r], roots[rep], tol.eq)
                key = f"h:{base.classes[r]}"
                coeffs[key] = coeffs.get(key, zero) - pair * t * t
            text = " + ".join(f"{_fmt(v)}*{n}" for n, v in coeffs.items()) + " = 0"
            system.add(coeffs, zero, f"(B) along {_fmt_vec(roots[rep])}: {text}")
        if on_axis:
            coeffs = {}
            for src, c in on_axis:
                coeffs[kvar(src)] = coeffs.get(kvar(src), zero) + c
            text = " + ".join(f"{_fmt(v)}*{n}" for n, v in coeffs.items()) + " = 0"
            system.add(coeffs, zero, f"(C): {text}")

    values, free = system.solve()
    h = {c: values[f"h:{c}"] for c in classes}
    # metric normalization: (1/h) sum_{A+} h_alpha alpha alpha^T equals the Euclidean Gram
    solved = base.with_class_multiplicities(h)
    m = zeros((base.dim, base.dim), exact)
    for i in solved.positive_indices:
        m = m + solved.multiplicities[i] * np.outer(solved.restricted[i], solved.restricted[i])
    from .algebra import inverse

    prod = m @ inverse(solved.euclid)
    norm_h = sum(prod[i, i] for i in range(base.dim)) / base.dim
    k_val = values[k_names[0]]
    per = tuple(values[n] for n in k_names) if not assume_single_k else ()
    return ConstantSolution(
        k=k_val,
        k_zero=values.get("k0"),
        h=h,
        normalization_h=norm_h,
        append_zero=bool(append_zero),
        equations=tuple(r[2] for r in system.rows),
        free=tuple(free),
        per_weight_k=per,
    )


# ---------------------------------------------------------------------------
# catalog


def catalog_base_spec(spec: CoxeterSpec) -> CoxeterSpec:
    """G2 open systems are built on the dihedral realization I2(6)."""
    return CoxeterSpec("I2", 6) if spec.family == "G2" else spec


def open_system_from_orbit(base: CovectorSystem, seed, name: str = "", **kwargs) -> OpenSystem:
    orbit = weyl_orbit(base, seed)
    try:
        sol = solve_open_constants(base, orbit, **kwargs)
    except Infeasible as exc:
        raise NotConstructible(f"{name or base.name}: {exc}") from exc
    solved = base.with_class_multiplicities(sol.h).with_h(sol.normalization_h)
    weights = [list(w) for w in orbit.elements]
    k = list(sol.per_weight_k) if sol.per_weight_k else sol.k
    open_sys = OpenSystem.create(solved, weights, k, sol.k_zero if sol.append_zero else None, name)
    return open_sys


def build_catalog_open_system(spec: CoxeterSpec, weight_index: int | None = None) -> OpenSystem:
    """Open system on the Weyl orbit of a catalog weight, constants solved."""
    if weight_index is None:
        weight_index = 0 if spec.family == "I2" else 1
    name = f"{spec.name}:w{weight_index}"
    real = catalog_base_spec(spec)
    if spec.family == "G2":
        if weight_index not in (0, 1):
            raise NotConstructible("G2 open system is built on the I2(6) vertex orbit (w1)")
        weight_index = 0
    base = build_root_system(real)
    seed = fundamental_weight(real, weight_index)
    return open_system_from_orbit(base, seed, name=name)


# ---------------------------------------------------------------------------
# isometries between open systems


@dataclass(frozen=True, eq=False)
class Isometry:
    """Linear map ``matrix`` (ambient of ``source`` to ambient of ``target``)
    carrying weight ``i`` of the source to weight ``permutation[i]``."""

    matrix: np.ndarray
    permutation: tuple[int, ...]
    max_error: float
    roots_mapped: bool


def _independent_rows(vectors, tol):
    chosen = []
    for i, v in enumerate(vectors):
        trial = np.array([vectors[j] for j in chosen] + [v])
        if np.linalg.matrix_rank(trial, tol=tol) == len(trial):
            chosen.append(i)
    return chosen


def _maps_set(mapped, target, tol):
    """Permutation sending each row of ``mapped`` to a row of ``target``, or None."""
    used, perm = set(), []
    for v in mapped:
        hit = next(
            (j for j, w in enumerate(target) if j not in used and np.max(np.abs(v - w)) <= tol), None
        )
        if hit is None:
            return None
        used.add(hit)
        perm.append(hit)
    return perm


def find_isometry(source: OpenSystem, target: OpenSystem, tol: float = 1e-9) -> Isometry | None:
    """Search for a Euclidean isometry matching the weights (with constants)
    of ``source`` onto those of ``target``.

    Candidate maps are fixed by sending a basis of source weights to target
    weights with the same constants and Gram matrix; the first candidate that
    maps the whole weight set bijectively is returned.
    """
    import itertools

    if len(source) != len(target) or source.dim != target.dim:
        return None
    if (source.k_zero is None) != (target.k_zero is None):
        return None
    if source.k_zero is not None and abs(float(source.k_zero) - float(target.k_zero)) > tol:
        return None
    a = float_array(source.weights)
    b = float_array(target.weights)
    ka, kb = float_array(source.k), float_array(target.k)
    basis = _independent_rows(a, 1e-9)
    if len(basis) != source.dim:
        return None
    gram_a = a[basis] @ a[basis].T
    pinv = np.linalg.pinv(a[basis])
    for choice in itertools.permutations(range(len(b)), len(basis)):
        if any(abs(ka[i] - kb[j]) > tol for i, j in zip(basis, choice)):
            continue
        if np.max(np.abs(b[list(choice)] @ b[list(choice)].T - gram_a)) > tol:
            continue
        m = b[list(choice)].T @ pinv  # maps the span of source weights
        perm = _maps_set(a @ m.T, b, tol)
        if perm is None or any(abs(ka[i] - kb[j]) > tol for i, j in enumerate(perm)):
            continue
        err = float(np.max(np.abs(a @ m.T - b[perm])))
        ra = float_array(source.base.vectors)
        rb = float_array(target.base.vectors)
        roots_ok = _maps_set(ra @ m.T, rb, tol) is not None
        return Isometry(m, tuple(perm), err, roots_ok)
    return None
