"""Root systems of finite Coxeter groups, fundamental weights and Weyl orbits.

Realizations follow the standard coordinates: ``A_n`` lives on the
hyperplane ``sum z_i = 0`` of R^{n+1}, ``B_n`` and ``D_n`` on R^n, the
crystallographic ``G_2`` on the sum-zero plane of R^3, ``I_2(N)`` on R^2
with all roots of squared length two and ``H_3`` on R^3. Reflections use
the Euclidean product of the realization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .algebra import DEFAULT_TOL, as_array, exact_array, is_exact, is_rational, is_zero, proportionality
from .errors import OrbitOverflow, UnsupportedSpec, UnsupportedWeight
from .veesys import SUM_ZERO, CovectorSystem

TAU = (1 + math.sqrt(5)) / 2
SQRT2 = math.sqrt(2)

FAMILIES = ("A", "B", "D", "G2", "I2", "H3")


@dataclass(frozen=True)
class CoxeterSpec:
    family: str
    rank: int = 0
    h_s: object = 1
    h_l: object = 1

    def __post_init__(self):
        fam = self.family.upper()
        object.__setattr__(self, "family", fam)
        if fam == "G2":
            object.__setattr__(self, "rank", 2)
        elif fam == "H3":
            object.__setattr__(self, "rank", 3)
        if fam not in FAMILIES:
            raise UnsupportedSpec(f"unknown family {self.family!r}")
        if fam == "I2" and self.rank < 2:
            raise UnsupportedSpec("I2(N) needs N >= 2")
        if fam in ("A", "B") and self.rank < 1:
            raise UnsupportedSpec(f"{fam}_n needs n >= 1")
        if fam == "D" and self.rank < 2:
            raise UnsupportedSpec("D_n needs n >= 2")

    @classmethod
    def parse(cls, text: str) -> "CoxeterSpec":
        """Parse ``"B:3"``, ``"I2:5"``, ``"G2"``, ``"H3"``."""
        parts = [p for p in text.strip().split(":") if p]
        if not parts:
            raise UnsupportedSpec("empty name")
        fam = parts[0].upper()
        if fam in ("G2", "H3"):
            if len(parts) > 1:
                raise UnsupportedSpec(f"{fam} takes no parameter")
            return cls(fam)
        if len(parts) != 2:
            raise UnsupportedSpec(f"{text!r}: expected family:rank")
        try:
            rank = int(parts[1])
        except ValueError:
            raise UnsupportedSpec(f"{text!r}: bad rank") from None
        return cls(fam, rank)

    @property
    def name(self) -> str:
        if self.family in ("G2", "H3"):
            return self.family
        return f"{self.family}:{self.rank}"

    @property
    def crystallographic(self) -> bool:
        return self.family in ("A", "B", "D", "G2")

    @property
    def weight_indices(self) -> tuple[int, ...]:
        if self.family == "I2":
            return tuple(range(self.rank))
        if self.family == "H3":
            return (1,)
        return tuple(range(1, self.rank + 1))


def _unit(n: int, i: int) -> list[Fraction]:
    v = [Fraction(0)] * n
    v[i] = Fraction(1)
    return v


def _combo(n: int, terms) -> list[Fraction]:
    v = [Fraction(0)] * n
    for i, c in terms:
        v[i] += Fraction(c)
    return v


def _root_data(spec: CoxeterSpec):
    """Positive roots, their classes, and the constraint of the realization."""
    fam, n = spec.family, spec.rank
    if fam == "A":
        dim = n + 1
        roots = [_combo(dim, [(i, 1), (j, -1)]) for i in range(dim) for j in range(i + 1, dim)]
        return roots, ["root"] * len(roots), SUM_ZERO
    if fam == "B":
        short = [_unit(n, i) for i in range(n)]
        long = [_combo(n, [(i, 1), (j, s)]) for i in range(n) for j in range(i + 1, n) for s in (1, -1)]
        return short + long, ["short"] * len(short) + ["long"] * len(long), None
    if fam == "D":
        roots = [_combo(n, [(i, 1), (j, s)]) for i in range(n) for j in range(i + 1, n) for s in (1, -1)]
        return roots, ["root"] * len(roots), None
    if fam == "G2":
        short = [_combo(3, [(i, 1), (j, -1)]) for i in range(3) for j in range(i + 1, 3)]
        long = []
        for i in range(3):
            j, k = [m for m in range(3) if m != i]
            long.append(_combo(3, [(i, 2), (j, -1), (k, -1)]))
        return short + long, ["short"] * 3 + ["long"] * 3, SUM_ZERO
    if fam == "I2":
        roots = []
        for p in range(n):
            ang = math.pi / 2 + math.pi * p / n
            roots.append([SQRT2 * math.cos(ang), SQRT2 * math.sin(ang)])
        return roots, ["root"] * n, None
    if fam == "H3":
        base = [[SQRT2, 0.0, 0.0]]
        for s1 in (1, -1):
            for s2 in (1, -1):
                for s3 in (1, -1):
                    base.append([s1 * TAU / SQRT2, s2 / SQRT2, s3 / (TAU * SQRT2)])
        roots = []
        for v in base:
            for shift in range(3):
                roots.append([v[(k - shift) % 3] for k in range(3)])
        return roots, ["root"] * len(roots), None
    raise UnsupportedSpec(fam)


def build_root_system(spec: CoxeterSpec, h=1) -> CovectorSystem:
    """The full signed root system with multiplicities ``h_s``/``h_l`` by root class."""
    roots, classes, constraint = _root_data(spec)
    mults = [spec.h_l if c == "long" else spec.h_s for c in classes]
    return CovectorSystem.from_covectors(
        roots, multiplicities=mults, h=h, constraint=constraint, name=spec.name, classes=classes
    )


def fundamental_weight(spec: CoxeterSpec, index: int) -> np.ndarray:
    fam, n = spec.family, spec.rank
    if fam == "I2":
        if not 0 <= index < n:
            raise UnsupportedWeight(f"I2({n}) has vertices 0..{n - 1}")
        ang = 2 * math.pi * index / n
        return np.array([math.cos(ang), math.sin(ang)])
    if fam == "H3":
        if index != 1:
            raise UnsupportedWeight("only the 12-element H3 orbit seed (index 1) is catalogued")
        return np.array([1.0, TAU, 0.0])
    if fam == "G2":
        table = {1: [0, -1, 1], 2: [-1, -1, 2]}
        if index not in table:
            raise UnsupportedWeight("G2 has weights 1, 2")
        return exact_array(table[index])
    if not 1 <= index <= n:
        raise UnsupportedWeight(f"{spec.name} has weights 1..{n}")
    half = Fraction(1, 2)
    if fam == "A":
        k = index
        return exact_array([Fraction(1 if i < k else 0) - Fraction(k, n + 1) for i in range(n + 1)])
    if fam == "B":
        if index < n or index == 1:
            return exact_array([1 if i < index else 0 for i in range(n)])
        return exact_array([half] * n)
    if fam == "D":
        if index <= n - 2:
            return exact_array([1 if i < index else 0 for i in range(n)])
        if index == n - 1:
            return exact_array([half] * (n - 1) + [-half])
        return exact_array([half] * n)
    raise UnsupportedWeight(fam)


# ---------------------------------------------------------------------------
# orbits


@dataclass(frozen=True, eq=False)
class WeightOrbit:
    seed: np.ndarray
    elements: tuple[np.ndarray, ...]
    reflections: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.elements)


def _key(v, exact: bool):
    if exact:
        return tuple(v)
    return tuple(round(float(x), 7) + 0.0 for x in v)


def reflect(root, v):
    return v - (2 * (root @ v) / (root @ root)) * root


def weyl_orbit(system: CovectorSystem, seed, bound: int = 100_000) -> WeightOrbit:
    """Closure of ``seed`` under the reflections in the positive covectors."""
    exact = system.exact and all(is_rational(x) for x in np.asarray(seed, dtype=object).flat)
    seed = as_array(seed, exact)
    if all(is_zero(x, 0.0) for x in seed):
        raise ValueError("seed must be non-zero")
    roots = [as_array(system.vectors[i], exact) for i in system.positive_indices]
    seen = {_key(seed, exact): seed}
    frontier = [seed]
    used = set()
    while frontier:
        nxt = []
        for v in frontier:
            for r_idx, r in enumerate(roots):
                w = reflect(r, v)
                k = _key(w, exact)
                if k not in seen:
                    seen[k] = w
                    nxt.append(w)
                    used.add(system.positive_indices[r_idx])
                    if len(seen) > bound:
                        raise OrbitOverflow(f"orbit exceeds {bound} elements")
        frontier = nxt
    return WeightOrbit(seed=seed, elements=tuple(seen.values()), reflections=tuple(sorted(used)))


@dataclass(frozen=True)
class SmallnessWitness:
    element: tuple
    difference: tuple
    root: int | None
    constant: object


@dataclass(frozen=True)
class SmallnessReport:
    is_small: bool
    mode: str
    orbit_size: int
    witnesses: tuple[SmallnessWitness, ...]

    @property
    def constants(self) -> list:
        return [w.constant for w in self.witnesses if w.constant is not None]


def _equal(a, b, exact: bool, tol: float) -> bool:
    if exact:
        return all(x == y for x, y in zip(a, b))
    return bool(np.allclose(np.asarray(a, float), np.asarray(b, float), atol=tol, rtol=0))


def small_orbit_check(
    system: CovectorSystem, seed, mode: str = "strict", tol: float = DEFAULT_TOL.eq
) -> SmallnessReport:
    """Is ``seed - w(seed)`` a root (strict) or parallel to a root (proportional)
    for every orbit element ``w(seed) != +-seed``?"""
    if mode not in ("strict", "proportional"):
        raise ValueError(f"unknown mode {mode!r}")
    orbit = weyl_orbit(system, seed)
    exact = is_exact(orbit.seed)
    seed = orbit.seed
    roots = [as_array(system.vectors[i], exact) for i in range(len(system))]
    positives = system.positive_indices
    witnesses = []
    small = True
    for w in orbit.elements:
        if _equal(w, seed, exact, tol) or _equal(w, -seed, exact, tol):
            continue
        delta = seed - w
        match, const = None, None
        if mode == "strict":
            for i, r in enumerate(roots):
                if _equal(delta, r, exact, tol):
                    match, const = i, (Fraction(1) if exact else 1.0)
                    break
        else:
            for i in positives:
                c = proportionality(delta, roots[i], tol)
                if c is not None:
                    match, const = i, c
                    break
        if match is None:
            small = False
        witnesses.append(
            SmallnessWitness(tuple(w), tuple(delta), match, const)
        )
    return SmallnessReport(small, mode, len(orbit), tuple(witnesses))
