"""Scalars, covectors, the metric of a covector system and 2-plane enumeration.

Two scalar paths are supported. Exact arrays are numpy arrays of dtype
``object`` holding :class:`fractions.Fraction` entries; float arrays are
ordinary ``float64`` arrays. Every routine here accepts either and keeps the
kind of its input.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np

from .errors import DegenerateMetric, ZeroCovector

if TYPE_CHECKING:
    from .veesys import CovectorSystem


@dataclass(frozen=True)
class Tolerances:
    eq: float = 1e-9
    degenerate: float = 1e-12
    pole: float = 1e-3
    crit: float = 1e-8
    vee: float = 1e-9
    wdvv: float = 1e-8

    def with_eq(self, tol: float) -> "Tolerances":
        return replace(self, eq=tol, vee=tol)


DEFAULT_TOL = Tolerances()


# ---------------------------------------------------------------------------
# scalar helpers


def is_rational(x) -> bool:
    return isinstance(x, numbers.Rational) and not isinstance(x, (bool, np.bool_))


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, numbers.Integral):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot represent {x!r} exactly")


def is_exact(arr) -> bool:
    return isinstance(arr, np.ndarray) and arr.dtype == object


def exact_array(values) -> np.ndarray:
    arr = np.array(values, dtype=object)
    flat = [to_fraction(v) for v in arr.flat]
    out = np.empty(arr.shape, dtype=object)
    out.flat[:] = flat
    return out


def float_array(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.dtype == object:
        return np.array([float(v) for v in arr.flat], dtype=float).reshape(arr.shape)
    return arr.astype(float)


def as_array(values, exact: bool) -> np.ndarray:
    return exact_array(values) if exact else float_array(values)


def zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


def identity(n: int, exact: bool) -> np.ndarray:
    out = zeros((n, n), exact)
    for i in range(n):
        out[i, i] = Fraction(1) if exact else 1.0
    return out


def is_zero(x, tol: float = DEFAULT_TOL.eq) -> bool:
    if is_rational(x):
        return x == 0
    return abs(x) <= tol


def abs_max(arr) -> float:
    arr = np.asarray(arr)
    if arr.size == 0:
        return 0.0
    return float(max(abs(v) for v in arr.flat))


def norm(vec) -> float:
    return math.sqrt(sum(float(v) ** 2 for v in np.asarray(vec).flat))


# ---------------------------------------------------------------------------
# dense linear algebra


def _eliminate(a: np.ndarray, b: np.ndarray, tol: float):
    """Gauss-Jordan elimination of ``[a | b]``; returns (reduced, pivots)."""
    m = np.concatenate([a, b], axis=1)
    rows, cols = a.shape
    exact = is_exact(m)
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        if exact:
            piv = next((i for i in range(r, rows) if m[i, c] != 0), None)
        else:
            i = r + int(np.argmax(np.abs(m[r:, c])))
            piv = i if abs(m[i, c]) > tol else None
        if piv is None:
            continue
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        m[r] = m[r] / m[r, c]
        for i in range(rows):
            if i != r and not (m[i, c] == 0):
                m[i] = m[i] - m[i, c] * m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def solve(a, b, tol: float = DEFAULT_TOL.degenerate) -> np.ndarray:
    """Solve the square system ``a x = b`` (``b`` a vector or matrix)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if not is_exact(a) and not is_exact(b):
        if abs(np.linalg.det(a)) < tol:
            raise DegenerateMetric("singular matrix")
        return np.linalg.solve(a, b)
    a = exact_array(a)
    vec = b.ndim == 1
    bb = exact_array(b.reshape(-1, 1) if vec else b)
    m, pivots = _eliminate(a.copy(), bb, tol)
    if len(pivots) < a.shape[0]:
        raise DegenerateMetric("singular matrix")
    x = m[:, a.shape[1]:]
    return x[:, 0] if vec else x


def inverse(a, tol: float = DEFAULT_TOL.degenerate) -> np.ndarray:
    a = np.asarray(a)
    return solve(a, identity(a.shape[0], is_exact(a)), tol)


def determinant(a) -> float | Fraction:
    a = np.asarray(a)
    if not is_exact(a):
        return float(np.linalg.det(a))
    m = a.copy()
    n = m.shape[0]
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i, c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[[c, piv]] = m[[piv, c]]
            det = -det
        det *= m[c, c]
        for i in range(c + 1, n):
            if m[i, c] != 0:
                m[i] = m[i] - (m[i, c] / m[c, c]) * m[c]
    return det


def rank(a, tol: float = DEFAULT_TOL.eq) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    if not is_exact(a):
        return int(np.linalg.matrix_rank(a, tol=tol * max(1.0, abs_max(a))))
    _, pivots = _eliminate(a.copy(), zeros((a.shape[0], 0), True), 0.0)
    return len(pivots)


# ---------------------------------------------------------------------------
# metric


@dataclass(frozen=True, eq=False)
class MetricData:
    gram: np.ndarray
    gram_inverse: np.ndarray
    normalization_h: object

    @property
    def exact(self) -> bool:
        return is_exact(self.gram)

    def pair(self, u, w):
        """``u^T G w`` for vectors ``u, w`` in V."""
        return u @ self.gram @ w

    def dual_pair(self, a, b):
        """The induced pairing ``a(b^vee)`` of two covectors."""
        return a @ self.gram_inverse @ b

    def is_positive_definite(self) -> bool:
        g = float_array(self.gram)
        return bool(np.all(np.linalg.eigvalsh(g) > 0))


def gram_matrix(system: "CovectorSystem", tol: Tolerances = DEFAULT_TOL) -> MetricData:
    """``G = (1/2h) sum_{alpha in A} h_alpha alpha (x) alpha`` with its inverse."""
    vecs = system.restricted
    h = system.h
    exact = system.exact
    n = vecs.shape[1]
    g = zeros((n, n), exact)
    for a, m in zip(vecs, system.multiplicities):
        g = g + m * np.outer(a, a)
    g = g / (2 * h)
    det = determinant(g)
    if (det == 0) if exact else (abs(det) < tol.degenerate):
        raise DegenerateMetric(f"|det G| = {float(det):.3g}; covectors do not span V*")
    return MetricData(gram=g, gram_inverse=inverse(g, tol.degenerate), normalization_h=h)


def dual_covector(metric: MetricData, alpha) -> np.ndarray:
    return metric.gram_inverse @ alpha


# ---------------------------------------------------------------------------
# parallelism and planes


def _check_nonzero(a) -> None:
    if all(is_zero(v, 0.0) for v in np.asarray(a).flat):
        raise ZeroCovector("zero covector")


def is_parallel(a, b, tol: float = DEFAULT_TOL.eq) -> bool:
    """True iff every 2x2 minor of the pair ``(a, b)`` vanishes."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_nonzero(a)
    _check_nonzero(b)
    exact = is_exact(a) and is_exact(b)
    bound = 0.0 if exact else tol * norm(a) * norm(b)
    n = len(a)
    for i in range(n):
        for j in range(i + 1, n):
            minor = a[i] * b[j] - a[j] * b[i]
            if exact:
                if minor != 0:
                    return False
            elif abs(minor) > bound:
                return False
    return True


def proportionality(a, b, tol: float = DEFAULT_TOL.eq):
    """Return ``c`` with ``a = c * b`` if the two are parallel, else ``None``."""
    if not is_parallel(a, b, tol):
        return None
    b = np.asarray(b)
    j = int(np.argmax([abs(float(v)) for v in b]))
    return a[j] / b[j]


class _Span2:
    """Membership test for the span of two independent covectors."""

    def __init__(self, u, w, tol: float):
        self.exact = is_exact(u) and is_exact(w)
        self.tol = tol
        if self.exact:
            m, pivots = _eliminate(np.array([u, w], dtype=object), zeros((2, 0), True), 0.0)
            self.rows = m
            self.pivots = pivots
        else:
            q, _ = np.linalg.qr(np.array([u, w], dtype=float).T)
            self.q = q

    def contains(self, v) -> bool:
        if self.exact:
            r = v - v[self.pivots[0]] * self.rows[0] - v[self.pivots[1]] * self.rows[1]
            return all(x == 0 for x in r)
        v = np.asarray(v, dtype=float)
        r = v - self.q @ (self.q.T @ v)
        return float(np.linalg.norm(r)) <= self.tol * max(1.0, float(np.linalg.norm(v)))


@dataclass(frozen=True)
class Plane:
    basis: tuple[int, int]
    members: tuple[int, ...]


@dataclass(frozen=True)
class PlanePartition:
    planes: tuple[Plane, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.planes)

    def planes_containing(self, index: int) -> list[tuple[int, Plane]]:
        return [(i, p) for i, p in enumerate(self.planes) if index in p.members]


def direction_classes(vectors, tol: float = DEFAULT_TOL.eq) -> list[list[int]]:
    """Group row indices of ``vectors`` by the line they span."""
    classes: list[list[int]] = []
    for i, v in enumerate(vectors):
        for cls in classes:
            if is_parallel(vectors[cls[0]], v, tol):
                cls.append(i)
                break
        else:
            classes.append([i])
    return classes


def _primitive(v) -> list[int]:
    """Integer multiple of a rational vector with coprime entries."""
    den = math.lcm(*(Fraction(x).denominator for x in v))
    ints = [int(Fraction(x) * den) for x in v]
    g = math.gcd(*ints)
    return [x // g for x in ints]


def _pluecker_key(u: list[int], w: list[int]) -> tuple[int, ...] | None:
    """Normalized Pluecker coordinates of ``span(u, w)``; None if parallel."""
    n = len(u)
    coords = [u[i] * w[j] - u[j] * w[i] for i in range(n) for j in range(i + 1, n)]
    g = math.gcd(*coords)
    if g == 0:
        return None
    lead = next(c for c in coords if c)
    g = g if lead > 0 else -g
    return tuple(c // g for c in coords)


def _exact_planes(vecs, lines, reps) -> PlanePartition:
    ints = [_primitive(vecs[r]) for r in reps]
    found: dict[tuple[int, ...], list] = {}
    for a in range(len(reps)):
        for b in range(a + 1, len(reps)):
            key = _pluecker_key(ints[a], ints[b])
            entry = found.setdefault(key, [(reps[a], reps[b]), set()])
            entry[1].update((a, b))
    planes = [
        Plane(basis=basis, members=tuple(sorted(i for c in inside for i in lines[c])))
        for basis, inside in found.values()
    ]
    return PlanePartition(tuple(planes))


def plane_partition(system: "CovectorSystem", tol: float = DEFAULT_TOL.eq) -> PlanePartition:
    """Every 2-plane spanned by a pair of non-parallel covectors of the system.

    Each plane lists all covectors lying in it (both signs, all parallels).
    """
    vecs = system.restricted
    lines = direction_classes(vecs, tol)
    reps = [cls[0] for cls in lines]
    if is_exact(vecs):
        return _exact_planes(vecs, lines, reps)
    planes: list[Plane] = []
    covered: set[tuple[int, int]] = set()
    for a in range(len(reps)):
        for b in range(a + 1, len(reps)):
            if (a, b) in covered:
                continue
            span = _Span2(vecs[reps[a]], vecs[reps[b]], tol)
            inside = [c for c in range(len(reps)) if span.contains(vecs[reps[c]])]
            covered.update((c, d) for c in inside for d in inside if c < d)
            members = tuple(sorted(i for c in inside for i in lines[c]))
            planes.append(Plane(basis=(reps[a], reps[b]), members=members))
    return PlanePartition(tuple(planes))
