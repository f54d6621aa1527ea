"""Derivatives of the closed and open logarithmic prepotentials and the
(open) WDVV residuals built from them.

Points are given in intrinsic coordinates of V (see
:meth:`CovectorSystem.restrict`); an ambient point of a sum-zero system is
projected first. With ``alpha`` a restricted covector, ``alpha(v)`` is the
plain dot product.

    F(v)     = 1/2 sum_{A+} h a(v)^2 log|a(v)|
    Omega    = sum_B k (x - b(z)) log|x - b(z)| + k0 x log|x|

Third derivatives of F and second derivatives of Omega are rational, so in
exact mode every residual is an exact verdict.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .algebra import DEFAULT_TOL, Tolerances, as_array, float_array, inverse, is_exact, is_rational, norm, zeros
from .errors import LemmaViolation, PoleTooClose, SamplingExhausted
from .openvee import OpenSystem
from .veesys import CovectorSystem


def _point(system: CovectorSystem, v, exact: bool) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError("point must be a vector")
    if len(v) == system.dim:
        return as_array(v, exact)
    if len(v) == system.ambient_dim:
        return as_array(system.project(as_array(v, exact and system.exact)), exact)
    raise ValueError(f"point has {len(v)} components; expected {system.dim}")


def _mode(system: CovectorSystem, *values) -> tuple[CovectorSystem, bool]:
    exact = system.exact and all(is_rational(x) for v in values for x in np.ravel(v))
    return (system if exact else system.to_float()), exact


def _log_abs(x) -> float:
    return math.log(abs(float(x)))


# ---------------------------------------------------------------------------
# closed prepotential


@dataclass(frozen=True, eq=False)
class ClosedJet:
    point: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    c3: np.ndarray
    exact: bool


def _closed_poles(system: CovectorSystem, v, tol: Tolerances):
    roots = system.restricted
    scale = norm(v)
    out = []
    for i in system.positive_indices:
        a = roots[i]
        val = a @ v
        if abs(float(val)) <= tol.pole * norm(a) * scale or val == 0:
            out.append(i)
    return out


def closed_jet(system: CovectorSystem, v, tol: Tolerances = DEFAULT_TOL) -> ClosedJet:
    system, exact = _mode(system, v)
    v = _point(system, v, exact)
    bad = _closed_poles(system, v, tol)
    if bad:
        raise PoleTooClose(
            f"point within pole distance of covector {list(system.vectors[bad[0]])}",
            offending=tuple(system.vectors[bad[0]]),
        )
    n = system.dim
    roots = system.restricted
    mults = system.multiplicities
    value = 0.0
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    for i in system.positive_indices:
        a, h = roots[i], mults[i]
        t = a @ v
        lg = _log_abs(t)
        af = float_array(a)
        hf, tf = float(h), float(t)
        value += 0.5 * hf * tf * tf * lg
        grad += hf * tf * (lg + 0.5) * af
        hess += hf * (lg + 1.5) * np.outer(af, af)
    pos_roots, _, outer = _root_tables(system)
    pos_mults = mults[list(system.positive_indices)]
    weights = np.array([h / t for h, t in zip(pos_mults, pos_roots @ v)], dtype=pos_roots.dtype)
    c3 = ((pos_roots * weights[:, None]).T @ outer).reshape(n, n, n)
    return ClosedJet(v, value, grad, hess, c3, exact)


def multiplication_matrices(system: CovectorSystem, c3: np.ndarray) -> list[np.ndarray]:
    """``C_i = G^{-1} c_{i..}``, the matrices of multiplication by ``e_i``."""
    ginv = system.metric.gram_inverse
    if not is_exact(c3):
        ginv = float_array(ginv)
    return [ginv @ c3[i] for i in range(c3.shape[0])]


def _fro(m) -> float:
    return math.sqrt(sum(float(x) ** 2 for x in np.ravel(m)))


def wdvv_residual_closed(
    system: CovectorSystem,
    v,
    form: str = "commutator",
    reference: int | None = None,
    tol: Tolerances = DEFAULT_TOL,
):
    """Associativity defect of the product with structure constants ``c3``.

    ``form="commutator"``: max over pairs of ``||[C_i, C_j]|| / (||C_i|| ||C_j||)``.
    ``form="reference"``: with ``F_i = c_{i..}``, max asymmetry of
    ``F_i R^{-1} F_j`` in ``(i, j)``, where ``R = F_k`` for a given
    ``reference`` index ``k`` and otherwise ``R = c(v, ., .)``, which equals
    ``h G`` and is always invertible. Exact mode returns ``Fraction(0)`` when
    every defect vanishes identically.
    """
    jet = closed_jet(system, v, tol)
    system = system if jet.exact else system.to_float()
    n = system.dim
    if n < 2:
        return Fraction(0) if jet.exact else 0.0
    if form == "commutator":
        return commutator_defect(multiplication_matrices(system, jet.c3), jet.exact)
    if form == "reference":
        f = [jet.c3[i] for i in range(n)]
        ref = np.tensordot(jet.c3, jet.point, axes=([0], [0])) if reference is None else f[reference]
        finv = inverse(ref)
        pairs = []
        for i in range(n):
            for j in range(i + 1, n):
                a = f[i] @ finv @ f[j]
                b = f[j] @ finv @ f[i]
                pairs.append((a - b, _fro(f[i]) * _fro(finv) * _fro(f[j])))
    else:
        raise ValueError(f"unknown form {form!r}")
    return _defect(pairs, jet.exact)


def _defect(pairs, exact: bool):
    if exact and all(all(x == 0 for x in np.ravel(d)) for d, _ in pairs):
        return Fraction(0)
    return max(_fro(d) / s if s else _fro(d) for d, s in pairs)


def commutator_defect(mats, exact: bool):
    """``max_{i<j} ||[C_i, C_j]|| / (||C_i|| ||C_j||)``."""
    n = len(mats)
    if n < 2:
        return Fraction(0) if exact else 0.0
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            pairs.append((mats[i] @ mats[j] - mats[j] @ mats[i], _fro(mats[i]) * _fro(mats[j])))
    return _defect(pairs, exact)


# ---------------------------------------------------------------------------
# open prepotential


@dataclass(frozen=True, eq=False)
class OpenJet:
    """Derivatives of Omega at ``(x, z)``; ``structure[a, m, n] = c^a_{mn}(z)``."""

    x: object
    z: np.ndarray
    value: float
    omega_x: float
    omega_z: np.ndarray
    omega_xx: object
    omega_xz: np.ndarray
    omega_zz: np.ndarray
    structure: np.ndarray
    exact: bool


def _open_mode(open_sys: OpenSystem, x, z):
    exact = open_sys.exact and is_rational(x) and all(is_rational(t) for t in np.ravel(z))
    if not exact:
        open_sys = open_sys.to_float()
    base = open_sys.base
    zz = _point(base, z, exact)
    xx = Fraction(x) if exact else float(x)
    return open_sys, exact, xx, zz


def _open_poles(open_sys: OpenSystem, x, z, tol: Tolerances):
    scale_z = norm(z)
    for i, b in enumerate(open_sys.restricted_weights):
        d = x - b @ z
        if d == 0 or abs(float(d)) <= tol.pole * (abs(float(x)) + norm(b) * scale_z):
            return tuple(open_sys.weights[i])
    if open_sys.k_zero is not None:
        if x == 0 or abs(float(x)) <= tol.pole * (abs(float(x)) + scale_z):
            return "zero"
    return None


_TABLES: "weakref.WeakKeyDictionary[CovectorSystem, tuple]" = weakref.WeakKeyDictionary()


def _root_tables(system: CovectorSystem):
    """Positive roots, ``h_g g^vee`` and ``g (x) g`` rows, cached per system."""
    if system not in _TABLES:
        pos = list(system.positive_indices)
        roots = system.restricted[pos]
        duals = (system.metric.gram_inverse @ roots.T).T * system.multiplicities[pos][:, None]
        outer = np.stack([np.outer(g, g).ravel() for g in roots])
        _TABLES[system] = (roots, duals, outer)
    return _TABLES[system]


def structure_constants(system: CovectorSystem, z, exact: bool | None = None) -> np.ndarray:
    """``c^a_{mn}(z) = sum_{A+} h_g / g(z) (g^vee)^a g_m g_n``."""
    n = system.dim
    roots, duals, outer = _root_tables(system)
    inv = np.array([1 / t for t in roots @ z], dtype=roots.dtype)
    return ((duals * inv[:, None]).T @ outer).reshape(n, n, n)


def open_jet(open_sys: OpenSystem, x, z, tol: Tolerances = DEFAULT_TOL) -> OpenJet:
    open_sys, exact, x, z = _open_mode(open_sys, x, z)
    base = open_sys.base
    bad = _open_poles(open_sys, x, z, tol)
    if bad is not None:
        raise PoleTooClose(f"(x, z) within pole distance of weight {bad}", offending=bad)
    if _closed_poles(base, z, tol):
        raise PoleTooClose("z within pole distance of a root hyperplane", offending="root")
    n = base.dim
    value, omega_x = 0.0, 0.0
    omega_z = np.zeros(n)
    oxx = Fraction(0) if exact else 0.0
    oxz = zeros(n, exact)
    ozz = zeros((n, n), exact)
    for b, k in zip(open_sys.restricted_weights, open_sys.k):
        d = x - b @ z
        lg = _log_abs(d)
        kf, df = float(k), float(d)
        value += kf * df * lg
        omega_x += kf * (lg + 1)
        omega_z -= kf * (lg + 1) * float_array(b)
        oxx = oxx + k / d
        oxz = oxz - (k / d) * b
        ozz = ozz + (k / d) * np.outer(b, b)
    if open_sys.k_zero is not None:
        k0 = open_sys.k_zero
        lg = _log_abs(x)
        value += float(k0) * float(x) * lg
        omega_x += float(k0) * (lg + 1)
        oxx = oxx + k0 / x
    return OpenJet(
        x, z, value, omega_x, omega_z, oxx, oxz, ozz, structure_constants(base, z), exact
    )


def _relative(diff, terms, exact: bool):
    if exact and all(x == 0 for x in np.ravel(diff)):
        return Fraction(0)
    scale = max((abs(float(t)) for arr in terms for t in np.ravel(arr)), default=0.0)
    top = max((abs(float(t)) for t in np.ravel(diff)), default=0.0)
    return top / scale if scale else top


def open_equations(jet: OpenJet):
    """Left- and right-hand sides of the two open WDVV sets.

    set 2: ``c^a_{mn} W'_a + W'' W_{mn} = W'_m W'_n``
    set 1: ``L_{mnr} = c^a_{mn} W_{ar} + W'_r W_{mn}`` symmetric in ``m <-> r``
    (``W'_a = d_x d_a Omega``, ``W_{mn} = d_m d_n Omega``).
    """
    c = jet.structure
    first = np.tensordot(c, jet.omega_xz, axes=([0], [0]))
    second = jet.omega_xx * jet.omega_zz
    rhs2 = np.outer(jet.omega_xz, jet.omega_xz)
    lhs1 = np.tensordot(c, jet.omega_zz, axes=([0], [0])) + np.einsum(
        "r,mn->mnr", jet.omega_xz, jet.omega_zz, dtype=object if jet.exact else float
    )
    return (first, second, rhs2), lhs1


def open_residuals(jet: OpenJet):
    """``(set1, set2)`` relative residuals at one point."""
    (first, second, rhs2), lhs1 = open_equations(jet)
    set2 = _relative(first + second - rhs2, (first, second, rhs2), jet.exact)
    swapped = np.transpose(lhs1, (2, 1, 0))
    set1 = _relative(lhs1 - swapped, (lhs1,), jet.exact)
    return set1, set2


# ---------------------------------------------------------------------------
# sampling and reports


def _draw(rng, exact: bool, size: int, denominator: int = 64):
    if exact:
        return [Fraction(int(rng.integers(-denominator, denominator + 1)), denominator) for _ in range(size)]
    return list(rng.uniform(-1.0, 1.0, size))


def sample_open_points(
    open_sys: OpenSystem, count: int, seed: int = 0, exact: bool | None = None, tol: Tolerances = DEFAULT_TOL
):
    """Seeded admissible points ``(x, z)`` drawn from ``[-1, 1]^{1+N}``."""
    exact = open_sys.exact if exact is None else (exact and open_sys.exact)
    sys_ = open_sys if exact else open_sys.to_float()
    base = sys_.base
    rng = np.random.default_rng(seed)
    out = []
    draws = 0
    while len(out) < count:
        if draws >= 1000 * max(count, 1):
            raise SamplingExhausted(f"found {len(out)} of {count} admissible points in {draws} draws")
        draws += 1
        vals = _draw(rng, exact, 1 + base.ambient_dim)
        x = vals[0]
        z = base.project(as_array(vals[1:], exact)) if base.constraint else as_array(vals[1:], exact)
        if norm(z) == 0 or _closed_poles(base, z, tol) or _open_poles(sys_, x, z, tol) is not None:
            continue
        out.append((x, z))
    return out


def sample_closed_points(
    system: CovectorSystem, count: int, seed: int = 0, exact: bool | None = None, tol: Tolerances = DEFAULT_TOL
):
    exact = system.exact if exact is None else (exact and system.exact)
    system = system if exact else system.to_float()
    rng = np.random.default_rng(seed)
    out, draws = [], 0
    while len(out) < count:
        if draws >= 1000 * max(count, 1):
            raise SamplingExhausted(f"found {len(out)} of {count} admissible points in {draws} draws")
        draws += 1
        vals = as_array(_draw(rng, exact, system.ambient_dim), exact)
        z = system.project(vals) if system.constraint else vals
        if norm(z) == 0 or _closed_poles(system, z, tol):
            continue
        out.append(z)
    return out


@dataclass(frozen=True, eq=False)
class ResidualReport:
    samples: tuple
    closed_residual: object
    open_residual_set1: object
    open_residual_set2: object
    per_sample_set1: tuple
    per_sample_set2: tuple
    per_sample_closed: tuple
    exact: bool
    tolerance: float
    seed: int = 0

    def _ok(self, value) -> bool:
        if self.exact:
            return value == 0
        return float(value) <= self.tolerance

    @property
    def closed_passed(self) -> bool:
        return self._ok(self.closed_residual)

    @property
    def set1_passed(self) -> bool:
        return self._ok(self.open_residual_set1)

    @property
    def set2_passed(self) -> bool:
        return self._ok(self.open_residual_set2)

    @property
    def passed(self) -> bool:
        return self.closed_passed and self.set1_passed and self.set2_passed

    def count_above(self, threshold: float, which: str = "set2") -> int:
        values = self.per_sample_set2 if which == "set2" else self.per_sample_set1
        return sum(1 for r in values if float(r) > threshold)


def _max(values, exact: bool):
    if exact and all(v == 0 for v in values):
        return Fraction(0)
    return max((float(v) for v in values), default=0.0)


def open_wdvv_residual(
    open_sys: OpenSystem,
    samples: int = 100,
    seed: int = 0,
    exact: bool | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> ResidualReport:
    """Closed and open WDVV residuals at ``samples`` seeded admissible points."""
    exact = open_sys.exact if exact is None else (exact and open_sys.exact)
    sys_ = open_sys if exact else open_sys.to_float()
    points = sample_open_points(sys_, samples, seed, exact, tol)
    s1, s2, sc = [], [], []
    for x, z in points:
        jet = open_jet(sys_, x, z, tol)
        r1, r2 = open_residuals(jet)
        s1.append(r1)
        s2.append(r2)
        # C_i[a, n] = c^a_{in}: the closed product read off the same jet
        mats = [jet.structure[:, i, :] for i in range(jet.structure.shape[1])]
        sc.append(commutator_defect(mats, exact))
    return ResidualReport(
        samples=tuple(points),
        closed_residual=_max(sc, exact),
        open_residual_set1=_max(s1, exact),
        open_residual_set2=_max(s2, exact),
        per_sample_set1=tuple(s1),
        per_sample_set2=tuple(s2),
        per_sample_closed=tuple(sc),
        exact=exact,
        tolerance=tol.wdvv,
        seed=seed,
    )


@dataclass(frozen=True)
class LemmaReport:
    status: str  # "ok", "vacuous" or "trivial"
    qualifying: int
    samples: int
    worst_set1: object = 0.0
    notes: tuple[str, ...] = field(default=())


def auxiliary_lemma_check(
    open_sys: OpenSystem,
    samples: int = 100,
    seed: int = 0,
    exact: bool | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> LemmaReport:
    """Wherever set 2 holds and ``Omega'' != 0``, set 1 must hold as well."""
    if open_sys.dim == 1:
        return LemmaReport("trivial", 0, samples, Fraction(0), ("set 1 is empty in dimension one",))
    exact = open_sys.exact if exact is None else (exact and open_sys.exact)
    sys_ = open_sys if exact else open_sys.to_float()
    qualifying, worst = 0, Fraction(0) if exact else 0.0
    for x, z in sample_open_points(sys_, samples, seed, exact, tol):
        jet = open_jet(sys_, x, z, tol)
        r1, r2 = open_residuals(jet)
        ok2 = r2 == 0 if exact else r2 <= tol.wdvv
        if not ok2 or abs(float(jet.omega_xx)) <= tol.pole:
            continue
        qualifying += 1
        ok1 = r1 == 0 if exact else r1 <= tol.wdvv
        if not ok1:
            raise LemmaViolation(f"set 2 holds but set 1 fails at x={x}, z={list(z)} (residual {float(r1):.3g})")
        worst = max(worst, r1) if exact else max(worst, float(r1))
    return LemmaReport("ok" if qualifying else "vacuous", qualifying, samples, worst)


def eval_prepotentials(open_sys: OpenSystem, x, z, tol: Tolerances = DEFAULT_TOL) -> tuple[float, float]:
    """``(F(z), Omega(x, z))`` on the real branch."""
    jet = open_jet(open_sys, x, z, tol)
    base = open_sys.base if jet.exact else open_sys.base.to_float()
    return closed_jet(base, jet.z, tol).value, jet.value


# ---------------------------------------------------------------------------
# finite-difference checks


# stencil offsets only have to avoid the singularities themselves
_STENCIL_TOL = replace(DEFAULT_TOL, pole=0.0)


def _central(f, p: np.ndarray, step: float) -> np.ndarray:
    """Seven-point central difference; truncation error ``O(step^6)``.

    Admissible points may lie within a few steps of a pole, where the
    three-point rule loses accuracy like ``(step / distance) ** 2``.
    """
    cols = []
    for i in range(len(p)):
        e = np.zeros(len(p))
        e[i] = step
        at = lambda t: np.asarray(f(p + t * e), dtype=float)  # noqa: E731
        odd = [at(t) - at(-t) for t in (1, 2, 3)]
        cols.append((45 * odd[0] - 9 * odd[1] + odd[2]) / (60 * step))
    return np.stack(cols, axis=-1)


def _rel_err(analytic, numeric) -> float:
    analytic = np.asarray(analytic, dtype=float)
    scale = max(float(np.max(np.abs(analytic))), 1e-300)
    return float(np.max(np.abs(analytic - numeric))) / scale


def closed_derivative_errors(system: CovectorSystem, v, step: float = 1e-4) -> dict:
    """Relative error of each analytic block against a central difference of the block below."""
    system = system.to_float()
    v = float_array(_point(system, v, False))
    jet = closed_jet(system, v)
    blocks = lambda p: closed_jet(system, p, _STENCIL_TOL)  # noqa: E731
    return {
        "gradient": _rel_err(jet.gradient, _central(lambda p: [blocks(p).value], v, step)[0]),
        "hessian": _rel_err(jet.hessian, _central(lambda p: blocks(p).gradient, v, step)),
        "c3": _rel_err(float_array(jet.c3), _central(lambda p: blocks(p).hessian, v, step)),
    }


def open_derivative_errors(open_sys: OpenSystem, x, z, step: float = 1e-4) -> dict:
    """As :func:`closed_derivative_errors` for the blocks of Omega in ``(x, z)``."""
    sys_ = open_sys.to_float()
    z = float_array(_point(sys_.base, z, False))
    x = float(x)
    p0 = np.concatenate([[x], z])
    jet = open_jet(sys_, x, z)
    at = lambda p: open_jet(sys_, p[0], p[1:], _STENCIL_TOL)  # noqa: E731
    first = _central(lambda p: [at(p).value], p0, step)[0]
    d_x = _central(lambda p: [at(p).omega_x], p0, step)[0]
    d_z = _central(lambda p: at(p).omega_z, p0, step)
    return {
        "omega_x": _rel_err([jet.omega_x], first[:1]),
        "omega_z": _rel_err(jet.omega_z, first[1:]),
        "omega_xx": _rel_err([float(jet.omega_xx)], d_x[:1]),
        "omega_xz": _rel_err(float_array(jet.omega_xz), d_x[1:]),
        "omega_zz": _rel_err(float_array(jet.omega_zz), d_z[:, 1:]),
    }
