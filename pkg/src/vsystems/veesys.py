"""Covector systems and verification of the closed vee-conditions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    MetricData,
    PlanePartition,
    Tolerances,
    as_array,
    exact_array,
    float_array,
    gram_matrix,
    is_exact,
    is_parallel,
    is_rational,
    plane_partition,
    solve,
)
from .errors import NotAVeeSystem

SUM_ZERO = "sum-zero"


def sum_zero_frame(dim: int) -> np.ndarray:
    """Basis ``f_i = e_i - e_N`` of the hyperplane ``sum z_i = 0`` in R^N."""
    frame = exact_array(np.zeros((dim, dim - 1), dtype=int))
    for i in range(dim - 1):
        frame[i, i] = Fraction(1)
        frame[dim - 1, i] = Fraction(-1)
    return frame


def _first_nonzero_positive(v) -> bool:
    for x in v:
        if x != 0 and (is_rational(x) or abs(x) > 1e-12):
            return x > 0
    return False


@dataclass(frozen=True, eq=False)
class CovectorSystem:
    """A finite signed set of covectors with multiplicities.

    ``vectors`` holds the covectors in realization ("ambient") coordinates,
    one per row, both signs present. When ``constraint`` is ``"sum-zero"``
    the space V is the hyperplane ``sum z_i = 0`` and all metric data is
    computed on the restrictions to the basis returned by
    :func:`sum_zero_frame`.
    """

    vectors: np.ndarray
    multiplicities: np.ndarray
    h: object = Fraction(1)
    constraint: str | None = None
    name: str = ""
    classes: tuple[str, ...] = ()
    notes: tuple[str, ...] = field(default=())

    @classmethod
    def from_covectors(
        cls,
        covectors,
        multiplicities=None,
        h=1,
        constraint: str | None = None,
        name: str = "",
        classes=None,
        exact: bool | None = None,
        complete_negatives: bool = True,
    ) -> "CovectorSystem":
        covectors = [list(c) for c in covectors]
        m = len(covectors)
        if multiplicities is None:
            multiplicities = [1] * m
        elif np.isscalar(multiplicities) or isinstance(multiplicities, Fraction):
            multiplicities = [multiplicities] * m
        multiplicities = list(multiplicities)
        classes = list(classes) if classes is not None else [""] * m
        if exact is None:
            exact = all(is_rational(x) for c in covectors for x in c) and all(
                is_rational(x) for x in multiplicities
            ) and is_rational(h)
        vecs = [as_array(c, exact) for c in covectors]
        mults = list(as_array(multiplicities, exact))
        notes = []
        if complete_negatives:
            added = 0
            for i in range(m):
                neg = -vecs[i]
                if not any(_same(neg, v, exact) for v in vecs):
                    vecs.append(neg)
                    mults.append(mults[i])
                    classes.append(classes[i])
                    added += 1
            if added:
                notes.append(f"completed {added} negatives")
        # identical covectors are merged with summed multiplicity
        merged_v, merged_m, merged_c = [], [], []
        for v, mu, c in zip(vecs, mults, classes):
            for j, w in enumerate(merged_v):
                if _same(v, w, exact):
                    merged_m[j] = merged_m[j] + mu
                    break
            else:
                merged_v.append(v)
                merged_m.append(mu)
                merged_c.append(c)
        if len(merged_v) < len(vecs):
            notes.append(f"merged {len(vecs) - len(merged_v)} repeated covectors")
        h_val = as_array([h], exact)[0]
        return cls(
            vectors=np.array(merged_v, dtype=object if exact else float),
            multiplicities=np.array(merged_m, dtype=object if exact else float),
            h=h_val,
            constraint=constraint,
            name=name,
            classes=tuple(merged_c),
            notes=tuple(notes),
        )

    # -- basic data -------------------------------------------------------

    @property
    def exact(self) -> bool:
        return is_exact(self.vectors)

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def __len__(self) -> int:
        return len(self.vectors)

    @cached_property
    def frame(self) -> np.ndarray:
        if self.constraint == SUM_ZERO:
            f = sum_zero_frame(self.ambient_dim)
        elif self.constraint is None:
            f = exact_array(np.eye(self.ambient_dim, dtype=int))
        else:
            raise ValueError(f"unknown constraint {self.constraint!r}")
        return f if self.exact else float_array(f)

    def restrict(self, covector) -> np.ndarray:
        """Components of an ambient covector on the basis of V."""
        return np.asarray(covector) @ self.frame

    @cached_property
    def restricted(self) -> np.ndarray:
        return self.vectors @ self.frame

    @cached_property
    def euclid(self) -> np.ndarray:
        """Gram matrix of the ambient Euclidean product on V."""
        return self.frame.T @ self.frame

    def euclid_dual_pair(self, a, b):
        """Euclidean pairing of two restricted covectors."""
        return a @ solve(self.euclid, b)

    def lift(self, y) -> np.ndarray:
        """Ambient point of intrinsic coordinates ``y``."""
        return self.frame @ np.asarray(y)

    def project(self, z) -> np.ndarray:
        """Intrinsic coordinates of the orthogonal projection of ambient ``z``."""
        return solve(self.euclid, self.frame.T @ np.asarray(z))

    @cached_property
    def positive_indices(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.vectors) if _first_nonzero_positive(v))

    @cached_property
    def metric(self) -> MetricData:
        return gram_matrix(self)

    def planes(self, tol: float = DEFAULT_TOL.eq) -> PlanePartition:
        return plane_partition(self, tol)

    # -- derived systems ---------------------------------------------------

    def _rebuild(self, **changes) -> "CovectorSystem":
        data = dict(
            vectors=self.vectors,
            multiplicities=self.multiplicities,
            h=self.h,
            constraint=self.constraint,
            name=self.name,
            classes=self.classes,
            notes=self.notes,
        )
        data.update(changes)
        return CovectorSystem(**data)

    def with_h(self, h) -> "CovectorSystem":
        return self._rebuild(h=as_array([h], self.exact)[0])

    def with_class_multiplicities(self, values: dict) -> "CovectorSystem":
        """Replace ``h_alpha`` for every covector whose class is a key of ``values``."""
        unknown = set(values) - set(self.classes)
        if unknown:
            raise KeyError(f"unknown multiplicity classes {sorted(unknown)}")
        exact = self.exact and all(is_rational(v) for v in values.values())
        mults = [values.get(c, m) for c, m in zip(self.classes, self.multiplicities)]
        sys = self if exact else self.to_float()
        return sys._rebuild(multiplicities=as_array(mults, exact))

    def scaled_multiplicities(self, c) -> "CovectorSystem":
        return self._rebuild(multiplicities=self.multiplicities * c)

    def to_float(self) -> "CovectorSystem":
        if not self.exact:
            return self
        return CovectorSystem(
            vectors=float_array(self.vectors),
            multiplicities=float_array(self.multiplicities),
            h=float(self.h),
            constraint=self.constraint,
            name=self.name,
            classes=self.classes,
            notes=self.notes,
        )

    def class_multiplicities(self) -> dict:
        out = {}
        for c, m in zip(self.classes, self.multiplicities):
            out.setdefault(c, m)
        return out


def _same(a, b, exact: bool) -> bool:
    if exact:
        return all(x == y for x, y in zip(a, b))
    return bool(np.allclose(a, b, atol=1e-12, rtol=0))


# ---------------------------------------------------------------------------
# vee check


@dataclass(frozen=True)
class VeeCheck:
    alpha: int
    plane: int | None
    lam: object
    residual: float
    exact_zero: bool


@dataclass(frozen=True)
class VeeReport:
    passed: bool
    checks: tuple[VeeCheck, ...]
    worst_residual: float
    exact: bool
    partition: PlanePartition
    tolerance: float = DEFAULT_TOL.vee

    def failures(self) -> list[VeeCheck]:
        if self.exact:
            return [c for c in self.checks if not c.exact_zero]
        return [c for c in self.checks if c.residual > self.tolerance]


def _quad_norm(gram: np.ndarray | None, v) -> float:
    """Size of ``v`` in the metric (Euclidean if ``gram`` is None); float only,
    the exact verdict never depends on it."""
    v = float_array(v)
    if gram is not None:
        return math.sqrt(max(float(v @ gram @ v), 0.0))
    return math.sqrt(float(v @ v))


def check_vee(system: CovectorSystem, tol: Tolerances = DEFAULT_TOL) -> VeeReport:
    """Check ``sum_{beta in Pi cap A} h_beta beta(alpha^vee) beta^vee = lambda alpha^vee``.

    Every positive covector is checked on every plane containing it; a
    covector lying in no plane (rank-one systems) is checked on its own line.
    """
    metric = system.metric
    vecs = system.restricted
    mults = system.multiplicities
    partition = system.planes(tol.eq)
    gram = float_array(metric.gram) if metric.is_positive_definite() else None
    duals = [metric.gram_inverse @ a for a in vecs]
    checks = []
    for i in system.positive_indices:
        alpha_v = duals[i]
        planes = partition.planes_containing(i)
        groups = [(p_idx, p.members) for p_idx, p in planes]
        if not groups:
            line = tuple(
                j for j in range(len(vecs)) if is_parallel(vecs[i], vecs[j], tol.eq)
            )
            groups = [(None, line)]
        for p_idx, members in groups:
            s = sum((mults[j] * (vecs[j] @ alpha_v)) * duals[j] for j in members)
            denom = vecs[i] @ alpha_v
            lam = (s @ vecs[i]) / denom
            r = s - lam * alpha_v
            zero = system.exact and all(x == 0 for x in r)
            s_norm = _quad_norm(gram, s)
            residual = 0.0 if s_norm == 0 else _quad_norm(gram, r) / s_norm
            checks.append(VeeCheck(i, p_idx, lam, residual, zero))
    worst = max((c.residual for c in checks), default=0.0)
    if system.exact:
        passed = all(c.exact_zero for c in checks)
    else:
        passed = worst <= tol.vee
    return VeeReport(passed, tuple(checks), worst, system.exact, partition, tol.vee)


def vee_lambda_table(system: CovectorSystem, tol: Tolerances = DEFAULT_TOL):
    """List of ``(alpha index, plane index, lambda)`` for a valid vee-system."""
    report = check_vee(system, tol)
    if not report.passed:
        raise NotAVeeSystem(
            f"{system.name or 'system'} fails the vee-conditions "
            f"(worst residual {report.worst_residual:.3g})"
        )
    return [(c.alpha, c.plane, c.lam) for c in report.checks]
