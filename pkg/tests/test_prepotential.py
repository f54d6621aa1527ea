import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from vsystems.coxeter import CoxeterSpec, build_root_system, reflect
from vsystems.errors import PoleTooClose, SamplingExhausted
from vsystems.openvee import OpenSystem, build_catalog_open_system
from vsystems.prepotential import (
    auxiliary_lemma_check,
    closed_derivative_errors,
    closed_jet,
    eval_prepotentials,
    open_derivative_errors,
    open_jet,
    open_residuals,
    open_wdvv_residual,
    sample_closed_points,
    sample_open_points,
    structure_constants,
    wdvv_residual_closed,
)
from vsystems.veesys import CovectorSystem


def spec(name):
    return CoxeterSpec.parse(name)


def to_sym(x):
    return sp.Rational(x.numerator, x.denominator) if isinstance(x, Fraction) else sp.Integer(x)


class SymbolicOracle:
    """Open and closed prepotentials differentiated by sympy from their log formulas."""

    def __init__(self, open_sys):
        base = open_sys.base
        n = base.dim
        self.x = sp.Symbol("x")
        self.z = sp.symbols(f"z0:{n}")
        z = sp.Matrix(self.z)
        pos = list(base.positive_indices)
        roots = [sp.Matrix([to_sym(c) for c in base.restricted[i]]) for i in pos]
        mults = [to_sym(base.multiplicities[i]) for i in pos]
        h = to_sym(base.h)
        self.gram = sum((m * r * r.T for m, r in zip(mults, roots)), sp.zeros(n, n)) / h
        F = sum(m * (r.dot(z)) ** 2 * sp.log(r.dot(z)) for m, r in zip(mults, roots)) / 2
        omega = sum(
            to_sym(k) * (self.x - sp.Matrix([to_sym(c) for c in w]).dot(z)) * sp.log(self.x - sp.Matrix([to_sym(c) for c in w]).dot(z))
            for w, k in zip(open_sys.restricted_weights, open_sys.k)
        )
        if open_sys.k_zero is not None:
            omega += to_sym(open_sys.k_zero) * self.x * sp.log(self.x)
        self.F, self.omega, self.n = F, omega, n

    def c3(self):
        z, n = self.z, self.n
        return {(i, j, k): sp.diff(self.F, z[i], z[j], z[k]) for i in range(n) for j in range(n) for k in range(n)}

    def structure(self):
        ginv = self.gram.inv()
        c3 = self.c3()
        n = self.n
        return {(a, m, r): sum(ginv[a, b] * c3[(b, m, r)] for b in range(n)) for a in range(n) for m in range(n) for r in range(n)}

    def equations(self):
        x, z, n = self.x, self.z, self.n
        c = self.structure()
        wx = [sp.diff(self.omega, x, z[a]) for a in range(n)]
        wxx = sp.diff(self.omega, x, 2)
        wzz = [[sp.diff(self.omega, z[m], z[r]) for r in range(n)] for m in range(n)]
        set2 = [sum(c[(a, m, r)] * wx[a] for a in range(n)) + wxx * wzz[m][r] - wx[m] * wx[r] for m in range(n) for r in range(n)]
        lhs1 = {
            (m, r, s): sum(c[(a, m, r)] * wzz[a][s] for a in range(n)) + wx[s] * wzz[m][r]
            for m in range(n) for r in range(n) for s in range(n)
        }
        set1 = [lhs1[(m, r, s)] - lhs1[(s, r, m)] for m in range(n) for r in range(n) for s in range(n)]
        return set1, set2


def b_system(n, hs, hl, h, k_zero=None):
    base = build_root_system(CoxeterSpec("B", n)).with_class_multiplicities({"short": hs, "long": hl}).with_h(h)
    weights = [[s if j == i else 0 for j in range(n)] for i in range(n) for s in (1, -1)]
    return OpenSystem.create(base, weights, 1, k_zero)


@pytest.mark.parametrize("case", ["B2", "D3", "A2"])
def test_symbolic_oracle_equations_vanish(case):
    if case == "B2":
        o = b_system(2, 2, 1, 4)
    else:
        o = build_catalog_open_system(spec({"D3": "D:3", "A2": "A:2"}[case]))
    set1, set2 = SymbolicOracle(o).equations()
    assert all(sp.cancel(e) == 0 for e in set2)
    assert all(sp.cancel(e) == 0 for e in set1)


def test_symbolic_oracle_detects_wrong_multiplicities():
    o = b_system(2, 1, 1, 3)
    _, set2 = SymbolicOracle(o).equations()
    assert any(sp.cancel(e) != 0 for e in set2)
    assert not open_wdvv_residual(o, samples=10).set2_passed


@pytest.mark.parametrize("case", ["B2", "D3"])
def test_open_jet_matches_symbolic_oracle(case):
    o = b_system(2, 2, 1, 4) if case == "B2" else build_catalog_open_system(spec("D:3"))
    oracle = SymbolicOracle(o)
    x0 = Fraction(7, 5)
    z0 = [Fraction(1, 3), Fraction(-2, 7), Fraction(5, 11)][: o.dim]
    subs = {oracle.x: to_sym(x0), **{s: to_sym(v) for s, v in zip(oracle.z, z0)}}
    jet = open_jet(o, x0, z0)
    n = o.dim
    assert jet.exact
    assert to_sym(jet.omega_xx) == sp.diff(oracle.omega, oracle.x, 2).subs(subs)
    for a in range(n):
        assert to_sym(jet.omega_xz[a]) == sp.nsimplify(sp.diff(oracle.omega, oracle.x, oracle.z[a]).subs(subs))
        for b in range(n):
            assert to_sym(jet.omega_zz[a, b]) == sp.nsimplify(sp.diff(oracle.omega, oracle.z[a], oracle.z[b]).subs(subs))
    struct = oracle.structure()
    for (a, m, r), expr in struct.items():
        assert to_sym(jet.structure[a, m, r]) == sp.nsimplify(expr.subs(subs))
    closed = closed_jet(o.base, z0)
    for (i, j, k), expr in oracle.c3().items():
        assert to_sym(closed.c3[i, j, k]) == sp.nsimplify(expr.subs(subs))


# -- closed jet ------------------------------------------------------------


def test_rank_one_c3():
    system = CovectorSystem.from_covectors([[1]])
    for v in (Fraction(1, 3), Fraction(-5, 2), 4):
        assert closed_jet(system, [v]).c3[0, 0, 0] == 1 / Fraction(v)
    assert wdvv_residual_closed(system, [Fraction(1, 2)]) == 0


@pytest.mark.parametrize("name", ["A:3", "B:3", "D:4", "H3"])
def test_c3_symmetric(name):
    system = build_root_system(spec(name))
    v = sample_closed_points(system, 1, seed=5)[0]
    c3 = closed_jet(system, v).c3
    for perm in itertools.permutations(range(3)):
        diff = np.asarray(c3 - np.transpose(c3, perm), dtype=float)
        assert np.max(np.abs(diff)) <= 1e-12


@pytest.mark.parametrize("name", ["A:3", "B:4", "D:4", "G2", "I2:5", "H3"])
def test_c3_euler_identity(name):
    """Contracting c3 with the point gives h times the vee-metric."""
    system = build_root_system(spec(name))
    v = sample_closed_points(system, 1, seed=2)[0]
    c3 = closed_jet(system, v).c3
    lhs = np.tensordot(c3, v, axes=([2], [0]))
    rhs = system.h * system.metric.gram
    assert np.allclose(np.asarray(lhs - rhs, dtype=float), 0, atol=1e-10)


def test_a2_weyl_invariance_of_c3():
    system = build_root_system(spec("A:2"))
    v = sample_closed_points(system, 1, seed=9)[0]
    c3 = closed_jet(system, v).c3
    frame = system.frame
    # reflections act on restricted coordinates through the ambient realization
    for r in system.vectors[list(system.positive_indices)]:
        amb = system.lift(v)
        w = system.project(reflect(r, amb))
        # matrix of the reflection on V with respect to the frame
        cols = [system.project(reflect(r, frame[:, j])) for j in range(system.dim)]
        m = np.array(cols, dtype=object).T
        c3w = closed_jet(system, w).c3
        pulled = np.einsum("ia,jb,kc,ijk->abc", m, m, m, c3w)
        assert all(x == 0 for x in np.ravel(pulled - c3))


@pytest.mark.parametrize("name", ["A:3", "B:3", "D:5", "G2", "I2:7", "H3"])
def test_closed_wdvv_catalog(name):
    system = build_root_system(spec(name))
    for v in sample_closed_points(system, 5, seed=1):
        r = wdvv_residual_closed(system, v)
        ref = wdvv_residual_closed(system, v, form="reference")
        if system.exact:
            assert r == 0 and ref == 0
        else:
            assert r <= 1e-9 and ref <= 1e-9


def test_closed_wdvv_non_vee_control():
    system = CovectorSystem.from_covectors([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]])
    v = [Fraction(1, 3), Fraction(-1, 5), Fraction(2, 7)]
    assert wdvv_residual_closed(system, v) > 1e-3
    assert wdvv_residual_closed(system, v, form="reference") > 1e-3


def test_closed_pole():
    system = build_root_system(spec("B:2"))
    with pytest.raises(PoleTooClose) as info:
        closed_jet(system, [1, 1])
    assert info.value.offending is not None


# -- open jet --------------------------------------------------------------


def test_open_jet_single_factor():
    base = CovectorSystem.from_covectors([[1]])
    o = OpenSystem.create(base, [[1]], 1)
    x, z = Fraction(3), Fraction(1, 2)
    jet = open_jet(o, x, [z])
    assert jet.omega_xx == 1 / (x - z)
    assert jet.omega_xz[0] == -1 / (x - z)
    assert jet.omega_zz[0, 0] == 1 / (x - z)


def test_open_jet_b1_with_zero():
    base = CovectorSystem.from_covectors([[1]])
    o = OpenSystem.create(base, [[1], [-1]], 1, -2)
    x, z = Fraction(3), Fraction(1, 2)
    expected = 1 / (x - z) + 1 / (x + z) - 2 / x
    assert open_jet(o, x, [z]).omega_xx == expected == 2 * z * z / (x * (x * x - z * z))
    assert open_jet(o, x, [-z]).omega_xx == expected
    assert open_jet(o, x, [z]).omega_xz[0] == -open_jet(o, x, [-z]).omega_xz[0]


def test_open_jet_poles():
    o = build_catalog_open_system(spec("D:3"))
    with pytest.raises(PoleTooClose):
        open_jet(o, Fraction(1, 3), [Fraction(1, 3), Fraction(1, 7), Fraction(2, 9)])
    with pytest.raises(PoleTooClose) as info:
        open_jet(o, 0, [Fraction(1, 3), Fraction(1, 7), Fraction(2, 9)])
    assert info.value.offending == "zero"


def test_omega_zz_contraction():
    o = build_catalog_open_system(spec("B:3"))
    x, z = sample_open_points(o, 1, seed=4)[0]
    jet = open_jet(o, x, z)
    u = np.array([Fraction(1), Fraction(-2), Fraction(3)], dtype=object)
    lhs = u @ jet.omega_zz @ u
    rhs = sum(k * (w @ u) ** 2 / (x - w @ z) for w, k in zip(o.restricted_weights, o.k))
    assert lhs == rhs


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=Fraction(1, 4), max_value=4).filter(lambda c: c != 0), st.integers(0, 50))
def test_scale_covariance(c, seed):
    o = build_catalog_open_system(spec("D:4"))
    x, z = sample_open_points(o, 1, seed=seed)[0]
    a, b = open_jet(o, x, z), open_jet(o, c * x, c * z)
    assert b.omega_xx == a.omega_xx / c
    assert all(p == q / c for p, q in zip(np.ravel(b.omega_xz), np.ravel(a.omega_xz)))
    assert all(p == q / c for p, q in zip(np.ravel(b.omega_zz), np.ravel(a.omega_zz)))
    assert all(p == q / c for p, q in zip(np.ravel(b.structure), np.ravel(a.structure)))
    assert open_residuals(b) == open_residuals(a) == (0, 0)


@pytest.mark.parametrize("name", ["B:3", "D:4", "H3"])
def test_residual_weyl_invariance(name):
    o = build_catalog_open_system(spec(name))
    bad = o.with_constants(k_zero=0) if o.k_zero is not None else b_system(3, 1, 1, 5)
    for sys_ in (o, bad):
        x, z = sample_open_points(sys_, 1, seed=11)[0]
        base = sys_.base
        r = base.vectors[base.positive_indices[0]]
        zw = reflect(r, z)
        a, b = open_residuals(open_jet(sys_, x, z)), open_residuals(open_jet(sys_, x, zw))
        assert np.allclose([float(t) for t in a], [float(t) for t in b], atol=1e-9)


# -- reports ---------------------------------------------------------------


@pytest.mark.parametrize("name,index", [("A:3", 1), ("A:3", 2), ("B:3", 1), ("D:3", 1)])
def test_open_wdvv_exact_zero(name, index):
    report = open_wdvv_residual(build_catalog_open_system(spec(name), index), samples=20, seed=0)
    assert report.exact
    assert report.open_residual_set1 == report.open_residual_set2 == report.closed_residual == 0
    assert isinstance(report.open_residual_set2, Fraction)


@pytest.mark.parametrize("name", ["I2:5", "G2", "H3"])
def test_open_wdvv_float(name):
    report = open_wdvv_residual(build_catalog_open_system(spec(name)), samples=20, seed=0)
    assert not report.exact and report.passed
    assert report.open_residual_set2 <= 1e-8


def test_sampling_is_deterministic():
    o = build_catalog_open_system(spec("B:3"))
    a = sample_open_points(o, 5, seed=7)
    b = sample_open_points(o, 5, seed=7)
    assert all(p[0] == q[0] and list(p[1]) == list(q[1]) for p, q in zip(a, b))
    assert sample_open_points(o, 5, seed=8)[0][0] != a[0][0] or list(sample_open_points(o, 5, seed=8)[0][1]) != list(a[0][1])


def test_sampling_exhausted():
    from vsystems.algebra import Tolerances

    o = build_catalog_open_system(spec("B:3"))
    with pytest.raises(SamplingExhausted):
        sample_open_points(o, 3, tol=Tolerances(pole=10.0))


def test_b3_equal_multiplicities_fail_set2():
    report = open_wdvv_residual(b_system(3, 1, 1, 5), samples=100, seed=0)
    assert report.count_above(1e-3) >= 95
    assert auxiliary_lemma_check(b_system(3, 1, 1, 5), samples=20).status == "vacuous"


@pytest.mark.parametrize("name,index", [("A:3", 2), ("B:3", 3), ("D:4", 4), ("I2:5", 0)])
def test_lemma_ok(name, index):
    rep = auxiliary_lemma_check(build_catalog_open_system(spec(name), index), samples=20)
    assert rep.status == "ok" and rep.qualifying > 0


def test_lemma_trivial_in_dimension_one():
    o = OpenSystem.create(CovectorSystem.from_covectors([[1]]), [[1], [-1]], 1, -2)
    assert auxiliary_lemma_check(o, samples=5).status == "trivial"


# -- values and finite differences -------------------------------------------


def test_eval_b1():
    o = OpenSystem.create(CovectorSystem.from_covectors([[1]]), [[1], [-1]], 1)
    _, omega = eval_prepotentials(o, 2, [1])
    assert omega == pytest.approx(3 * math.log(3), abs=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_eval_bn_at_origin(n):
    o = build_catalog_open_system(CoxeterSpec("B", n))
    x = 1.7
    # z = 0 is on every root hyperplane, so approach it along a generic ray
    z = [1e-9 * (i + 1) ** 0.5 for i in range(n)]
    _, omega = eval_prepotentials(o.to_float(), x, z)
    assert omega == pytest.approx(2 * n * x * math.log(x), rel=1e-7)


def test_structure_constants_shape():
    system = build_root_system(spec("B:3"))
    z = sample_closed_points(system, 1)[0]
    c = structure_constants(system, z)
    assert c.shape == (3, 3, 3)
    for a in range(3):
        assert all(c[a, m, r] == c[a, r, m] for m in range(3) for r in range(3))


@pytest.mark.parametrize("name,index", [("B:3", 1), ("D:4", 1), ("A:3", 2), ("I2:5", 0), ("H3", 1)])
def test_finite_differences(name, index):
    o = build_catalog_open_system(spec(name), index)
    for x, z in sample_open_points(o, 5, seed=3, exact=False):
        assert max(closed_derivative_errors(o.base, z).values()) <= 1e-5
        assert max(open_derivative_errors(o, x, z).values()) <= 1e-5
