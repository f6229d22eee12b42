import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semigen import expo_semigroup as es
from semigen import mu_calculus as mc
from semigen.errors import ConfigError, ImageEnvelopeError, OutsideCertifiedDisc, PrecisionLimit
from semigen.function_models import HolSpace, TaylorFunction
from semigen.operators import DiagonalOperator, TaylorDifferentiation
from semigen.seqspace import KotheMatrix, SpaceDescriptor, finite_vector, geometric, ones, seminorm, unit_vector

S = SpaceDescriptor(KotheMatrix("s"))
OMEGA = SpaceDescriptor(KotheMatrix("omega"))
LOGJ = DiagonalOperator("log(j)")
ENTIRE = HolSpace(math.inf)


@pytest.fixture(scope="module")
def plan2():
    return es.make_plan(LOGJ, S, 2.0, 1)


def test_unit_vector_coordinate(plan2):
    for j in (1, 2, 7, 30):
        v = es.evaluate(LOGJ, unit_vector(j), 1.0, plan2)
        assert abs(float(v.vector(j)) - j) <= v.tail


def test_polynomial_shift_exact():
    plan = es.make_plan(TaylorDifferentiation(), ENTIRE, 1.0)
    v = es.evaluate(TaylorDifferentiation(), finite_vector([0, 0, 1], start=0), 1, plan)
    assert list(v.vector.exact) == [1, 2, 1] and v.tail == 0 and v.N_used == 2
    back = es.evaluate_group(TaylorDifferentiation(), finite_vector([1, 2, 1], start=0), -1, plan)
    assert list(back.vector.exact) == [0, 0, 1]
    with pytest.raises(ImageEnvelopeError):
        es.evaluate(TaylorDifferentiation(), TaylorFunction.exponential().coefficients, 0.5, plan)


def test_t_zero_is_identity(plan2):
    x = geometric(0.3)
    v = es.evaluate(LOGJ, x, 0.0, plan2)
    assert v.vector is x and v.tail == 0 and v.N_used == 0


def test_ones_window():
    w = es.evaluate_window(LOGJ, ones(), 2.0, 6)
    np.testing.assert_allclose(w.values.astype(float), [1, 4, 9, 16, 25, 36], atol=w.tail)
    assert w.tail <= 1e-10


def test_omega_coordinate_three():
    A = DiagonalOperator("j")
    v = es.evaluate(A, ones(), 1.0, es.make_plan(A, OMEGA, 1.0, 3))
    assert abs(float(v.vector(3)) - math.exp(3)) <= v.tail
    assert float(v.vector(3)) == pytest.approx(20.0855, abs=1e-4)


def test_horizon_refused(plan2):
    with pytest.raises(OutsideCertifiedDisc):
        es.evaluate(LOGJ, unit_vector(2), 2.5, plan2)
    with pytest.raises(ConfigError):
        es.evaluate(LOGJ, unit_vector(2), -0.5, plan2)


def test_piecewise_boundaries():
    plan = es.make_plan(LOGJ, S, 1.0, 1)
    x = geometric(0.4)
    a = es.evaluate_piecewise(LOGJ, x, 0.6, 1.0, plan)
    b = es.evaluate(LOGJ, x, 0.6, plan)
    assert a.tail == b.tail and a.N_used == b.N_used
    two = es.evaluate_piecewise(LOGJ, x, 2.0, 1.0, plan)
    assert two.parts["n"] == 2 and two.parts["w"] == 0
    inner = es.evaluate(LOGJ, x, 1.0, plan.retarget(plan.certificate().q))
    outer = es.evaluate(LOGJ, inner.vector, 1.0, plan)
    assert es.distance(two.vector, outer.vector, 1, S) <= two.tail


def test_law_at_t_zero(plan2):
    r = es.verify_semigroup_law(LOGJ, geometric(0.5), 0.0, 0.8, 1, plan2)
    assert r.residual <= r.bound


def test_zero_operator_residuals():
    Z = DiagonalOperator("0*j")
    plan = es.make_plan(Z, S, 1.0, 1)
    x = geometric(0.5)
    # coordinates agree exactly; only the envelope tail beyond the head remains
    law = es.verify_semigroup_law(Z, x, 0.3, 0.5, 1, plan)
    assert law.passed and law.residual <= 1e-15
    gen = es.verify_generator(Z, x, [0.5, 0.25], 1, plan)
    assert all(r.passed and r.residual <= 1e-14 for r in gen)


def test_generator_linear_decay(plan2):
    rows = es.verify_generator(LOGJ, unit_vector(3), [2.0**-k for k in range(1, 11)], 1, plan2)
    assert all(r.passed for r in rows)
    # (e^{h log 3} - 1)/h - log 3 = (log 3)^2 h / 2 + O(h^2)
    for r in rows[4:]:
        h = r.detail["h"]
        exact = (math.exp(h * math.log(3)) - 1) / h - math.log(3)
        assert r.residual == pytest.approx(exact * 3, abs=r.detail["tail_over_h"] + 1e-12)


def test_continuity_h_zero(plan2):
    rows = es.continuity_modulus(LOGJ, [geometric(0.5)], 1, 0.5, [0.0, 0.25], plan2)
    assert rows[0].residual == 0
    assert rows[1].passed


def test_group_inverse(plan2):
    for x in (unit_vector(4), geometric(0.3)):
        fwd = es.evaluate_group(LOGJ, x, 0.7, plan2.retarget(plan2.certificate().q))
        back = es.evaluate_group(LOGJ, fwd.vector, -0.7, plan2)
        f = es.f_value(plan2, 1, 0.7)
        assert es.distance(back.vector, x, 1, S) <= back.tail + f * fwd.tail


catalog = st.one_of(
    st.builds(unit_vector, st.integers(1, 60)),
    st.builds(lambda v: finite_vector(v), st.lists(st.integers(-20, 20), min_size=1, max_size=15)),
    st.builds(geometric, st.floats(0.01, 0.9), st.floats(-5, 5)),
)


@settings(max_examples=40, deadline=None)
@given(catalog, st.floats(0, 2), st.sampled_from([1, 2, 3]))
def test_oracle_agreement(x, t, p):
    plan = es.make_plan(LOGJ, S, 2.0, p)
    oracle = es.diagonal_oracle(LOGJ, x, t)
    try:
        v = es.evaluate(LOGJ, x, t, plan)
    except PrecisionLimit:
        # only allowed where 1e-10 is within about a thousand longdouble ulps of the value
        assert seminorm(oracle, p, S).value * es.EPS * 1e3 > plan.tol
        return
    # the truncated head of the difference is a lower bound for its seminorm, and
    # distance() is an upper bound certified to within its own tol of 1e-14
    diff = seminorm(es._difference(v.vector, oracle), p, S, tol=1e-14)
    assert diff.value <= v.tail <= plan.tol
    assert diff.upper <= v.tail + 1e-14


def test_large_unit_vector_within_tol():
    # regression: an allowance growing with N used to exhaust the budget here
    plan = es.make_plan(LOGJ, S, 2.0, 3)
    v = es.evaluate(LOGJ, unit_vector(19), 2.0, plan)
    assert v.tail <= 1e-10 and v.parts["rounding"] < 1e-11
    assert abs(float(v.vector(19)) - 361) <= v.tail
    with pytest.raises(PrecisionLimit):
        es.evaluate(LOGJ, unit_vector(60), 2.0, plan)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-30, 30), min_size=1, max_size=12), st.fractions(-3, 3, max_denominator=16))
def test_polynomial_exactness(coeffs, t):
    plan = es.make_plan(TaylorDifferentiation(), ENTIRE, 3.0)
    v = es.evaluate_group(TaylorDifferentiation(), finite_vector(coeffs, start=0), t, plan)
    assert v.N_used == len(coeffs) - 1
    # compare with f(z + t) via the derivative series sum_n t^n f^(n)(0)/n! at each coefficient
    d = len(coeffs)
    want = [sum(Fraction(math.comb(m, i)) * coeffs[m] * Fraction(t) ** (m - i) for m in range(i, d)) for i in range(d)]
    assert list(v.vector.exact) == want


@settings(max_examples=10, deadline=None)
@given(catalog, st.floats(1.2, 2.6), st.sampled_from([(1.0, 0.7), (1.0, 0.5), (0.8, 0.6)]))
def test_piecewise_consistency(x, t, Rs):
    R1, R2 = Rs
    a = es.evaluate_piecewise(LOGJ, x, t, R1, es.make_plan(LOGJ, S, R1, 1))
    b = es.evaluate_piecewise(LOGJ, x, t, R2, es.make_plan(LOGJ, S, R2, 1))
    assert es.distance(a.vector, b.vector, 1, S) <= a.tail + b.tail


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1.9), st.floats(0, 1.9), st.integers(0, 60))
def test_tail_monotone_in_t(t1, t2, N):
    mu = mc.from_power_form(2)
    lo, hi = sorted((t1, t2))
    assert mc.tail_bound(mu, lo, N) <= mc.tail_bound(mu, hi, N)
