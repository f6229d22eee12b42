import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semigen.errors import ConfigError, NotCertified
from semigen.operators import (
    DiagonalOperator,
    TaylorDifferentiation,
    apply,
    apply_power,
    continuity_check,
    identity,
    optimal_mu,
    probe_grid,
    scan_log_mu,
)
from semigen.seqspace import KotheMatrix, SpaceDescriptor, finite_vector, ones, seminorm, unit_vector

OMEGA = SpaceDescriptor(KotheMatrix("omega"))
S = SpaceDescriptor(KotheMatrix("s"))


def test_apply_examples():
    _, v = apply(DiagonalOperator("j"), ones()).coords(6)
    assert list(v) == [1, 2, 3, 4, 5, 6]
    _, v = apply(DiagonalOperator("log(j)"), unit_vector(1)).coords(5)
    assert not np.any(v)
    d = apply(TaylorDifferentiation(), finite_vector([1, 1, 1], start=0))
    assert list(d.exact) == [1, 2]


def test_apply_power_examples():
    _, v = apply_power(DiagonalOperator("j"), 2, ones()).coords(5)
    assert list(v) == [1, 4, 9, 16, 25]
    x = finite_vector([3, -1], label="x")
    assert apply_power(DiagonalOperator("j"), 0, x) is x
    z3 = finite_vector([0, 0, 0, 1], start=0)
    assert list(apply_power(TaylorDifferentiation(), 2, z3).exact) == [0, 6]
    with pytest.raises(ConfigError):
        apply_power(identity(), -1, x)


def test_optimal_mu_omega():
    w = optimal_mu(DiagonalOperator("j"), OMEGA, 3, 3, 2)
    assert w.log_mu == pytest.approx(2 * math.log(3), rel=1e-15)
    assert w.attaining_j == 3


def test_optimal_mu_s_log():
    w = optimal_mu(DiagonalOperator("log(j)"), S, 1, 3, 2)
    brute = max(math.log(j) ** 2 / j**2 for j in range(1, 100_001))
    assert w.mu == pytest.approx(brute, rel=1e-12)
    assert w.mu == pytest.approx(0.1341054400902869, rel=1e-14)  # (log 3)^2 / 9, frozen from the brute force
    assert w.attaining_j == 3


def test_constant_symbol():
    w = optimal_mu(DiagonalOperator("-2.5"), S, 2, 2, 7)
    assert w.log_mu == pytest.approx(7 * math.log(2.5))


def test_continuity_examples():
    w = continuity_check(DiagonalOperator("log(j)"), S, 2, range(2, 19))
    assert w.q == 3 and w.log_mu <= -1
    w = continuity_check(identity(), S, 4, range(4, 8))
    assert w.q == 4 and w.log_mu == 0


def test_omega_shifted_constant_is_k():
    # ||A x||_k <= ||x||_{k+1} fails: e_k gives ||A e_k||_k = k while ||e_k||_{k+1} = 1
    for k in (1, 2, 5, 9):
        w = optimal_mu(DiagonalOperator("j"), OMEGA, k, k + 1, 1)
        assert w.mu == pytest.approx(k)
        A_ek = seminorm(apply(DiagonalOperator("j"), unit_vector(k)), k, OMEGA).value
        assert A_ek == k and seminorm(unit_vector(k), k + 1, OMEGA).value == 1


def test_continuity_fails_for_unbounded_same_index():
    with pytest.raises(NotCertified):
        continuity_check(DiagonalOperator("j"), S, 1, [1])


def test_scan_matches_pointwise():
    probes = probe_grid()
    A = DiagonalOperator("log(j)")
    scan = scan_log_mu(A, S, 1, 3, 40, probes)
    for n in (0, 1, 5, 17, 40):
        assert scan.log_mu[n] == pytest.approx(optimal_mu(A, S, 1, 3, n, probes=probes).log_mu, abs=1e-9)


symbols = st.sampled_from(["j", "2*j - 1", "3", "j^2", "max(1, 7 - j)"])


@settings(max_examples=150, deadline=None)
@given(symbols, st.integers(1, 40), st.integers(0, 4), st.integers(1, 4), st.sampled_from([1.0, 2.0, math.inf]))
def test_unit_vector_attainment_exact(src, j, n, p, r):
    A = DiagonalOperator(src)
    space = SpaceDescriptor(KotheMatrix("s"), r)
    a = float(A.values(np.array([j]))[0])
    got = seminorm(apply_power(A, n, unit_vector(j)), p, space).value
    assert got == abs(a) ** n * float(j) ** p


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=1, max_size=10), st.integers(1, 3), st.integers(0, 4), st.integers(0, 3))
def test_optimal_mu_is_least_constant(vals, p, n, d):
    A = DiagonalOperator("log(j)")
    q = p + d + 1
    w = optimal_mu(A, S, p, q, n)
    x = finite_vector(vals)
    lhs = seminorm(apply_power(A, n, x), p, S).value
    rhs = w.mu * seminorm(x, q, S).value
    assert lhs <= rhs * (1 + 1e-12) + 1e-300
    if w.attaining_j is not None:
        e = unit_vector(w.attaining_j)
        got = seminorm(apply_power(A, n, e), p, S).value
        assert got == pytest.approx(w.mu * seminorm(e, q, S).value, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 3), st.integers(0, 20), st.integers(1, 5), st.integers(1, 5))
def test_power_composition(kind, coeff_len, n, m):
    if kind < 3:
        A = DiagonalOperator(["j", "log(j)", "2 - j"][kind])
        x = finite_vector(list(range(1, coeff_len + 2)))
        js = np.arange(1, coeff_len + 2)
        a = apply_power(A, n + m, x).coeff(js)
        b = apply_power(A, n, apply_power(A, m, x)).coeff(js)
        assert np.array_equal(a, b)
    else:
        x = finite_vector(list(range(coeff_len + 1)), start=0)
        D = TaylorDifferentiation()
        assert apply_power(D, n + m, x).exact == apply_power(D, n, apply_power(D, m, x)).exact


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["log(j)", "sqrt(j)", "j", "1/j"]), st.integers(1, 3), st.integers(0, 6))
def test_optimal_mu_nonincreasing_in_q(src, p, n):
    A = DiagonalOperator(src)
    probes = probe_grid()
    prev = math.inf
    for q in range(p + 2, p + 8):
        w = optimal_mu(A, S, p, q, n, probes=probes)
        assert w.log_mu <= prev + 1e-12
        prev = w.log_mu
