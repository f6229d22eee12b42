import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semigen.errors import ConfigError
from semigen.function_models import (
    CompactSeminormIndex,
    TaylorFunction,
    TrigMode,
    cauchy_mu,
    cinfty_refutation,
    divergence_witness,
    hd_seminorm,
    horner,
    partial_geometric,
    taylor_shift,
    translate,
    trig_norm,
    trig_norm_grid,
)


@pytest.mark.parametrize("m", [0, 1, 3, 10])
@pytest.mark.parametrize("q", [0.5, 1.0, 2.0])
def test_monomial_seminorm(m, q):
    v = hd_seminorm(TaylorFunction.monomial(m), q)
    assert v.value == pytest.approx(q**m, rel=1e-15) and v.abs_error == 0


def test_partial_geometric_half():
    v = hd_seminorm(partial_geometric(10), 0.5)
    assert v.value == pytest.approx(2 - 0.5**10, rel=1e-14)


def test_exponential_at_one():
    v = hd_seminorm(TaylorFunction.exponential(), 1.0)
    assert abs(v.value - math.e) <= v.abs_error + 1e-14 and v.abs_error <= 1e-10


def test_alternating_polynomial_grid():
    # 1 - z on |z| = 1 peaks at z = -1
    v = hd_seminorm(TaylorFunction.polynomial([1, -1]), 1.0)
    assert abs(v.value - 2) <= v.abs_error + 1e-12


def test_seminorm_radius_checked():
    with pytest.raises(ConfigError):
        hd_seminorm(TaylorFunction.polynomial([1, 1], radius=1.0), 1.0)


@pytest.mark.parametrize("n,q,s,want", [(0, 2.0, 3.0, 3.0), (1, 2.5, 3.0, 12.0), (2, 2.0, 3.0, 6.0)])
def test_cauchy_mu_values(n, q, s, want):
    assert math.exp(cauchy_mu(n, q, s)) == pytest.approx(want, rel=1e-14)


def test_divergence_witness_values():
    assert divergence_witness(0).exact_value == 1
    w = divergence_witness(10)
    assert w.exact_value == (Fraction(7, 4) ** 11 - 1) / Fraction(3, 4)
    assert w.holds and w.lower_bound == Fraction(3, 2) ** 10


@pytest.mark.parametrize("k,n,want", [(1, 0, 1.0), (2, 1, 2.0), (3, 3, 27.0)])
def test_trig_norm_closed_form(k, n, want):
    r = trig_norm(TrigMode(k), n)
    assert r.method == "closed form" and r.value == pytest.approx(want, rel=1e-14)


def test_trig_norm_short_interval_is_flagged():
    r = trig_norm(TrigMode(1), 2, CompactSeminormIndex(0, (0.0, 1.0)))
    assert r.flagged and r.value == pytest.approx(math.sin(1.0), rel=1e-6)


@pytest.mark.parametrize("mu,k", [(10.5, 11), (5, 6), ("5.0000001", 6)])
def test_cinfty_witness_small(mu, k):
    w = cinfty_refutation(1, 3, [1, 1, 1, mu])
    assert w.k == k and w.n == 3 and w.verify()


def test_cinfty_witness_huge():
    w = cinfty_refutation(0, 0, [1, 1e300])
    assert w.k == 10**300 + 1 and w.verify()
    assert w.record()["k"].endswith("(301 digits)")


def test_cinfty_bad_input():
    with pytest.raises(ConfigError):
        cinfty_refutation(2, 1, [1, 2, 3])
    with pytest.raises(ConfigError):
        cinfty_refutation(0, 1, [1, 1])
    with pytest.raises(ConfigError):
        cinfty_refutation(0, 0, [1, -2])


def test_translation_matches_direct():
    xs = np.linspace(-4, 4, 101)
    y = translate(TrigMode(3, "cos", 2.0), 0.4)
    np.testing.assert_allclose(y(xs), 2.0 * np.cos(3 * (xs + 0.4)), atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 20), st.integers(0, 5), st.floats(0.1, 0.9), st.floats(1.0, 3.0))
def test_cauchy_consistency(deg, n, q, s):
    """sup_{|z|<=q} |f^(n)| <= n! s/(s-q)^(n+1) sup_{|z|<=s} |f| for a partial geometric f."""
    q = q * s
    f = partial_geometric(deg)
    d = f
    for _ in range(n):
        d = d.derivative()
    lhs = hd_seminorm(d, q).value
    rhs = math.exp(cauchy_mu(n, q, s)) * hd_seminorm(f, s).value
    assert lhs <= rhs * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 6), st.integers(0, 3))
def test_trig_closed_form_vs_grid(k, n, p):
    idx = CompactSeminormIndex(p)
    closed = trig_norm(TrigMode(k), n, idx).value
    # 200001 points put the grid within (k * spacing)^2 / 2 of every peak
    grid = trig_norm_grid(TrigMode(k), n, idx, points=200_001)
    assert abs(grid / closed - 1) <= 1e-8


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=15), st.fractions(-4, 4, max_denominator=12),
       st.fractions(-2, 2, max_denominator=12))
def test_shift_exact(coeffs, t, z):
    shifted = taylor_shift([Fraction(c) for c in coeffs], t)
    assert horner(shifted, z) == horner([Fraction(c) for c in coeffs], z + t)
