import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semigen import mu_calculus as mc
from semigen.errors import ConfigError, OutsideCertifiedDisc

mpmath.mp.dps = 40


def mp_sum(log_mu_fn, t, N=600):
    """High-precision sum of mu_n t^n / n! (oracle)."""
    return float(mpmath.fsum(mpmath.exp(log_mu_fn(n)) * mpmath.mpf(t) ** n / mpmath.factorial(n) for n in range(N)))


def test_geometric_values():
    g = mc.from_geometric(1, 3)
    assert g.log_at(5) == pytest.approx(5 * math.log(3))
    assert np.all(mc.from_geometric(1, 1).log_mu == 0)
    assert mc.from_geometric(3, 2).log_at(4) == pytest.approx(math.log(3) + 4 * math.log(2))
    with pytest.raises(ConfigError):
        mc.from_geometric(0, 1)


def test_radius_examples():
    assert mc.radius(mc.from_geometric(2, 5)).infinite
    for d in (1, 2, 5):
        assert mc.radius(mc.from_power_form(d, N_max=10_000)).value == pytest.approx(d, rel=1e-2)
    est = mc.radius(mc.from_cauchy(0.5, 0.75, N_max=10_000))
    assert est.value == pytest.approx(0.25, rel=1e-12)


def test_series_examples():
    v = mc.series_sum(mc.from_geometric(1, 1), 1.0)
    assert abs(v.value - math.e) <= v.tail_bound + 1e-15 and v.tail_bound <= 1e-12
    v = mc.series_sum(mc.from_geometric(2, 3), 1.5)
    assert v.value == pytest.approx(2 * math.exp(4.5), rel=1e-13)
    p = mc.from_power_form(2)
    v = mc.series_sum(p, 1.0)
    oracle = mp_sum(lambda n: mpmath.mpf(0) if n == 0 else n * mpmath.log(mpmath.mpf(n) / 2) - n, 1.0, 300)
    assert abs(v.value - oracle) <= v.tail_bound + 1e-13


def test_tail_examples():
    one = mc.from_geometric(1, 1)
    rem = float(mpmath.e - mpmath.fsum(1 / mpmath.factorial(n) for n in range(21)))
    b = mc.tail_bound(one, 1.0, 20)
    assert rem <= b <= 10 * rem
    g = mc.from_geometric(1, 2)
    N = 12
    expected = 2.0 ** (N + 1) / math.factorial(N + 1) / (1 - 2 / (N + 2))
    assert mc.tail_bound(g, 1.0, N) == pytest.approx(expected, rel=1e-12)
    assert mc.tail_bound(g, 0.0, 3) == 0.0


def test_outside_disc_refused():
    with pytest.raises(OutsideCertifiedDisc):
        mc.series_sum(mc.from_power_form(1), 1.5)


def test_dsl_sequence():
    seq = mc.from_dsl("(n/2)^n * exp(-n)")
    ref = mc.from_power_form(2)
    np.testing.assert_allclose(seq.log_mu[1:50], ref.log_mu[1:50], rtol=1e-12)


def test_truncation_order():
    g = mc.from_geometric(1, 1)
    N, tail = mc.truncation_order(g, 1.0, 1e-10)
    assert tail <= 1e-10
    assert mc.tail_bound(g, 1.0, N - 1) > 1e-10


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 3), st.floats(0, 10))
def test_geometric_sum_closed_form(M, mu, t):
    v = mc.series_sum(mc.from_geometric(M, mu), t)
    exact = M * math.exp(mu * t)
    assert abs(v.value - exact) <= v.tail_bound + 1e-12 * max(1.0, exact)


sequences = st.one_of(
    st.builds(lambda d, f: (mc.from_power_form(d), f * d, lambda n, d=d: mpmath.mpf(0) if n == 0 else n * mpmath.log(mpmath.mpf(n) / d) - n),
              st.sampled_from([1.0, 2.0, 3.0]), st.floats(0.05, 0.8)),
    st.builds(lambda q, g, f: (mc.from_cauchy(q, q + g), f * g,
                               lambda n, q=q, g=g: mpmath.log(mpmath.factorial(n)) + mpmath.log(q + g) - (n + 1) * mpmath.log(g)),
              st.floats(0.1, 1.0), st.floats(0.5, 2.0), st.floats(0.05, 0.6)),
)


@settings(max_examples=30, deadline=None)
@given(sequences, st.integers(2, 40))
def test_tail_bound_is_upper_bound(seq, N):
    mu, t, lf = seq
    partial = mp_sum(lf, t, N + 1)
    full = mp_sum(lf, t, 1500)
    assert full - partial <= mc.tail_bound(mu, t, N) * (1 + 1e-9) + 1e-14
    v = mc.series_sum(mu, t)
    assert v.value + v.tail_bound >= full - 1e-12 * max(1, full)
    assert full >= v.value - 1e-12 * max(1, full)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["geo", "power", "cauchy"]), st.floats(1e-3, 1e3))
def test_radius_scale_invariant(kind, c):
    mu = {"geo": mc.from_geometric(1, 2), "power": mc.from_power_form(2), "cauchy": mc.from_cauchy(1, 2.5)}[kind]
    a, b = mc.radius(mu), mc.radius(mu.scaled(c))
    if a.infinite:
        assert b.infinite
    else:
        assert b.value == pytest.approx(a.value, rel=mc.RADIUS_TOL)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1.8), st.floats(0, 1.8))
def test_f_monotone(t1, t2):
    mu = mc.from_power_form(2)
    lo, hi = sorted((t1, t2))
    assert mc.series_sum(mu, lo).value <= mc.series_sum(mu, hi).value + 1e-12
