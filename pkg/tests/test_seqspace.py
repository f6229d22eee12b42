import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semigen.errors import ConfigError, TailNotCertifiable
from semigen.seqspace import (
    KotheMatrix,
    SpaceDescriptor,
    finite_vector,
    geometric,
    has_continuous_norm,
    kothe_entry,
    ones,
    parse_order,
    power_decay,
    seminorm,
    unit_vector,
    validate_kothe,
)

OMEGA = KotheMatrix("omega")
S = KotheMatrix("s")


def test_kothe_entries():
    assert kothe_entry(OMEGA, 3, 2) == 0
    assert kothe_entry(OMEGA, 2, 2) == 1
    assert kothe_entry(S, 5, 2) == 25
    assert kothe_entry(KotheMatrix.custom("j^k"), 2, 3) == 8


def test_entry_array_matches_entry():
    js = np.arange(1, 30)
    for B in (OMEGA, S, KotheMatrix.custom("max(0, min(1, 2*k - j + 1))")):
        for k in (1, 3, 7):
            arr = B.entry_array(js, k)
            assert [float(v) for v in arr] == [kothe_entry(B, int(j), k) for j in js]


def test_validate():
    assert validate_kothe(S, 100, 10).valid
    bad = validate_kothe(KotheMatrix.custom("max(1, 3 - k)"), 10, 4)
    assert (1, 1) in bad.monotonicity_violations
    zero = validate_kothe(KotheMatrix.custom("0*j"), 5, 3)
    assert zero.zero_rows == [1, 2, 3, 4, 5]


def test_continuous_norm():
    assert has_continuous_norm(S).k0 == 1
    assert has_continuous_norm(KotheMatrix.custom("exp(-j/k)")).k0 == 1
    res = has_continuous_norm(OMEGA, J_max=1000, K_max=20)
    assert res.status == "refuted"
    assert res.zero_rows == {k: k + 1 for k in range(1, 21)}


@pytest.mark.parametrize("K_max", [1, 5, 64])
def test_omega_refuted_for_every_window(K_max):
    assert has_continuous_norm(OMEGA, K_max=K_max).status == "refuted"


def test_seminorm_examples():
    om, s = SpaceDescriptor(OMEGA), SpaceDescriptor(S)
    assert seminorm(ones(), 4, om) .value == 1.0
    assert seminorm(ones(), 4, om).abs_error == 0
    assert seminorm(unit_vector(5), 2, s).value == 25
    om1 = SpaceDescriptor(OMEGA, 1)
    v = seminorm(geometric(0.5), 2, om1)
    assert v.value == 0.75 and v.abs_error == 0
    assert seminorm(unit_vector(1), 3, s).value == 1
    assert seminorm(unit_vector(7), 3, om).value == 0


def test_seminorm_with_tail():
    s = SpaceDescriptor(S)
    v = seminorm(geometric(0.5), 2, s, tol=1e-12)
    brute = max((j**2) * 0.5**j for j in range(1, 200))
    assert abs(v.value - brute) <= v.abs_error + 1e-15
    s2 = SpaceDescriptor(S, 2)
    v2 = seminorm(geometric(0.5), 1, s2, tol=1e-12)
    brute2 = math.sqrt(sum((j * 0.5**j) ** 2 for j in range(1, 400)))
    assert abs(v2.value - brute2) <= v2.abs_error + 1e-14
    with pytest.raises(TailNotCertifiable):
        seminorm(ones(), 1, s)
    with pytest.raises(TailNotCertifiable):
        seminorm(power_decay(1.0), 3, s)


def test_parse_order():
    assert parse_order("inf") == math.inf
    assert parse_order("2") == 2
    assert parse_order(1.5) == 1.5
    with pytest.raises(ConfigError):
        parse_order("0.5")


orders = st.sampled_from([1.0, 2.0, 3.5, math.inf])
coeffs = st.lists(st.integers(-50, 50), min_size=1, max_size=15)


@settings(max_examples=200, deadline=None)
@given(coeffs, st.integers(1, 12), orders, st.sampled_from(["omega", "s"]))
def test_monotone_in_k(vals, k, r, fam):
    space = SpaceDescriptor(KotheMatrix(fam), r)
    x = finite_vector(vals)
    a, b = seminorm(x, k, space), seminorm(x, k + 1, space)
    assert a.value <= b.value * (1 + 1e-12) + a.abs_error + b.abs_error


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.95), st.integers(1, 6), orders)
def test_monotone_in_k_with_tails(rho, k, r):
    space = SpaceDescriptor(S, r)
    a, b = seminorm(geometric(rho), k, space), seminorm(geometric(rho), k + 1, space)
    assert a.value <= b.value * (1 + 1e-12) + a.abs_error + b.abs_error


@settings(max_examples=200, deadline=None)
@given(coeffs, coeffs, st.integers(-7, 7), st.integers(1, 6), st.sampled_from([1.0, math.inf]))
def test_triangle_and_homogeneity_exact(u, v, c, k, r):
    space = SpaceDescriptor(S, r)
    n = max(len(u), len(v))
    u = u + [0] * (n - len(u))
    v = v + [0] * (n - len(v))
    nu = seminorm(finite_vector(u), k, space).value
    nv = seminorm(finite_vector(v), k, space).value
    nsum = seminorm(finite_vector([a + b for a, b in zip(u, v)]), k, space).value
    assert nsum <= nu + nv
    assert seminorm(finite_vector([c * a for a in u]), k, space).value == abs(c) * nu


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 500), st.integers(1, 10), orders, st.sampled_from(["omega", "s"]))
def test_unit_vector_norm_is_entry(j0, k, r, fam):
    B = KotheMatrix(fam)
    assert seminorm(unit_vector(j0), k, SpaceDescriptor(B, r)).value == kothe_entry(B, j0, k)
