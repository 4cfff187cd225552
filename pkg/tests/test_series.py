import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinbounds.series import (
    Kernel,
    bernoulli_numbers,
    expected_sign,
    kernel_value,
    remainder,
    taylor_series,
    taylor_table,
    verify_sign_definiteness,
    zeta_cross_check,
)

# Maclaurin coefficients of z coth z, tanh(z)/z and z / log((1+z)/(1-z)),
# orders 0..12, produced once with sympy.series and frozen here.
ORACLE = {
    "f": ["1", "1/3", "-1/45", "2/945", "-1/4725", "2/93555", "-1382/638512875"],
    "g": ["1", "-1/3", "2/15", "-17/315", "62/2835", "-1382/155925", "21844/6081075"],
    "h": ["1/2", "-1/6", "-2/45", "-22/945", "-214/14175", "-5098/467775", "-5359534/638512875"],
}

even_orders = st.integers(min_value=0, max_value=12).map(lambda k: 2 * k)


@pytest.mark.parametrize("kernel", ["f", "g", "h"])
def test_table_matches_symbolic_oracle(kernel):
    table = taylor_table(kernel, 12)
    assert [table[m] for m in range(0, 13, 2)] == [Fraction(v) for v in ORACLE[kernel]]


def test_bernoulli_values():
    b = bernoulli_numbers(12)
    assert b[:3] == [1, Fraction(-1, 2), Fraction(1, 6)]
    assert b[12] == Fraction(-691, 2730)
    assert all(b[m] == 0 for m in range(3, 13, 2))


@pytest.mark.parametrize("n", range(2, 31, 2))
def test_f_derivatives_agree_with_zeta(n):
    table_value, reference = zeta_cross_check(n)
    assert table_value == pytest.approx(reference, rel=1e-13)


@given(even_orders)
def test_f_times_g_is_one(order):
    prod = taylor_series("f", order) * taylor_series("g", order)
    assert prod.coefficients == (Fraction(1),) + (Fraction(0),) * order


@given(even_orders)
def test_odd_coefficients_vanish(order):
    for kernel in Kernel:
        coeffs = taylor_series(kernel, order).coefficients
        assert all(c == 0 for c in coeffs[1::2])


def test_bad_orders_and_kernels():
    with pytest.raises(ValueError):
        taylor_table("f", 3)
    with pytest.raises(ValueError):
        taylor_table("q", 4)
    with pytest.raises(ValueError):
        remainder("h", 2, 1.0)
    with pytest.raises(ValueError):
        remainder("f", -2, 0.3)


def test_kernel_values_at_known_points():
    assert kernel_value("f", 0.0) == 1.0
    assert kernel_value("g", 0.0) == 1.0
    assert kernel_value("h", 0.0) == 0.5
    assert kernel_value("f", 1.3) == pytest.approx(1.3 / math.tanh(1.3), rel=1e-15)
    assert kernel_value("h", 0.5) == pytest.approx(0.5 / math.log(3.0), rel=1e-15)


@pytest.mark.parametrize("kernel", ["f", "g", "h"])
@pytest.mark.parametrize("n", [0, 2, 4, 6])
def test_remainder_continuous_across_crossover(kernel, n):
    # the tail sum and the direct difference must agree on both sides of 0.5
    left, right = remainder(kernel, n, np.array([0.4999999, 0.5000001]))
    assert left == pytest.approx(right, rel=1e-5, abs=1e-13)


@given(st.floats(min_value=1e-3, max_value=0.2), st.sampled_from([0, 2, 4, 6]), st.sampled_from(list(Kernel)))
def test_remainder_leading_term(x, n, kernel):
    lead = float(taylor_table(kernel, n + 2)[n + 2]) * x ** (n + 2)
    assert remainder(kernel, n, x) == pytest.approx(lead, rel=0.2)


def test_expected_sign_pattern():
    assert [expected_sign("f", n) for n in (0, 2, 4, 6)] == [1, -1, 1, -1]
    assert [expected_sign("g", n) for n in (0, 2, 4, 6)] == [-1, 1, -1, 1]
    assert {expected_sign("h", n) for n in (0, 2, 4, 6)} == {-1}


@given(
    st.sampled_from([Kernel.F, Kernel.G]),
    st.sampled_from([0, 2, 4, 6, 8, 10]),
    st.floats(min_value=-20, max_value=20, allow_nan=False),
)
def test_remainder_sign_fg(kernel, n, x):
    value = remainder(kernel, n, x)
    scale = max(1.0, abs(kernel_value(kernel, x)))
    assert expected_sign(kernel, n) * value >= -1e-12 * scale


@given(st.sampled_from([0, 2, 4, 6]), st.floats(min_value=-0.9999, max_value=0.9999))
def test_remainder_sign_h(n, x):
    assert remainder("h", n, x) <= 1e-12


def test_sign_report_detects_wrong_sign(monkeypatch):
    import spinbounds.series as series

    monkeypatch.setattr(series, "expected_sign", lambda kernel, n: 1)
    rep = series.verify_sign_definiteness("f", 2)
    assert not rep.passed
    assert rep.worst_violation > 0.1 and abs(rep.worst_x) > 1


def test_sign_report_accepts_point_count():
    rep = verify_sign_definiteness("h", 4, 501)
    assert len(rep.grid) == 501 and rep.passed
