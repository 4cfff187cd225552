import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from spinbounds.sk_variational import (
    RootNotFound,
    SKParams,
    at_line_check,
    classical_q,
    gauss_hermite,
    grad_phi,
    h0_special,
    literature_comparison,
    phi0,
    phi_bound,
    solve_stationary,
    strong_field_deviation,
)

# classical overlap and stability sum, from scipy.integrate.quad plus brentq
CLASSICAL_ORACLE = [
    (2.0, 0.0, 0.5303683920507948, 1.362673337521527),
    (1.5, 0.3, 0.4224383919423924, 0.9826348991056181),
    (0.8, 0.5, 0.20340336366431344, 0.4285940672916867),
    (3.0, 0.1, 0.7029309324097065, 1.8443818649870478),
]


def gaussian_mean(fn):
    val, _ = integrate.quad(
        lambda z: fn(z) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi), -40, 40, epsabs=1e-14, epsrel=1e-13, limit=400
    )
    return val


def log2cosh(x):
    x = abs(x)
    return x + math.log1p(math.exp(-2 * x))


@pytest.mark.parametrize("k", range(0, 8))
def test_quadrature_moments(k):
    rule = gauss_hermite(64)
    assert rule.expect(rule.nodes ** (2 * k)) == pytest.approx(math.prod(range(1, 2 * k, 2)), rel=1e-12)


def test_quadrature_rejects_tiny_rule():
    with pytest.raises(ValueError):
        gauss_hermite(1)


@pytest.mark.parametrize("q,b0,beta,h", [(0.3, 0.4, 1.2, 0.1), (0.9, 0.0, 3.0, 0.0), (0.0, 1.0, 0.5, 0.7)])
def test_phi0_against_adaptive_quadrature(q, b0, beta, h):
    ref = gaussian_mean(lambda z: log2cosh(beta * math.hypot(math.sqrt(q) * z + h, b0)))
    assert phi0(q, b0, SKParams(beta, 0.4, h)) == pytest.approx(ref, rel=1e-10)


@given(st.floats(0.1, 3.0), st.floats(0.0, 1.0), st.floats(-1.0, 1.0))
def test_bound_reduces_to_classical_functional(beta, q, h):
    params = SKParams(beta, 0.0, h)
    expected = phi0(q, 0.0, params) + beta**2 * (1 - q) ** 2 / 4
    assert phi_bound(q, 0.0, params) == pytest.approx(expected, rel=1e-13)


@given(
    st.floats(0.2, 3.0),
    st.floats(0.0, 1.5),
    st.floats(-1.0, 1.0),
    st.floats(0.05, 0.95),
    st.floats(0.0, 2.0),
)
def test_gradient_matches_finite_differences(beta, b1, h, q, b0):
    params = SKParams(beta, b1, h)
    step = 1e-5
    fd_q = (phi_bound(q + step, b0, params) - phi_bound(q - step, b0, params)) / (2 * step)
    fd_b = (phi_bound(q, b0 + step, params) - phi_bound(q, b0 - step, params)) / (2 * step)
    gq, gb = grad_phi(q, b0, params)
    scale = max(1.0, abs(gq), abs(gb))
    assert abs(gq - fd_q) < 1e-6 * scale
    assert abs(gb - fd_b) < 1e-6 * scale


def test_gradient_finite_at_q_zero():
    gq, _ = grad_phi(0.0, 0.0, SKParams(1.0, 0.5, 0.0))
    assert math.isfinite(gq)


@pytest.mark.parametrize("beta,h,q_ref,at_ref", CLASSICAL_ORACLE)
def test_classical_q_against_oracle(beta, h, q_ref, at_ref):
    q = classical_q(beta, h)
    assert q == pytest.approx(q_ref, abs=1e-9)
    assert at_line_check(beta, h, q).lhs == pytest.approx(at_ref, rel=1e-8)


def test_paramagnetic_phase():
    assert classical_q(0.5, 0.0) == 0.0
    check = at_line_check(0.5, 0.0)
    assert check.stable and check.lhs == pytest.approx(0.25, abs=1e-14)


@given(st.floats(0.1, 3.0), st.floats(0.0, 1.5))
def test_solver_kkt_conditions(beta, b1):
    params = SKParams(beta, b1, 0.2)
    result = solve_stationary(params)
    assert result.selected is not None
    for p in result.points:
        gq, gb = grad_phi(p.q, p.b0, params)
        # interior coordinates stationary, bound coordinates pushing outward
        for x, g, lo, hi in ((p.q, gq, 0.0, 1.0), (p.b0, gb, 0.0, b1)):
            if lo < x < hi:
                assert abs(g) < 1e-8
            elif x == lo and hi > lo:
                assert g > -1e-8
            elif x == hi and hi > lo:
                assert g < 1e-8
    assert result.selected.phi_value == min(p.phi_value for p in result.points)


@given(st.floats(0.1, 2.5), st.floats(0.0, 1.0))
def test_selected_point_beats_a_grid(beta, h):
    params = SKParams(beta, 0.6, h)
    best = solve_stationary(params).selected.phi_value
    grid = min(phi_bound(q, b, params) for q in np.linspace(0, 1, 21) for b in np.linspace(0, 0.6, 7))
    assert best <= grid + 1e-10


@pytest.mark.parametrize("beta,h", [(0.7, 0.0), (2.0, 0.0), (1.5, 0.4)])
def test_solver_matches_classical_without_transverse_field(beta, h):
    sel = solve_stationary(SKParams(beta, 0.0, h)).selected
    assert sel.b0 == 0.0
    assert sel.q == pytest.approx(classical_q(beta, h), abs=1e-8)


@given(st.floats(0.1, 3.0), st.floats(0.0, 3.0))
def test_h0_bound_is_b0_independent(beta, b1):
    sol = h0_special(beta, b1)
    assert sol.b0_independent
    assert sol.bound == pytest.approx(-log2cosh(beta * b1) / beta - beta / 4, rel=1e-13)
    assert -sol.bound * beta == pytest.approx(phi_bound(0.0, sol.selected_b0, SKParams(beta, b1)), rel=1e-12)


@given(st.floats(0.05, 5.0), st.floats(1e-3, 5.0))
def test_static_approximation_violates(beta, b1):
    cmp = literature_comparison(beta, b1)
    assert cmp.violates
    assert cmp.variational_lower <= cmp.annealed_upper + 1e-12


def test_strong_field_root_solves_equation():
    dev = strong_field_deviation(1.0, 0.5)
    assert math.tanh(dev.b0) == pytest.approx((2 * dev.b0 + 0.5) / 18, abs=1e-13)


def test_strong_field_absent_root_is_reported():
    with pytest.raises(RootNotFound):
        strong_field_deviation(3.0, 1.0)


@pytest.mark.parametrize("bad", [dict(beta=0.0), dict(beta=1.0, b1=-1.0)])
def test_params_validated(bad):
    with pytest.raises(ValueError):
        SKParams(**bad)
