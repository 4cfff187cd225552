import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinbounds.bounds import (
    InapplicableError,
    ParityError,
    admissible_orders,
    chain_coefficients,
    check_order,
    falk_bruch_corollary,
    lemma_identity_suite,
    phi_inverse,
    random_instance,
    theorem_bounds,
    theorem4_upper,
)
from spinbounds.hilbert import build_tfsk, duhamel, gibbs, operator_from_terms, pauli

seeds = st.integers(min_value=0, max_value=2**32 - 1)
sites = st.integers(min_value=1, max_value=3)
ORDERS = {"T1": [2, 6, 10], "T2": [0, 4, 8], "T3": [0, 4, 8], "T4": [0, 4, 8]}


def test_worked_coefficients():
    assert chain_coefficients("T1", 2) == [(1, Fraction(1, 12)), (3, Fraction(-1, 720))]
    assert chain_coefficients("T2", 0) == [(0, Fraction(1, 2)), (2, Fraction(-1, 24))]
    assert chain_coefficients("T3", 0) == [(1, Fraction(1, 2)), (3, Fraction(-1, 24))]
    assert chain_coefficients("T4", 4) == [(0, 1), (2, Fraction(-1, 3)), (4, Fraction(-4, 45))]


@pytest.mark.parametrize("theorem,n", [("T1", 0), ("T1", 4), ("T2", 2), ("T3", 6), ("T4", 2), ("T2", 3), ("T1", -2)])
def test_parity_rejected(theorem, n):
    with pytest.raises(ParityError):
        check_order(theorem, n)


def test_admissible_orders():
    assert admissible_orders("T1") == [2, 6, 10]
    assert admissible_orders("T3") == [0, 4, 8]


@given(seeds, sites, st.sampled_from(sorted(ORDERS)))
def test_bracketing(seed, n_sites, theorem):
    ctx, a, _ = random_instance(np.random.default_rng(seed), n_sites)
    for n in ORDERS[theorem]:
        rep = theorem_bounds(theorem, ctx, a, n)
        assert rep.satisfied, rep


@given(seeds, sites)
def test_t4_untruncated_value_sits_between(seed, n_sites):
    ctx, a, _ = random_instance(np.random.default_rng(seed), n_sites)
    rep = theorem4_upper(ctx, a, 4)
    tol = 1e-10 * max(1.0, abs(rep.exact))
    assert rep.exact <= rep.kernel_h_bound + tol <= rep.upper + 2 * tol


@given(seeds, sites)
def test_lemma_identities(seed, n_sites):
    ctx, a, b = random_instance(np.random.default_rng(seed), n_sites)
    res = lemma_identity_suite(ctx, a, b)
    assert max(res.spectral()) < 1e-9
    assert res.quadrature < 1e-6


def test_t4_inapplicable_on_zero_operator():
    ctx = gibbs(build_tfsk(1, np.zeros((1, 1)), 0.0, 1.0), 1.0)
    zero = pauli(1, "z", 1) * 0.0
    with pytest.raises(InapplicableError):
        theorem4_upper(ctx, zero, 0)


@pytest.mark.parametrize("b", [0.1, 0.5, 1.0, 2.0])
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_single_spin_closed_forms(b, beta):
    ctx = gibbs(operator_from_terms([(-b, "X1")], 1), beta)
    sz = pauli(1, "z", 1)
    assert duhamel(ctx, sz, sz).real == pytest.approx(math.tanh(beta * b) / (beta * b), abs=1e-12)
    fb = falk_bruch_corollary(ctx, sz)
    assert fb.argument == pytest.approx(beta * b * math.tanh(beta * b), abs=1e-12)
    assert fb.lhs == pytest.approx(fb.rhs, abs=1e-10)


@given(st.floats(min_value=0.0, max_value=50.0))
def test_phi_inverse(u):
    r = phi_inverse(u)
    assert r >= 0
    assert r * math.tanh(r) == pytest.approx(u, rel=1e-12, abs=1e-15)


def test_phi_inverse_negative():
    with pytest.raises(InapplicableError):
        phi_inverse(-0.1)


@given(seeds, st.integers(1, 3), st.floats(0.1, 5.0))
def test_falk_bruch_on_tfsk(seed, n_sites, beta):
    rng = np.random.default_rng(seed)
    h = build_tfsk(n_sites, rng.standard_normal((n_sites, n_sites)), rng.normal(), abs(rng.normal()))
    assert falk_bruch_corollary(gibbs(h, beta), pauli(1, "z", n_sites)).satisfied
