"""
Truncated-series bounds on the Duhamel function and commutator
expectations, evaluated on a Gibbs state, plus the spectral-identity
residuals and the Falk-Bruch corollary used for the TFSK model.

Every bound is computed from explicit commutator chains and thermal
expectations; the spectral measure is used only in
:func:`lemma_identity_suite`, so the two routes stay independent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .hilbert import (
    DenseOperator,
    GibbsContext,
    anticommutator,
    bilinear_expectations,
    commutator,
    duhamel,
    duhamel_by_quadrature,
    gibbs,
    nested_commutator,
    spectral_measure,
    thermal_expectation,
)
from .series import Kernel, kernel_value, taylor_table

__all__ = [
    "ParityError",
    "InapplicableError",
    "BoundReport",
    "LemmaResiduals",
    "FalkBruchResult",
    "default_tol",
    "admissible_orders",
    "check_order",
    "chain_coefficients",
    "theorem1_bounds",
    "theorem2_bounds",
    "theorem3_bounds",
    "theorem4_upper",
    "theorem_bounds",
    "lemma_identity_suite",
    "falk_bruch_corollary",
    "phi_inverse",
    "random_instance",
]

TOL = 1e-10


class ParityError(ValueError):
    """Truncation order not admissible for the requested theorem."""


class InapplicableError(ValueError):
    """Inputs fall outside the domain where a bound is stated."""


@dataclass(frozen=True)
class BoundReport:
    theorem: str
    n: int
    lower: Optional[float]
    exact: float
    upper: float
    margin_lower: Optional[float]
    margin_upper: float
    satisfied: bool
    tol: float
    kernel_h_bound: Optional[float] = None
    ratio: Optional[float] = None


@dataclass(frozen=True)
class LemmaResiduals:
    anticommutator: float
    commutator: float
    double_commutator: float
    duhamel: float
    moment_shift: float
    quadrature: float

    def spectral(self) -> tuple[float, ...]:
        return (self.anticommutator, self.commutator, self.double_commutator, self.duhamel, self.moment_shift)


@dataclass(frozen=True)
class FalkBruchResult:
    argument: float
    r: float
    lhs: float
    rhs: float
    satisfied: bool


def default_tol(exact: float) -> float:
    return TOL * max(1.0, abs(exact))


def admissible_orders(theorem: str, up_to: int = 10) -> list[int]:
    theorem = theorem.upper()
    if theorem == "T1":
        return [n for n in range(2, up_to + 1, 2) if (n // 2) % 2 == 1]
    return [n for n in range(0, up_to + 1, 2) if (n // 2) % 2 == 0]


def check_order(theorem: str, n: int) -> None:
    theorem = theorem.upper()
    if n < 0 or n % 2:
        raise ParityError(f"{theorem}: n must be a nonnegative even integer, got {n}")
    half = n // 2
    if theorem == "T1" and half % 2 != 1:
        raise ParityError(f"T1 requires n/2 odd, got n={n}")
    if theorem in ("T2", "T3", "T4") and half % 2 != 0:
        raise ParityError(f"{theorem} requires n/2 even, got n={n}")


def _chain(ctx: GibbsContext, a: DenseOperator, kmax: int) -> list[DenseOperator]:
    out = [a]
    for _ in range(kmax):
        out.append(commutator(ctx.hamiltonian, out[-1]))
    return out


def _expect(ctx: GibbsContext, op: DenseOperator) -> float:
    return thermal_expectation(ctx, op).real


def _report(theorem, n, lower, exact, upper, **extra) -> BoundReport:
    tol = default_tol(exact)
    ok = exact <= upper + tol and (lower is None or lower - tol <= exact)
    return BoundReport(
        theorem=theorem,
        n=n,
        lower=lower,
        exact=exact,
        upper=upper,
        margin_lower=None if lower is None else exact - lower,
        margin_upper=upper - exact,
        satisfied=bool(ok),
        tol=tol,
        **extra,
    )


def chain_coefficients(theorem: str, n: int) -> list[tuple[int, Fraction]]:
    """Exact coefficients of the longest truncated sum of a theorem at order n.

    Entry k is ``(p, c)``: the k-th term is ``c * beta**p`` times the k-th
    chain expectation. For T1 these are ``<[C^{k-1}+, C^k]>`` (k >= 1); for
    T2 ``<{C^k+, C^k}>``; for T3 ``<{C^{k+1}+, C^{k+1}}>``. The shorter sum
    drops the last entry. For T4, ``p`` is the power of r and the sum
    multiplies ``<{A+,A}>/2``.
    """
    theorem = theorem.upper()
    check_order(theorem, n)
    kmax = n // 2 + 1
    if theorem == "T1":
        f = taylor_table(Kernel.F, 2 * kmax)
        return [(2 * k - 1, f[2 * k] / 2 ** (2 * k)) for k in range(1, kmax + 1)]
    if theorem in ("T2", "T3"):
        g = taylor_table(Kernel.G, 2 * kmax)
        shift = 0 if theorem == "T2" else 1
        return [(2 * k + shift, g[2 * k] / 2 ** (2 * k + 1)) for k in range(kmax + 1)]
    if theorem == "T4":
        h = taylor_table(Kernel.H, n)
        return [(2 * k, 2 * h[2 * k]) for k in range(n // 2 + 1)]
    raise ValueError(f"unknown theorem {theorem!r}")


def _weighted(coeffs, beta, values) -> list[float]:
    return [float(c) * beta**p * v for (p, c), v in zip(coeffs, values)]


def theorem1_bounds(ctx: GibbsContext, a: DenseOperator, n: int) -> BoundReport:
    """Two-sided bound on <{A+,A}>/2 - (A+,A) from <[C^{k-1}+, C^k]>.

    Upper bound sums k = 1..n/2, lower bound k = 1..n/2+1 (n/2 odd).
    """
    coeffs = chain_coefficients("T1", n)
    chain = _chain(ctx, a, len(coeffs))
    values = [_expect(ctx, commutator(chain[k - 1].dag(), chain[k])) for k in range(1, len(coeffs) + 1)]
    terms = _weighted(coeffs, ctx.beta, values)
    anti = _expect(ctx, anticommutator(a.dag(), a))
    exact = 0.5 * anti - duhamel(ctx, a.dag(), a).real
    return _report("T1", n, math.fsum(terms), exact, math.fsum(terms[:-1]))


def _anticommutator_chain(ctx, a, kmax) -> list[float]:
    chain = _chain(ctx, a, kmax)
    return [_expect(ctx, anticommutator(c.dag(), c)) for c in chain]


def theorem2_bounds(ctx: GibbsContext, a: DenseOperator, n: int) -> BoundReport:
    """Two-sided bound on (A+,A) from <{C^k+, C^k}> (n/2 even)."""
    coeffs = chain_coefficients("T2", n)
    terms = _weighted(coeffs, ctx.beta, _anticommutator_chain(ctx, a, len(coeffs) - 1))
    exact = duhamel(ctx, a.dag(), a).real
    return _report("T2", n, math.fsum(terms), exact, math.fsum(terms[:-1]))


def theorem3_bounds(ctx: GibbsContext, a: DenseOperator, n: int) -> BoundReport:
    """Two-sided bound on <[A+,[H,A]]> from <{C^{k+1}+, C^{k+1}}> (n/2 even)."""
    coeffs = chain_coefficients("T3", n)
    terms = _weighted(coeffs, ctx.beta, _anticommutator_chain(ctx, a, len(coeffs))[1:])
    exact = bilinear_expectations(ctx, a.dag(), a).double_comm.real
    return _report("T3", n, math.fsum(terms), exact, math.fsum(terms[:-1]))


def theorem4_upper(ctx: GibbsContext, a: DenseOperator, n: int) -> BoundReport:
    """Upper bound on (A+,A) through r = <[A+,A]> / <{A+,A}> (n/2 even).

    The report also carries the untruncated value ``<{A+,A}> h(r)``.
    """
    pair = bilinear_expectations(ctx, a.dag(), a)
    anti, comm = pair.anticomm.real, pair.comm.real
    if anti <= 0:
        raise InapplicableError("T4 needs <{A+,A}> > 0")
    r = comm / anti
    if abs(r) >= 1.0:
        raise InapplicableError(f"T4 needs |r| < 1, got r={r}")
    coeffs = chain_coefficients("T4", n)
    upper = 0.5 * anti * math.fsum(float(c) * r**p for p, c in coeffs)
    exact = duhamel(ctx, a.dag(), a).real
    h_value = anti * kernel_value(Kernel.H, r)
    return _report("T4", n, None, exact, upper, kernel_h_bound=h_value, ratio=r)


_THEOREMS = {
    "T1": theorem1_bounds,
    "T2": theorem2_bounds,
    "T3": theorem3_bounds,
    "T4": theorem4_upper,
}


def theorem_bounds(theorem: str, ctx: GibbsContext, a: DenseOperator, n: int) -> BoundReport:
    try:
        fn = _THEOREMS[theorem.upper()]
    except KeyError:
        raise ValueError(f"unknown theorem {theorem!r}") from None
    return fn(ctx, a, n)


# --------------------------------------------------------------------------
# spectral identities


def _relative(measure_side: complex, direct: complex, scale: float) -> float:
    diff = abs(measure_side - direct)
    if diff == 0.0:
        return 0.0
    return diff / max(abs(direct), scale, np.finfo(float).tiny)


def _tanh_over(beta: float, omega: np.ndarray) -> np.ndarray:
    """tanh(beta w / 2) / (beta w), equal to 1/2 at w = 0."""
    out = np.full_like(omega, 0.5)
    nz = omega != 0
    out[nz] = np.tanh(0.5 * beta * omega[nz]) / (beta * omega[nz])
    return out


def _atomwise_residual(lhs, rhs_omega, rhs_weights) -> float:
    """max |difference| between two atom lists on the union of their supports,
    relative to the total variation of the right-hand list."""
    grid = np.union1d(lhs.omega, rhs_omega)
    def on_grid(omega, weights):
        out = np.zeros(len(grid), dtype=complex)
        idx = np.searchsorted(grid, omega)
        np.add.at(out, idx, weights)
        return out
    diff = np.max(np.abs(on_grid(lhs.omega, lhs.weights) - on_grid(rhs_omega, rhs_weights)), initial=0.0)
    scale = float(np.sum(np.abs(rhs_weights)))
    if diff == 0.0:
        return 0.0
    return float(diff / max(scale, np.finfo(float).tiny))


def lemma_identity_suite(
    ctx: GibbsContext,
    a: DenseOperator,
    b: DenseOperator,
    max_shift: int = 2,
    quadrature_steps: int = 64,
) -> LemmaResiduals:
    """Relative residuals of the five spectral identities for Q_{A,B}.

    Each residual is ``|measure side - direct side|`` divided by the larger
    of ``|direct side|`` and ``sum |weight * kernel(omega)|``. The moment-shift
    residual covers both ``w^k Q_{A,B} = Q_{A, C_B^k}`` and
    ``w^{2k} Q_{A+,A} = Q_{C_A^k+, C_A^k}`` for k = 1..max_shift, atom by atom.
    """
    beta = ctx.beta
    measure = spectral_measure(ctx, a, b)
    w, q = measure.omega, measure.weights
    direct = bilinear_expectations(ctx, a, b)

    def side(kernel):
        vals = kernel * q
        return complex(np.sum(vals)), float(np.sum(np.abs(vals)))

    m1, s1 = side(np.ones_like(w))
    m2, s2 = side(np.tanh(0.5 * beta * w))
    m3, s3 = side(w * np.tanh(0.5 * beta * w))
    m4, s4 = side(_tanh_over(beta, w))
    d4 = duhamel(ctx, a, b)

    shift = 0.0
    diag = spectral_measure(ctx, a.dag(), a)
    for k in range(1, max_shift + 1):
        c_b = nested_commutator(ctx.hamiltonian, b, k)
        shifted = spectral_measure(ctx, a, c_b)
        shift = max(shift, _atomwise_residual(shifted, w, w**k * q))
        c_a = nested_commutator(ctx.hamiltonian, a, k)
        shifted = spectral_measure(ctx, c_a.dag(), c_a)
        shift = max(shift, _atomwise_residual(shifted, diag.omega, diag.omega ** (2 * k) * diag.weights))

    quad = duhamel_by_quadrature(ctx.hamiltonian, beta, a, b, steps=quadrature_steps)
    return LemmaResiduals(
        anticommutator=_relative(m1, direct.anticomm, s1),
        commutator=_relative(m2, direct.comm, s2),
        double_commutator=_relative(m3, direct.double_comm, s3),
        duhamel=_relative(m4, d4, s4),
        moment_shift=shift,
        quadrature=_relative(quad, d4, s4),
    )


# --------------------------------------------------------------------------
# Falk-Bruch corollary


def phi_inverse(u: float) -> float:
    """The r >= 0 with r tanh r = u."""
    if u < 0:
        raise InapplicableError(f"r tanh r = u has no solution for u={u} < 0")
    if u == 0:
        return 0.0
    hi = max(1.0, u) + 2.0
    return brentq(lambda r: r * math.tanh(r) - u, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def falk_bruch_corollary(ctx: GibbsContext, a: DenseOperator, tol: float = TOL) -> FalkBruchResult:
    """Check (A,A) >= Phi(<[A,[beta H, A]]>/4) where Phi(r tanh r) = tanh(r)/r.

    Intended for Hermitian A with A^2 = 1.
    """
    u = ctx.beta * bilinear_expectations(ctx, a, a).double_comm.real / 4.0
    if u < 0:
        if u > -tol:
            u = 0.0
        else:
            raise InapplicableError(f"double-commutator expectation is negative ({u})")
    r = phi_inverse(u)
    rhs = 1.0 if r == 0 else math.tanh(r) / r
    lhs = duhamel(ctx, a, a).real
    return FalkBruchResult(argument=u, r=r, lhs=lhs, rhs=rhs, satisfied=bool(lhs >= rhs - tol * max(1.0, rhs)))


# --------------------------------------------------------------------------
# random instances for the property suite


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (x + x.conj().T) / (2.0 * math.sqrt(dim))


def random_operator(rng: np.random.Generator, dim: int) -> np.ndarray:
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return x / math.sqrt(2.0 * dim)


def random_instance(
    rng: np.random.Generator,
    n_sites: int,
    beta_range: tuple[float, float] = (0.1, 5.0),
):
    """(ctx, A, B) with a random Hermitian H, random A and B, and uniform beta."""
    dim = 2**n_sites
    h = DenseOperator(n_sites, random_hermitian(rng, dim), hermitian_hint=True)
    a = DenseOperator(n_sites, random_operator(rng, dim))
    b = DenseOperator(n_sites, random_operator(rng, dim))
    beta = float(rng.uniform(*beta_range))
    return gibbs(h, beta), a, b
