"""
Replica-symmetric variational bound for the transverse-field SK model.

For the square-root interpolation between the coupled model and independent
spins in a Gaussian field, integrating the upper bound on d phi_N / ds gives

    phi_N(1) <= Phi(q, b0) = E log 2 cosh(beta sqrt((sqrt(q) z + h)^2 + b0^2))
                           + beta^4 q (b0^2 + b0 b1 + b1^2) / 18
                           + log(cosh(beta b1) / cosh(beta b0))
                           + beta^2 (1 - q)^2 / 4

with z ~ N(0, 1). This module evaluates Phi and its gradient by
Gauss-Hermite quadrature, finds its constrained stationary points, and
provides the classical (b1 = 0) and h = 0 special cases.

The inequality uses b'(s) = b1 - b0 >= 0 together with
tanh(beta b(s)) >= <sigma^x>, so it is only established for
0 <= b0 <= b1. The solver searches that box.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import roots_hermitenorm

__all__ = [
    "SKParams",
    "Quadrature",
    "VariationalPoint",
    "StationaryResult",
    "RootNotFound",
    "gauss_hermite",
    "phi0",
    "phi_bound",
    "grad_phi",
    "default_starts",
    "solve_stationary",
    "classical_q",
    "at_line_check",
    "h0_special",
    "literature_comparison",
    "strong_field_deviation",
    "DEFAULT_QUAD_COUNT",
]

# tanh and log cosh have poles at distance ~pi / (2 beta sqrt(q)) from the
# real axis, so convergence is only geometric; 1024 nodes keep q* good to
# ~1e-8 up to beta = 5
DEFAULT_QUAD_COUNT = 1024
SOLVER_TOL = 1e-10
SCAN_SUBDIVISIONS = 1000


class RootNotFound(RuntimeError):
    """No sign change of a scalar equation inside its search bracket."""


@dataclass(frozen=True)
class SKParams:
    beta: float
    b1: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.b1 < 0:
            raise ValueError(f"b1 must be nonnegative, got {self.b1}")


@dataclass(frozen=True)
class Quadrature:
    """Nodes and weights with sum(w * f(z)) ~ E f(z) for z ~ N(0, 1)."""

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.nodes)

    def expect(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@dataclass(frozen=True)
class VariationalPoint:
    q: float
    b0: float
    phi_value: float
    grad_q: float
    grad_b0: float
    residual: float
    converged: bool
    iterations: int
    active: tuple[str, ...] = ()
    selected: bool = False


@dataclass(frozen=True)
class StationaryResult:
    params: SKParams
    points: list[VariationalPoint]
    selected: Optional[VariationalPoint]

    @property
    def bound(self) -> Optional[float]:
        return None if self.selected is None else self.selected.phi_value


def gauss_hermite(count: int = DEFAULT_QUAD_COUNT) -> Quadrature:
    """Gauss-Hermite rule rescaled to the standard normal measure."""
    if count < 2:
        raise ValueError("count must be >= 2")
    x, w = roots_hermitenorm(count)
    return Quadrature(nodes=x, weights=w / w.sum())


_DEFAULT_QUAD: Optional[Quadrature] = None


def _quad(quad: Optional[Quadrature]) -> Quadrature:
    global _DEFAULT_QUAD
    if quad is not None:
        return quad
    if _DEFAULT_QUAD is None:
        _DEFAULT_QUAD = gauss_hermite(DEFAULT_QUAD_COUNT)
    return _DEFAULT_QUAD


def _log2cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x))


def _tanh_over(x):
    """tanh(x)/x with the value 1 at 0."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = np.abs(x) > 1e-8
    out[nz] = np.tanh(x[nz]) / x[nz]
    small = ~nz
    out[small] = 1.0 - x[small] ** 2 / 3.0
    return out


def _check_q(q: float) -> None:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")


def _local_field(q, params, quad):
    return math.sqrt(q) * quad.nodes + params.h


def phi0(q: float, b0: float, params: SKParams, quad: Optional[Quadrature] = None) -> float:
    """phi_N(0) = E log 2 cosh(beta sqrt((sqrt(q) z + h)^2 + b0^2)); independent of N."""
    _check_q(q)
    quad = _quad(quad)
    x = _local_field(q, params, quad)
    return quad.expect(_log2cosh(params.beta * np.hypot(x, b0)))


def _coupling_sum(b0: float, b1: float) -> float:
    return b0 * b0 + b0 * b1 + b1 * b1


def _phi_terms(q, b0, params, quad):
    beta, b1 = params.beta, params.b1
    return (
        phi0(q, b0, params, quad),
        beta**4 * q * _coupling_sum(b0, b1) / 18.0,
        _log2cosh(beta * b1) - _log2cosh(beta * b0),
        beta**2 * (1.0 - q) ** 2 / 4.0,
    )


def phi_bound(q: float, b0: float, params: SKParams, quad: Optional[Quadrature] = None) -> float:
    """The four-term bound Phi(q, b0) on phi_N(1)."""
    return math.fsum(_phi_terms(q, b0, params, _quad(quad)))


def grad_phi(q: float, b0: float, params: SKParams, quad: Optional[Quadrature] = None) -> tuple[float, float]:
    """(dPhi/dq, dPhi/db0) in closed form.

    dPhi/dq uses the integrated-by-parts integrand

        (beta^2/2) [ x^2/E^2 sech^2(beta E) + b0^2/E^2 tanh(beta E)/(beta E) ],
        x = sqrt(q) z + h,  E = sqrt(x^2 + b0^2),

    which is bounded and tends to beta^2/2 as E -> 0, so it is finite at q = 0.
    """
    _check_q(q)
    quad = _quad(quad)
    beta, b1 = params.beta, params.b1
    x = _local_field(q, params, quad)
    e = np.hypot(x, b0)
    be = beta * e
    frac = np.full_like(e, 0.5)
    nz = e > 0
    frac[nz] = (x[nz] / e[nz]) ** 2
    sech2 = 1.0 / np.cosh(np.minimum(be, 350.0)) ** 2
    tanh_ratio = _tanh_over(be)
    dq = (
        0.5 * beta**2 * quad.expect(frac * sech2 + (1.0 - frac) * tanh_ratio)
        + beta**4 * _coupling_sum(b0, b1) / 18.0
        - 0.5 * beta**2 * (1.0 - q)
    )
    db0 = (
        beta**2 * b0 * quad.expect(tanh_ratio)
        - beta * math.tanh(beta * b0)
        + beta**4 * q * (2.0 * b0 + b1) / 18.0
    )
    return float(dq), float(db0)


# --------------------------------------------------------------------------
# stationary points


def default_starts(b1: float) -> list[tuple[float, float]]:
    return [(q, b) for q in (0.0, 0.25, 0.5, 0.75, 1.0) for b in (0.0, 0.5 * b1, b1)]


def _box(params: SKParams) -> tuple[np.ndarray, np.ndarray]:
    return np.array([0.0, 0.0]), np.array([1.0, params.b1])


def _active_set(x, g, lo, hi, eps=1e-14) -> np.ndarray:
    """Coordinates pinned at a bound with the gradient pointing outward."""
    at_lo = (x <= lo + eps) & (g > 0)
    at_hi = (x >= hi - eps) & (g < 0)
    fixed = lo >= hi - eps  # degenerate box side (b1 = 0)
    return at_lo | at_hi | fixed


def _jacobian(x, params, quad, step=1e-6) -> np.ndarray:
    """Finite-difference Jacobian of the gradient (symmetrized).

    q-differences are one-sided at q = 0 and q = 1; Phi is smooth in b0
    across the box edges so b0-differences are always central.
    """
    jac = np.zeros((2, 2))
    for j in range(2):
        up, dn = x[j] + step, x[j] - step
        if j == 0:
            up, dn = min(up, 1.0), max(dn, 0.0)
        xu, xd = x.copy(), x.copy()
        xu[j], xd[j] = up, dn
        jac[:, j] = (np.array(grad_phi(*xu, params, quad)) - np.array(grad_phi(*xd, params, quad))) / (up - dn)
    return 0.5 * (jac + jac.T)


def _projected(x, params, quad, lo, hi):
    g = np.array(grad_phi(*x, params, quad))
    active = _active_set(x, g, lo, hi)
    return g, active, float(np.max(np.abs(g[~active]), initial=0.0))


def _newton_from(start, params, quad, tol, max_iter) -> VariationalPoint:
    lo, hi = _box(params)
    x = np.clip(np.asarray(start, dtype=float), lo, hi)
    f = phi_bound(*x, params, quad)
    g, active, residual = _projected(x, params, quad, lo, hi)
    it = 0
    while residual >= tol and it < max_iter:
        it += 1
        free = ~active
        jac = _jacobian(x, params, quad)[np.ix_(free, free)]
        evals = np.linalg.eigvalsh(jac)
        # shift an indefinite Hessian so the step is a descent direction
        shift = 0.0
        if evals[0] <= 1e-10 * max(1.0, abs(evals[-1])):
            shift = 1e-8 - evals[0] + 1e-3 * abs(evals[-1])
        step = np.zeros(2)
        step[free] = -np.linalg.solve(jac + shift * np.eye(free.sum()), g[free])

        t = 1.0
        for _ in range(21):
            trial = np.clip(x + t * step, lo, hi)
            f_trial = phi_bound(*trial, params, quad)
            if f_trial <= f + 1e-14 * max(1.0, abs(f)):
                break
            t *= 0.5
        else:
            break
        if np.array_equal(trial, x):
            break
        x, f = trial, f_trial
        g, active, residual = _projected(x, params, quad, lo, hi)

    return VariationalPoint(
        q=float(x[0]),
        b0=float(x[1]),
        phi_value=float(f),
        grad_q=float(g[0]),
        grad_b0=float(g[1]),
        residual=residual,
        converged=residual < tol,
        iterations=it,
        active=tuple(name for name, flag in zip(("q", "b0"), active) if flag),
    )


def solve_stationary(
    params: SKParams,
    quad: Optional[Quadrature] = None,
    starts: Optional[Sequence[tuple[float, float]]] = None,
    tol: float = SOLVER_TOL,
    max_iter: int = 200,
) -> StationaryResult:
    """Damped projected Newton from several starts on the box
    [0, 1] x [0, b1]; returns all distinct converged points and flags the
    one with the least Phi.

    A point counts as stationary when the gradient components not pinned
    by an active box constraint vanish (KKT conditions).
    """
    quad = _quad(quad)
    starts = default_starts(params.b1) if starts is None else list(starts)
    if not starts:
        raise ValueError("at least one start is required")
    found: list[VariationalPoint] = []
    failed: list[VariationalPoint] = []
    for start in starts:
        pt = _newton_from(start, params, quad, tol, max_iter)
        if not pt.converged:
            failed.append(pt)
            continue
        if all(math.hypot(pt.q - o.q, pt.b0 - o.b0) >= 1e-6 for o in found):
            found.append(pt)
    if not found:
        return StationaryResult(params=params, points=failed, selected=None)
    best = min(range(len(found)), key=lambda i: (found[i].phi_value, found[i].q, found[i].b0))
    found[best] = replace(found[best], selected=True)
    return StationaryResult(params=params, points=found, selected=found[best])


# --------------------------------------------------------------------------
# classical limit and AT line


def classical_q(
    beta: float,
    h: float,
    quad: Optional[Quadrature] = None,
    tol: float = 1e-13,
    max_iter: int = 100_000,
    damping: float = 0.5,
) -> float:
    """Solution of q = E tanh^2(beta (sqrt(q) z + h)).

    At h = 0 and beta <= 1 the only solution is q = 0 (tanh^2 y <= y^2).
    At h = 0 and beta > 1 the iteration starts at q = 0.99 and lands on the
    largest (nonzero) fixed point; otherwise it starts at q = 0.5.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    quad = _quad(quad)
    if h == 0 and beta <= 1.0:
        return 0.0

    def update(q):
        return quad.expect(np.tanh(beta * (math.sqrt(q) * quad.nodes + h)) ** 2)

    q = 0.99 if h == 0 else 0.5
    for _ in range(max_iter):
        new = update(q)
        if abs(new - q) < tol:
            return float(new)
        q = (1.0 - damping) * q + damping * new
    raise RuntimeError(f"classical_q did not converge for beta={beta}, h={h}")


@dataclass(frozen=True)
class ATCheck:
    q: float
    lhs: float
    stable: bool


def at_line_check(beta: float, h: float, q: Optional[float] = None, quad: Optional[Quadrature] = None) -> ATCheck:
    """E beta^2 / cosh^4(beta (sqrt(q) z + h)); stable when <= 1."""
    quad = _quad(quad)
    if q is None:
        q = classical_q(beta, h, quad)
    decay = np.exp(-np.abs(beta * (math.sqrt(q) * quad.nodes + h)))
    sech = 2.0 * decay / (1.0 + decay * decay)
    lhs = quad.expect(beta**2 * sech**4)
    return ATCheck(q=float(q), lhs=float(lhs), stable=bool(lhs <= 1.0))


# --------------------------------------------------------------------------
# h = 0 case, literature formulas, strong-field deviation


def _scan_roots(fn, lo: float, hi: float, subdivisions: int = SCAN_SUBDIVISIONS) -> list[float]:
    """All roots of ``fn`` found by a sign scan on [lo, hi] plus bisection."""
    xs = np.linspace(lo, hi, subdivisions + 1)
    ys = np.array([fn(x) for x in xs])
    roots = [float(x) for x, y in zip(xs, ys) if y == 0.0]
    for i in range(subdivisions):
        if ys[i] * ys[i + 1] < 0:
            roots.append(float(brentq(fn, xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)))
    return sorted(roots)


@dataclass(frozen=True)
class H0Solution:
    beta: float
    b1: float
    b0_roots: list[float]
    phi_at_roots: list[float]
    selected_b0: float
    bound: float
    b0_independent: bool


def h0_special(beta: float, b1: float, quad: Optional[Quadrature] = None) -> H0Solution:
    """h = 0 with q = 0: the equation fixing b0 and the resulting free-energy bound.

    ``bound`` is a lower bound on the free energy -phi_N(1)/beta. At q = 0 and
    h = 0, Phi(0, b0) does not depend on b0, so the bound is the same for
    every root.
    """
    params = SKParams(beta=beta, b1=b1, h=0.0)

    def eq(b0):
        return math.tanh(beta * b0) - beta * b0 + beta**3 * b0 * _coupling_sum(b0, b1) / 9.0

    roots = _scan_roots(eq, 0.0, b1 + 5.0)
    if not roots or roots[0] != 0.0:
        roots = [0.0] + [r for r in roots if r > 0.0]
    phis = [phi_bound(0.0, r, params, quad) for r in roots]
    best = min(range(len(roots)), key=lambda i: (phis[i], roots[i]))
    bound = -(float(_log2cosh(beta * b1)) / beta) - beta / 4.0
    return H0Solution(
        beta=beta,
        b1=b1,
        b0_roots=roots,
        phi_at_roots=phis,
        selected_b0=roots[best],
        bound=bound,
        b0_independent=bool(np.ptp(phis) <= 1e-12 * max(1.0, abs(phis[0]))),
    )


@dataclass(frozen=True)
class LiteratureComparison:
    beta: float
    b1: float
    static_approx: float
    annealed_upper: float
    variational_lower: float
    violates: bool


def literature_comparison(beta: float, b1: float) -> LiteratureComparison:
    """Static-approximation free energy at h = 0 against the rigorous
    annealed upper bound; ``violates`` is True when the former exceeds the latter.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if b1 < 0:
        raise ValueError("b1 must be nonnegative")
    bb = beta * b1
    static = -float(_log2cosh(bb)) / beta
    tanh_ratio = 1.0 if bb == 0 else math.tanh(bb) / bb
    correction = beta / 8.0 * (1.0 / math.cosh(bb) ** 2 + tanh_ratio)
    annealed = static - correction
    return LiteratureComparison(
        beta=beta,
        b1=b1,
        static_approx=static,
        annealed_upper=annealed,
        variational_lower=static - beta / 4.0,
        violates=bool(static > annealed),
    )


@dataclass(frozen=True)
class StrongFieldDeviation:
    beta: float
    b1: float
    b0: float
    D: float


def strong_field_deviation(beta: float, b1: float) -> StrongFieldDeviation:
    """Smallest nonnegative root of tanh(beta b0) = beta^3 (2 b0 + b1) / 18 and
    D = beta^4 (b0^2 + b0 b1 + b1^2) / 18 + log(cosh(beta b1) / cosh(beta b0)).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")

    def eq(b0):
        return math.tanh(beta * b0) - beta**3 * (2.0 * b0 + b1) / 18.0

    roots = [r for r in _scan_roots(eq, 0.0, b1 + 5.0) if r >= 0.0]
    if not roots:
        raise RootNotFound(f"no root of the strong-field b0 equation on [0, {b1 + 5.0}] (beta={beta}, b1={b1})")
    b0 = roots[0]
    d = beta**4 * _coupling_sum(b0, b1) / 18.0 + float(_log2cosh(beta * b1) - _log2cosh(beta * b0))
    return StrongFieldDeviation(beta=beta, b1=b1, b0=b0, D=float(d))
