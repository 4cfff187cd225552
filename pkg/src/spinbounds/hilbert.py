"""
Dense spin-1/2 operator algebra and the spectral machinery built on one
Hermitian eigendecomposition: Gibbs expectations, the spectral measure
Q_{A,B}, Duhamel two-point functions and nested commutators.

Tensor ordering: site 1 is the most significant factor of the Kronecker
product, so for N = 2 ``pauli(1, "z", 2) == kron(sigma_z, 1)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "MAX_SITES",
    "DenseOperator",
    "EigenSystem",
    "GibbsContext",
    "SpectralMeasure",
    "BilinearExpectations",
    "identity",
    "pauli",
    "parse_pauli_string",
    "operator_from_terms",
    "build_tfsk",
    "build_interpolated",
    "eigendecompose",
    "energies",
    "gibbs",
    "thermal_expectation",
    "spectral_measure",
    "duhamel",
    "duhamel_by_quadrature",
    "nested_commutator",
    "commutator",
    "anticommutator",
    "bilinear_expectations",
    "log_partition",
]

MAX_SITES = 12
HERMITIAN_TOL = 1e-12
# atoms closer than this (times max(1, spectral range)) are merged
DEGENERACY_TOL = 1e-9
# atoms with |weight| below this fraction of sum |weight| are dropped
PRUNE_TOL = 1e-14
SINHC_SERIES_BELOW = 1e-4

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]]),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


def _check_sites(n_sites: int, cap: int | None = None) -> None:
    cap = MAX_SITES if cap is None else cap
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    if n_sites > cap:
        raise ValueError(f"n_sites={n_sites} exceeds the size cap {cap}")


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """A 2^N x 2^N matrix acting on N spins."""

    n_sites: int
    matrix: np.ndarray = field(repr=False)
    hermitian_hint: bool = False

    def __post_init__(self):
        dim = 2**self.n_sites
        if self.matrix.shape != (dim, dim):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match 2^{self.n_sites} = {dim}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "DenseOperator":
        return DenseOperator(self.n_sites, self.matrix.conj().T, self.hermitian_hint)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        m = self.matrix
        scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny) if m.size else 1.0
        return bool(np.max(np.abs(m - m.conj().T)) <= tol * scale)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, DenseOperator):
            if other.n_sites != self.n_sites:
                raise ValueError(f"site mismatch: {self.n_sites} vs {other.n_sites}")
            return other.matrix
        raise TypeError(f"expected DenseOperator, got {type(other).__name__}")

    def __add__(self, other):
        m = self._coerce(other)
        return DenseOperator(self.n_sites, self.matrix + m, self.hermitian_hint and other.hermitian_hint)

    def __sub__(self, other):
        m = self._coerce(other)
        return DenseOperator(self.n_sites, self.matrix - m, self.hermitian_hint and other.hermitian_hint)

    def __neg__(self):
        return DenseOperator(self.n_sites, -self.matrix, self.hermitian_hint)

    def __mul__(self, scalar):
        if isinstance(scalar, DenseOperator):
            return NotImplemented
        real = np.isrealobj(scalar) or np.imag(scalar) == 0
        return DenseOperator(self.n_sites, self.matrix * scalar, self.hermitian_hint and bool(real))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return DenseOperator(self.n_sites, self.matrix @ self._coerce(other))


@dataclass(frozen=True, eq=False)
class EigenSystem:
    energies: np.ndarray
    basis: np.ndarray = field(repr=False)
    n_sites: int

    def to_eigenbasis(self, op: DenseOperator | np.ndarray) -> np.ndarray:
        """Matrix elements <mu|A|nu>."""
        m = op.matrix if isinstance(op, DenseOperator) else op
        return self.basis.conj().T @ m @ self.basis

    def from_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        return self.basis @ m @ self.basis.conj().T


@dataclass(frozen=True, eq=False)
class GibbsContext:
    """Eigensystem of H together with the normalized Boltzmann weights at beta."""

    hamiltonian: DenseOperator = field(repr=False)
    eig: EigenSystem = field(repr=False)
    beta: float
    boltzmann_weights: np.ndarray = field(repr=False)
    log_z: float

    @property
    def n_sites(self) -> int:
        return self.eig.n_sites

    @property
    def energies(self) -> np.ndarray:
        return self.eig.energies


@dataclass(frozen=True)
class SpectralMeasure:
    """Discrete image of Q_{A,B}: atoms ``omega[i]`` with complex ``weights[i]``."""

    omega: np.ndarray
    weights: np.ndarray
    beta: float

    @property
    def atoms(self) -> list[tuple[float, complex]]:
        return [(float(w), complex(c)) for w, c in zip(self.omega, self.weights)]

    def total(self) -> complex:
        return complex(np.sum(self.weights))

    def integrate(self, fn) -> complex:
        """``sum_i fn(omega_i) * weight_i``."""
        return complex(np.sum(fn(self.omega) * self.weights))


@dataclass(frozen=True)
class BilinearExpectations:
    anticomm: complex
    comm: complex
    double_comm: complex


# --------------------------------------------------------------------------
# operators


def identity(n_sites: int) -> DenseOperator:
    _check_sites(n_sites)
    return DenseOperator(n_sites, np.eye(2**n_sites), hermitian_hint=True)


def pauli(site: int, axis: str, n_sites: int) -> DenseOperator:
    """sigma^axis on ``site`` (1-based), identity on the other factors."""
    _check_sites(n_sites)
    if not 1 <= site <= n_sites:
        raise ValueError(f"site {site} out of range 1..{n_sites}")
    axis = axis.lower()
    if axis not in _PAULI:
        raise ValueError(f"axis must be x, y or z, got {axis!r}")
    left = np.eye(2 ** (site - 1))
    right = np.eye(2 ** (n_sites - site))
    m = np.kron(np.kron(left, _PAULI[axis]), right)
    return DenseOperator(n_sites, m, hermitian_hint=True)


_FACTOR = re.compile(r"^([XYZxyz])(\d+)$")


def parse_pauli_string(text: str, n_sites: int) -> DenseOperator:
    """Parse ``"X1*Z3"`` into the corresponding product of Pauli operators.

    ``"I"`` or ``"1"`` gives the identity.
    """
    text = text.strip()
    if text in ("", "I", "1"):
        return identity(n_sites)
    out = None
    for factor in text.split("*"):
        match = _FACTOR.match(factor.strip())
        if match is None:
            raise ValueError(f"bad Pauli factor {factor!r} in {text!r}")
        op = pauli(int(match.group(2)), match.group(1), n_sites)
        out = op if out is None else out @ op
    return DenseOperator(n_sites, out.matrix, hermitian_hint=out.is_hermitian())


def operator_from_terms(terms: Iterable[tuple[float, str]], n_sites: int) -> DenseOperator:
    """Sum of ``coefficient * pauli_string`` terms."""
    m = np.zeros((2**n_sites, 2**n_sites), dtype=complex)
    for coeff, label in terms:
        m = m + complex(coeff) * parse_pauli_string(label, n_sites).matrix
    if np.all(m.imag == 0):
        m = m.real.copy()
    op = DenseOperator(n_sites, m)
    return DenseOperator(n_sites, m, hermitian_hint=op.is_hermitian())


def _spin_table(n_sites: int) -> np.ndarray:
    """z-eigenvalues (+1/-1) of every site in every basis state, shape (2^N, N)."""
    states = np.arange(2**n_sites)
    shifts = n_sites - 1 - np.arange(n_sites)  # site 1 is the most significant bit
    bits = (states[:, None] >> shifts[None, :]) & 1
    return 1.0 - 2.0 * bits


def _transverse_sum(n_sites: int) -> np.ndarray:
    dim = 2**n_sites
    m = np.zeros((dim, dim))
    states = np.arange(dim)
    for site in range(1, n_sites + 1):
        flip = 1 << (n_sites - site)
        m[states, states ^ flip] += 1.0
    return m


def _couplings_matrix(couplings, n_sites: int) -> np.ndarray:
    g = np.asarray(couplings, dtype=float)
    if g.shape != (n_sites, n_sites):
        raise ValueError(f"couplings must have shape ({n_sites}, {n_sites}), got {g.shape}")
    return np.triu(g, k=1)


def _ising_diagonal(n_sites, couplings, fields, coupling_scale) -> np.ndarray:
    spins = _spin_table(n_sites)
    g = _couplings_matrix(couplings, n_sites)
    pair = np.einsum("ai,ij,aj->a", spins, g, spins)
    return -coupling_scale * pair - spins @ np.asarray(fields, dtype=float)


def build_tfsk(n_sites: int, couplings, h: float, b1: float) -> DenseOperator:
    """H = -(1/sqrt N) sum_{i<j} g_ij Z_i Z_j - h sum Z_j - b1 sum X_j.

    Only the strict upper triangle of ``couplings`` is used.
    """
    return build_interpolated(n_sites, 1.0, couplings, np.zeros(n_sites), 0.0, h, 0.0, b1)


def build_interpolated(
    n_sites: int,
    s: float,
    couplings,
    z,
    q: float,
    h: float,
    b0: float,
    b1: float,
) -> DenseOperator:
    """Square-root interpolation between the coupled model (s=1) and
    independent spins in Gaussian fields (s=0)::

        H(s) = -sqrt(s/N) sum_{i<j} g_ij Z_i Z_j
               - sum_j (sqrt(q (1-s)) z_j + h) Z_j
               - b(s) sum_j X_j,        b(s) = b1 s + b0 (1-s)
    """
    _check_sites(n_sites)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    z = np.asarray(z, dtype=float)
    if z.shape != (n_sites,):
        raise ValueError(f"z must have length {n_sites}")
    fields = math.sqrt(q * (1.0 - s)) * z + h
    diag = _ising_diagonal(n_sites, couplings, fields, math.sqrt(s / n_sites))
    b = b1 * s + b0 * (1.0 - s)
    m = np.diag(diag) - b * _transverse_sum(n_sites)
    return DenseOperator(n_sites, m, hermitian_hint=True)


def commutator(a: DenseOperator, b: DenseOperator) -> DenseOperator:
    return DenseOperator(a.n_sites, a.matrix @ b.matrix - b.matrix @ a.matrix)


def anticommutator(a: DenseOperator, b: DenseOperator) -> DenseOperator:
    return DenseOperator(a.n_sites, a.matrix @ b.matrix + b.matrix @ a.matrix)


def nested_commutator(hamiltonian: DenseOperator, a: DenseOperator, k: int) -> DenseOperator:
    """C_A^k = [H, [H, ... [H, A]]] (k times); C_A^0 = A."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    out = a
    for _ in range(k):
        out = commutator(hamiltonian, out)
    return out


# --------------------------------------------------------------------------
# spectral primitives


def eigendecompose(hamiltonian: DenseOperator, cap: int | None = None) -> EigenSystem:
    _check_sites(hamiltonian.n_sites, cap)
    if not hamiltonian.is_hermitian():
        raise ValueError("eigendecompose requires a Hermitian operator")
    m = hamiltonian.matrix
    m = 0.5 * (m + m.conj().T)
    evals, evecs = np.linalg.eigh(m)
    return EigenSystem(energies=evals, basis=evecs, n_sites=hamiltonian.n_sites)


def energies(hamiltonian: DenseOperator, cap: int | None = None) -> np.ndarray:
    """Eigenvalues only (ascending); same validation as :func:`eigendecompose`."""
    _check_sites(hamiltonian.n_sites, cap)
    if not hamiltonian.is_hermitian():
        raise ValueError("energies requires a Hermitian operator")
    m = hamiltonian.matrix
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def log_partition(evals: np.ndarray, beta: float) -> float:
    """log sum exp(-beta E), shifted by the ground-state energy."""
    x = -beta * np.asarray(evals)
    top = np.max(x)
    return float(top + np.log(np.sum(np.exp(x - top))))


def gibbs(hamiltonian: DenseOperator, beta: float, eig: EigenSystem | None = None) -> GibbsContext:
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    eig = eigendecompose(hamiltonian) if eig is None else eig
    shifted = np.exp(-beta * (eig.energies - eig.energies[0]))
    z_shifted = np.sum(shifted)
    return GibbsContext(
        hamiltonian=hamiltonian,
        eig=eig,
        beta=float(beta),
        boltzmann_weights=shifted / z_shifted,
        log_z=float(-beta * eig.energies[0] + np.log(z_shifted)),
    )


def _check_dim(ctx: GibbsContext, *ops: DenseOperator) -> None:
    for op in ops:
        if op.n_sites != ctx.n_sites:
            raise ValueError(f"operator acts on {op.n_sites} sites, context on {ctx.n_sites}")


def thermal_expectation(ctx: GibbsContext, a: DenseOperator) -> complex:
    """Tr(A e^{-beta H}) / Z evaluated in the eigenbasis."""
    _check_dim(ctx, a)
    u = ctx.eig.basis
    diag = np.einsum("ij,ik,kj->j", u.conj(), a.matrix, u)
    return complex(np.dot(ctx.boltzmann_weights, diag))


def spectral_measure(
    ctx: GibbsContext,
    a: DenseOperator,
    b: DenseOperator,
    prune: float = PRUNE_TOL,
) -> SpectralMeasure:
    """Atoms of Q_{A,B} at omega = E_mu - E_nu.

    The weight of the (mu, nu) transition is
    ``<nu|A|mu><mu|B|nu> (p_nu + p_mu)``, which equals
    ``e^{-beta E_nu} <nu|A|mu><mu|B|nu> (1 + e^{-beta omega}) / Z``.
    Transitions with (numerically) equal omega are merged.
    """
    _check_dim(ctx, a, b)
    e = ctx.energies
    p = ctx.boltzmann_weights
    a_e = ctx.eig.to_eigenbasis(a)  # a_e[nu, mu] = <nu|A|mu>
    b_e = ctx.eig.to_eigenbasis(b)  # b_e[mu, nu] = <mu|B|nu>
    # indices [nu, mu]
    raw = a_e * b_e.T * (p[:, None] + p[None, :])
    omega = e[None, :] - e[:, None]
    omega_atoms, weights = _aggregate(omega.ravel(), raw.ravel(), e)
    scale = np.sum(np.abs(weights))
    keep = np.abs(weights) > prune * scale if scale > 0 else np.zeros(len(weights), bool)
    return SpectralMeasure(omega=omega_atoms[keep], weights=weights[keep], beta=ctx.beta)


def _aggregate(omega: np.ndarray, weights: np.ndarray, evals: np.ndarray):
    span = float(evals[-1] - evals[0]) if len(evals) else 0.0
    tol = DEGENERACY_TOL * max(1.0, span)
    order = np.argsort(omega, kind="stable")
    w_sorted = omega[order]
    # a new atom starts wherever the gap to the previous omega exceeds tol
    starts = np.concatenate(([True], np.diff(w_sorted) > tol))
    labels = np.cumsum(starts) - 1
    count = labels[-1] + 1
    sums = np.zeros(count, dtype=complex)
    np.add.at(sums, labels, weights[order])
    centers = np.zeros(count)
    np.add.at(centers, labels, w_sorted)
    centers /= np.bincount(labels, minlength=count)
    # the cluster holding the diagonal (mu == nu) terms sits exactly at zero
    centers[np.abs(centers) <= tol] = 0.0
    return centers, sums


def _sinhc(u: np.ndarray) -> np.ndarray:
    """sinh(u)/u with a series for small |u|."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(u) < SINHC_SERIES_BELOW
    us = u[small] ** 2
    out[small] = 1.0 + us / 6.0 + us * us / 120.0
    ul = u[~small]
    out[~small] = np.sinh(ul) / ul
    return out


def _log_sinhc(u: np.ndarray) -> np.ndarray:
    """log(sinh(u)/u), stable for large |u|."""
    u = np.abs(np.asarray(u, dtype=float))
    out = np.empty_like(u)
    small = u < 1.0
    out[small] = np.log(_sinhc(u[small]))
    ul = u[~small]
    out[~small] = ul + np.log1p(-np.exp(-2.0 * ul)) - math.log(2.0) - np.log(ul)
    return out


def duhamel_kernel(ctx: GibbsContext) -> np.ndarray:
    """K[nu, mu] = (e^{-beta E_nu} - e^{-beta E_mu}) / (Z beta (E_mu - E_nu)),
    in the symmetric form e^{-beta (E_mu + E_nu)/2} sinhc(beta (E_mu - E_nu)/2) / Z.
    """
    e = ctx.energies - ctx.energies[0]
    beta = ctx.beta
    log_z_shifted = ctx.log_z + beta * ctx.energies[0]
    mean = 0.5 * (e[:, None] + e[None, :])
    half_gap = 0.5 * beta * (e[None, :] - e[:, None])
    return np.exp(-beta * mean - log_z_shifted + _log_sinhc(half_gap))


def duhamel(ctx: GibbsContext, a: DenseOperator, b: DenseOperator) -> complex:
    """(A, B) = int_0^1 dt <e^{beta t H} A e^{-beta t H} B>, from the eigenbasis double sum."""
    _check_dim(ctx, a, b)
    a_e = ctx.eig.to_eigenbasis(a)
    b_e = ctx.eig.to_eigenbasis(b)
    return complex(np.sum(a_e * b_e.T * duhamel_kernel(ctx)))


def duhamel_by_quadrature(
    hamiltonian: DenseOperator,
    beta: float,
    a: DenseOperator,
    b: DenseOperator,
    steps: int = 64,
    order: int = 8,
) -> complex:
    """Independent oracle for :func:`duhamel`: integrate over t directly.

    Uses ``<e^{beta t H} A e^{-beta t H} B> = Tr(e^{-beta(1-t)H} A e^{-beta t H} B) / Z``
    so every exponential is decaying after the ground-state shift.
    ``steps`` panels of ``order``-point Gauss-Legendre on [0, 1].
    """
    if steps < 16:
        raise ValueError("steps must be >= 16")
    eig = eigendecompose(hamiltonian)
    if a.n_sites != eig.n_sites or b.n_sites != eig.n_sites:
        raise ValueError("dimension mismatch")
    u = eig.basis
    e = eig.energies - eig.energies[0]
    log_z = math.log(np.sum(np.exp(-beta * e)))
    am, bm = a.matrix, b.matrix

    x, w = leggauss(order)
    edges = np.linspace(0.0, 1.0, steps + 1)
    total = 0.0 + 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        for xi, wi in zip(x, w):
            t = lo + half * (xi + 1.0)
            left = (u * np.exp(-beta * (1.0 - t) * e - log_z)) @ u.conj().T
            right = (u * np.exp(-beta * t * e)) @ u.conj().T
            total += half * wi * np.trace(left @ am @ right @ bm)
    return complex(total)


def bilinear_expectations(ctx: GibbsContext, a: DenseOperator, b: DenseOperator) -> BilinearExpectations:
    """<{A,B}>, <[A,B]> and <[A,[H,B]]> from plain matrix products."""
    _check_dim(ctx, a, b)
    hb = commutator(ctx.hamiltonian, b)
    return BilinearExpectations(
        anticomm=thermal_expectation(ctx, anticommutator(a, b)),
        comm=thermal_expectation(ctx, commutator(a, b)),
        double_comm=thermal_expectation(ctx, commutator(a, hb)),
    )
