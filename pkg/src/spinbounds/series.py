"""
Exact Taylor coefficients of the kernels

    f(z) = z coth z,    g(z) = tanh(z) / z = 1 / f(z),    h(z) = z / log((1+z)/(1-z)),

their Taylor remainders f_n, g_n, h_n, and a numeric check of the sign of
those remainders.

All coefficients are built with :class:`fractions.Fraction`; floats only
appear when a remainder is evaluated at a point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import zeta

__all__ = [
    "Kernel",
    "RationalSeries",
    "CoefficientTable",
    "SignReport",
    "bernoulli_numbers",
    "taylor_table",
    "zeta_cross_check",
    "kernel_value",
    "remainder",
    "expected_sign",
    "verify_sign_definiteness",
    "SIGN_TOL",
    "SERIES_CROSSOVER",
]

# a violation counts only above SIGN_TOL * max(1, |kernel(x)|)
SIGN_TOL = 1e-12
# below this |x| the remainder is summed from its Taylor tail
SERIES_CROSSOVER = 0.5
_TAIL_TERMS = 40


class Kernel(str, Enum):
    F = "f"
    G = "g"
    H = "h"

    @classmethod
    def parse(cls, value: "Kernel | str") -> "Kernel":
        if isinstance(value, Kernel):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown kernel {value!r}; expected one of f, g, h") from None


@dataclass(frozen=True)
class RationalSeries:
    """Truncated power series with exact rational coefficients.

    ``coefficients[m]`` is the coefficient of ``z**m``; the series is known
    up to and including ``z**order``.
    """

    coefficients: tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, m: int) -> Fraction:
        return self.coefficients[m]

    def __mul__(self, other: "RationalSeries") -> "RationalSeries":
        order = min(self.order, other.order)
        a, b = self.coefficients, other.coefficients
        out = [sum((a[i] * b[m - i] for i in range(m + 1)), Fraction(0)) for m in range(order + 1)]
        return RationalSeries(tuple(out))

    def reciprocal(self) -> "RationalSeries":
        a = self.coefficients
        if a[0] == 0:
            raise ZeroDivisionError("series with zero constant term has no reciprocal")
        inv = [Fraction(1) / a[0]]
        for m in range(1, self.order + 1):
            acc = sum((a[i] * inv[m - i] for i in range(1, m + 1)), Fraction(0))
            inv.append(-acc / a[0])
        return RationalSeries(tuple(inv))


@dataclass(frozen=True)
class CoefficientTable:
    """Even-order Maclaurin coefficients ``K^{(m)}(0) / m!`` of one kernel."""

    kernel: Kernel
    max_order: int
    entries: dict[int, Fraction] = field(repr=False)

    def __getitem__(self, m: int) -> Fraction:
        if m % 2:
            return Fraction(0)
        return self.entries[m]

    def as_float(self, m: int) -> float:
        return float(self[m])

    def derivative(self, m: int) -> Fraction:
        """``K^{(m)}(0)`` itself, i.e. the entry times ``m!``."""
        return self[m] * math.factorial(m)

    def polynomial(self, x, n: int):
        """Evaluate ``sum_{m<=n} entry(m) x^m`` (Horner, in floats)."""
        x = np.asarray(x, dtype=float)
        x2 = x * x
        acc = np.zeros_like(x)
        for m in range(n - n % 2, -1, -2):
            acc = acc * x2 + float(self[m])
        return acc


@dataclass(frozen=True)
class SignReport:
    kernel: Kernel
    n: int
    grid: np.ndarray = field(repr=False)
    expected_sign: int
    worst_violation: float
    worst_x: float
    passed: bool
    tolerance: float = SIGN_TOL


def bernoulli_numbers(max_index: int) -> list[Fraction]:
    """B_0 .. B_max_index from ``sum_{j<=m} C(m+1, j) B_j = 0`` (so B_1 = -1/2)."""
    if max_index < 0:
        raise ValueError("max_index must be >= 0")
    return list(_bernoulli(max_index))


@lru_cache(maxsize=None)
def _bernoulli(max_index: int) -> tuple[Fraction, ...]:
    b = [Fraction(1)]
    for m in range(1, max_index + 1):
        acc = sum((math.comb(m + 1, j) * b[j] for j in range(m)), Fraction(0))
        b.append(-acc / (m + 1))
    return tuple(b)


def _check_order(max_order: int) -> None:
    if max_order < 0 or max_order % 2:
        raise ValueError(f"order must be a nonnegative even integer, got {max_order}")


@lru_cache(maxsize=None)
def _f_series(max_order: int) -> RationalSeries:
    # z coth z = sum_k B_{2k} (2z)^{2k} / (2k)!
    bern = _bernoulli(max_order)
    coeffs = [Fraction(0)] * (max_order + 1)
    for m in range(0, max_order + 1, 2):
        coeffs[m] = bern[m] * 2**m / math.factorial(m)
    return RationalSeries(tuple(coeffs))


@lru_cache(maxsize=None)
def _log_ratio_series(max_order: int) -> RationalSeries:
    # (1/z) log((1+z)/(1-z)) = 2 sum_k z^{2k} / (2k+1)
    coeffs = [Fraction(0)] * (max_order + 1)
    for m in range(0, max_order + 1, 2):
        coeffs[m] = Fraction(2, m + 1)
    return RationalSeries(tuple(coeffs))


@lru_cache(maxsize=None)
def _series(kernel: Kernel, max_order: int) -> RationalSeries:
    if kernel is Kernel.F:
        return _f_series(max_order)
    if kernel is Kernel.G:
        return _f_series(max_order).reciprocal()
    return _log_ratio_series(max_order).reciprocal()


def taylor_series(kernel: Kernel | str, max_order: int) -> RationalSeries:
    kernel = Kernel.parse(kernel)
    _check_order(max_order)
    return _series(kernel, max_order)


def taylor_table(kernel: Kernel | str, max_order: int) -> CoefficientTable:
    """Exact even-order Maclaurin coefficients of f, g or h up to ``max_order``.

    >>> taylor_table("f", 4).entries
    {0: Fraction(1, 1), 2: Fraction(1, 3), 4: Fraction(-1, 45)}
    """
    kernel = Kernel.parse(kernel)
    series = taylor_series(kernel, max_order)
    entries = {m: series[m] for m in range(0, max_order + 1, 2)}
    return CoefficientTable(kernel=kernel, max_order=max_order, entries=entries)


def zeta_cross_check(n: int) -> tuple[float, float]:
    """Compare ``f^{(n)}(0)`` from the table with ``(-1)^{n/2+1} 2 n! zeta(n) / pi^n``.

    The zeta value comes from :func:`scipy.special.zeta`, not from Bernoulli
    numbers, so the two sides are computed independently.
    """
    if n < 2 or n % 2:
        raise ValueError(f"n must be an even integer >= 2, got {n}")
    table_value = float(taylor_table(Kernel.F, n).derivative(n))
    sign = -1.0 if (n // 2) % 2 == 0 else 1.0
    reference = sign * 2.0 * math.factorial(n) * float(zeta(n, 1)) / math.pi**n
    return table_value, reference


def _sinc_tanh(x: np.ndarray) -> np.ndarray:
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = np.tanh(x[nz]) / x[nz]
    return out


def kernel_value(kernel: Kernel | str, x):
    """Floating-point f(x), g(x) or h(x), with the removable point x = 0 filled in."""
    kernel = Kernel.parse(kernel)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if kernel is Kernel.F:
        out = 1.0 / _sinc_tanh(x)
    elif kernel is Kernel.G:
        out = _sinc_tanh(x)
    else:
        if np.any(np.abs(x) >= 1.0):
            raise ValueError("h is defined on (-1, 1) only")
        out = np.full_like(x, 0.5)
        nz = x != 0
        out[nz] = x[nz] / (2.0 * np.arctanh(x[nz]))
    return float(out[0]) if scalar else out


def remainder(kernel: Kernel | str, n: int, x):
    """Taylor remainder ``K_n(x) = K(x) - sum_{m<=n} K^{(m)}(0) x^m / m!``.

    For ``|x| < SERIES_CROSSOVER`` the remainder is summed from the series
    tail (orders n+2 onward) instead of subtracting two nearly equal numbers.
    """
    kernel = Kernel.parse(kernel)
    _check_order(n)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if kernel is Kernel.H and np.any(np.abs(x) >= 1.0):
        raise ValueError("h_n is defined on (-1, 1) only")

    table = taylor_table(kernel, n + 2 * _TAIL_TERMS)
    out = np.empty_like(x)
    small = np.abs(x) < SERIES_CROSSOVER
    if np.any(~small):
        xl = x[~small]
        out[~small] = kernel_value(kernel, xl) - table.polynomial(xl, n)
    if np.any(small):
        xs = x[small]
        x2 = xs * xs
        tail = np.zeros_like(xs)
        for m in range(table.max_order, n, -2):
            tail = tail * x2 + float(table[m])
        out[small] = tail * xs ** (n + 2)
    return float(out[0]) if scalar else out


def expected_sign(kernel: Kernel | str, n: int) -> int:
    """Sign of K_n on its domain: +1 means K_n >= 0, -1 means K_n <= 0."""
    kernel = Kernel.parse(kernel)
    _check_order(n)
    half_even = (n // 2) % 2 == 0
    if kernel is Kernel.F:
        return 1 if half_even else -1
    if kernel is Kernel.G:
        return -1 if half_even else 1
    return -1


def default_grid(kernel: Kernel | str, points: int = 2001) -> np.ndarray:
    kernel = Kernel.parse(kernel)
    if kernel is Kernel.H:
        return np.linspace(-0.999, 0.999, points)
    return np.linspace(-20.0, 20.0, points)


def verify_sign_definiteness(
    kernel: Kernel | str,
    n: int,
    grid=None,
    tol: float = SIGN_TOL,
) -> SignReport:
    """Evaluate K_n on ``grid`` and check it never has the wrong sign.

    ``grid`` may be an array of abscissae or an integer point count for the
    default grid ([-20, 20] for f and g, [-0.999, 0.999] for h).
    """
    kernel = Kernel.parse(kernel)
    if grid is None:
        grid = default_grid(kernel)
    elif np.isscalar(grid):
        grid = default_grid(kernel, int(grid))
    grid = np.asarray(grid, dtype=float)

    sign = expected_sign(kernel, n)
    values = remainder(kernel, n, grid)
    scale = np.maximum(1.0, np.abs(kernel_value(kernel, grid)))
    violation = np.maximum(0.0, -sign * values) / scale
    worst = int(np.argmax(violation))
    return SignReport(
        kernel=kernel,
        n=n,
        grid=grid,
        expected_sign=sign,
        worst_violation=float(violation[worst]),
        worst_x=float(grid[worst]),
        passed=bool(violation[worst] <= tol),
        tolerance=tol,
    )
