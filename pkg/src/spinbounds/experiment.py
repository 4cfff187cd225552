"""
Disorder sampling and exact-diagonalization estimates of
phi_N(s) = (1/N) E log Tr exp(-beta H(s)), the check of the
derivative formula for phi_N'(s), and the finite-N validation of the
variational bound phi_N(1) <= Phi(q*, b0*).
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .hilbert import (
    DenseOperator,
    build_interpolated,
    duhamel,
    energies,
    gibbs,
    log_partition,
    pauli,
    thermal_expectation,
)
from .sk_variational import Quadrature, SKParams, gauss_hermite, solve_stationary

__all__ = [
    "GENERATOR",
    "SCHEMA_VERSION",
    "DisorderSample",
    "ExperimentReport",
    "DerivativeCheck",
    "sample_disorder",
    "sample_seed",
    "standard_normals",
    "phi_s_estimate",
    "phi_s_values",
    "derivative_identity_check",
    "derivative_identity_quadrature",
    "bound_validation",
    "export_results",
    "read_results",
    "default_workers",
]

# Philox4x64 counter stream; index i uses raw words 2i and 2i+1 (Box-Muller)
GENERATOR = "philox4x64-boxmuller-v1"
SCHEMA_VERSION = 1
WORKERS_ENV = "SPINBOUNDS_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class DisorderSample:
    seed: int
    couplings: np.ndarray = field(repr=False)  # strict upper triangle used
    z: np.ndarray = field(repr=False)

    @property
    def n_sites(self) -> int:
        return len(self.z)


@dataclass(frozen=True)
class ExperimentReport:
    n_sites: int
    beta: float
    b1: float
    h: float
    samples: int
    base_seed: int
    q: float
    b0: float
    mean_phi1: float
    stderr: float
    variational_bound: float
    gap: float
    satisfied_3sigma: bool
    solver_converged: bool


@dataclass(frozen=True)
class DerivativeCheck:
    n_sites: int
    s: float
    samples: int
    fd_value: float
    formula_value: float
    diff: float
    gaussian_form_value: float
    gaussian_form_diff: float
    formula_stderr: float
    diff_stderr: float  # standard error of the per-sample fd - formula


def standard_normals(seed: int, count: int) -> np.ndarray:
    """Standard normals for stream indices ``0 .. count-1`` under ``seed``.

    Index i takes Philox words 2i and 2i+1 and maps them to one normal by
    Box-Muller, so a value depends only on (seed, i).
    """
    raw = np.random.Philox(key=seed & (2**64 - 1)).random_raw(2 * count).reshape(count, 2)
    # 53-bit uniforms in (0, 1]
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])


def sample_disorder(n_sites: int, seed: int) -> DisorderSample:
    """Couplings g_ij (i<j, row-major) from indices 0..M-1, then z from the next N."""
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    pairs = n_sites * (n_sites - 1) // 2
    draws = standard_normals(seed, pairs + n_sites)
    g = np.zeros((n_sites, n_sites))
    g[np.triu_indices(n_sites, k=1)] = draws[:pairs]
    return DisorderSample(seed=int(seed), couplings=g, z=draws[pairs:].copy())


def sample_seed(base_seed: int, index: int) -> int:
    """64-bit seed of the ``index``-th disorder sample of a run."""
    state = np.random.SeedSequence([base_seed & (2**64 - 1), index]).generate_state(1, np.uint64)
    return int(state[0])


def _map(fn: Callable, items: Sequence, workers: Optional[int]) -> list:
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _samples(n_sites: int, samples: int, base_seed: int) -> list[DisorderSample]:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    return [sample_disorder(n_sites, sample_seed(base_seed, k)) for k in range(samples)]


def _hamiltonian(sample: DisorderSample, s, params: SKParams, q, b0) -> DenseOperator:
    return build_interpolated(sample.n_sites, s, sample.couplings, sample.z, q, params.h, b0, params.b1)


def _phi_one(sample, s, params, q, b0) -> float:
    h = _hamiltonian(sample, s, params, q, b0)
    return log_partition(energies(h), params.beta) / sample.n_sites


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.sum(values) / len(values))
    if len(values) < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(len(values)))


def phi_s_values(
    n_sites: int,
    s: float,
    params: SKParams,
    q: float,
    b0: float,
    samples: int,
    base_seed: int,
    workers: Optional[int] = None,
) -> np.ndarray:
    """Per-sample (1/N) log Tr exp(-beta H(s))."""
    batch = _samples(n_sites, samples, base_seed)
    return np.array(_map(lambda smp: _phi_one(smp, s, params, q, b0), batch, workers))


def phi_s_estimate(
    n_sites: int,
    s: float,
    params: SKParams,
    q: float,
    b0: float,
    samples: int,
    base_seed: int,
    workers: Optional[int] = None,
) -> tuple[float, float]:
    """Sample mean and standard error of phi_N(s)."""
    return _mean_stderr(phi_s_values(n_sites, s, params, q, b0, samples, base_seed, workers))


def _derivative_terms(sample: DisorderSample, s, params: SKParams, q, b0):
    """Per-sample pieces of phi_N'(s).

    Returns (duhamel_form, gaussian_form): the first is the expression after
    Gaussian integration by parts (it equals phi_N' only on average over the
    disorder); the second is d/ds of (1/N) log Tr exp(-beta H(s)) for this
    very sample.
    """
    n = sample.n_sites
    beta = params.beta
    h_op = _hamiltonian(sample, s, params, q, b0)
    ctx = gibbs(h_op, beta)
    zs = [pauli(i, "z", n) for i in range(1, n + 1)]
    xs = [pauli(i, "x", n) for i in range(1, n + 1)]
    b_prime = params.b1 - b0

    pair_fluct = 0.0
    pair_field = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            zz = zs[i] @ zs[j]
            mean = thermal_expectation(ctx, zz).real
            pair_fluct += duhamel(ctx, zz, zz).real - mean**2
            pair_field += sample.couplings[i, j] * mean
    site_fluct = 0.0
    site_field = 0.0
    for i in range(n):
        mean = thermal_expectation(ctx, zs[i]).real
        site_fluct += duhamel(ctx, zs[i], zs[i]).real - mean**2
        site_field += sample.z[i] * mean
    sx = sum(thermal_expectation(ctx, x).real for x in xs)

    duhamel_form = (
        beta**2 / (2.0 * n**2) * pair_fluct
        - beta**2 * q / (2.0 * n) * site_fluct
        + beta * b_prime / n * sx
    )
    gaussian_form = beta * b_prime / n * sx
    if s > 0:
        gaussian_form += beta / (2.0 * n**1.5 * math.sqrt(s)) * pair_field
    if s < 1:
        gaussian_form -= beta * math.sqrt(q) / (2.0 * n * math.sqrt(1.0 - s)) * site_field
    return duhamel_form, gaussian_form


def derivative_identity_check(
    n_sites: int,
    s: float,
    params: SKParams,
    q: float,
    b0: float,
    samples: int = 50,
    base_seed: int = 0,
    step: float = 1e-4,
    workers: Optional[int] = None,
) -> DerivativeCheck:
    """Central finite difference of phi_N(s) on common disorder samples
    against the Duhamel-function expression for phi_N'(s).

    ``diff`` compares the finite difference with the Duhamel expression,
    whose per-sample values agree with phi_N' only after averaging over the
    disorder. ``gaussian_form_diff`` compares it with the sample mean of
    the exact per-sample derivative, which common random numbers reproduce
    up to finite-difference error.
    """
    if not (step < s < 1.0 - step):
        raise ValueError(f"s={s} too close to the endpoints for step {step}")
    batch = _samples(n_sites, samples, base_seed)

    def one(smp):
        up = _phi_one(smp, s + step, params, q, b0)
        dn = _phi_one(smp, s - step, params, q, b0)
        return (up - dn) / (2.0 * step), *_derivative_terms(smp, s, params, q, b0)

    rows = np.array(_map(one, batch, workers))
    fd = float(np.sum(rows[:, 0]) / samples)
    formula, formula_err = _mean_stderr(rows[:, 1])
    _, diff_err = _mean_stderr(rows[:, 0] - rows[:, 1])
    gaussian = float(np.sum(rows[:, 2]) / samples)
    return DerivativeCheck(
        n_sites=n_sites,
        s=s,
        samples=samples,
        fd_value=fd,
        formula_value=formula,
        diff=abs(fd - formula),
        gaussian_form_value=gaussian,
        gaussian_form_diff=abs(fd - gaussian),
        formula_stderr=formula_err,
        diff_stderr=diff_err,
    )


def derivative_identity_quadrature(
    n_sites: int,
    s: float,
    params: SKParams,
    q: float,
    b0: float,
    nodes: int = 12,
    step: float = 1e-4,
) -> DerivativeCheck:
    """Same comparison as :func:`derivative_identity_check`, but with the
    disorder average taken by a tensor Gauss-Hermite rule over every
    coupling and field variable instead of by sampling.

    Both sides are then deterministic approximations of the true
    expectation, so they agree to quadrature accuracy. Cost grows as
    ``nodes ** (N (N + 1) / 2)``; intended for N <= 2.
    """
    if not (step < s < 1.0 - step):
        raise ValueError(f"s={s} too close to the endpoints for step {step}")
    pairs = n_sites * (n_sites - 1) // 2
    dims = pairs + n_sites
    if nodes ** dims > 200_000:
        raise ValueError(f"{nodes}^{dims} quadrature points is too many; lower nodes or N")
    rule = gauss_hermite(nodes)
    iu = np.triu_indices(n_sites, k=1)
    fd = formula = gaussian = 0.0
    for idx in np.ndindex(*(nodes,) * dims):
        idx = np.asarray(idx)
        draws = rule.nodes[idx]
        weight = float(np.prod(rule.weights[idx]))
        g = np.zeros((n_sites, n_sites))
        g[iu] = draws[:pairs]
        smp = DisorderSample(seed=-1, couplings=g, z=draws[pairs:])
        up = _phi_one(smp, s + step, params, q, b0)
        dn = _phi_one(smp, s - step, params, q, b0)
        duh, gau = _derivative_terms(smp, s, params, q, b0)
        fd += weight * (up - dn) / (2.0 * step)
        formula += weight * duh
        gaussian += weight * gau
    return DerivativeCheck(
        n_sites=n_sites,
        s=s,
        samples=nodes ** dims,
        fd_value=fd,
        formula_value=formula,
        diff=abs(fd - formula),
        gaussian_form_value=gaussian,
        gaussian_form_diff=abs(fd - gaussian),
        formula_stderr=0.0,
        diff_stderr=0.0,
    )


def bound_validation(
    n_sites: int,
    params: SKParams,
    samples: int = 100,
    base_seed: int = 0,
    quad: Optional[Quadrature] = None,
    workers: Optional[int] = None,
) -> ExperimentReport:
    """Solve for the variational point, estimate phi_N(1) by exact
    diagonalization, and test mean phi_N(1) <= Phi(q*, b0*) + 3 stderr.
    """
    quad = gauss_hermite() if quad is None else quad
    result = solve_stationary(params, quad)
    if result.selected is None:
        q, b0, bound, ok = math.nan, math.nan, math.nan, False
    else:
        q, b0, bound, ok = result.selected.q, result.selected.b0, result.selected.phi_value, True
    # at s = 1 neither q nor b0 enters H(s)
    mean, err = phi_s_estimate(n_sites, 1.0, params, 0.0, 0.0, samples, base_seed, workers)
    gap = bound - mean
    return ExperimentReport(
        n_sites=n_sites,
        beta=params.beta,
        b1=params.b1,
        h=params.h,
        samples=samples,
        base_seed=base_seed,
        q=q,
        b0=b0,
        mean_phi1=mean,
        stderr=err,
        variational_bound=bound,
        gap=gap,
        satisfied_3sigma=bool(ok and gap >= -3.0 * err),
        solver_converged=ok,
    )


# --------------------------------------------------------------------------
# export


def _record(report) -> dict:
    rec = {"schema_version": SCHEMA_VERSION, "record_type": type(report).__name__}
    rec.update(dataclasses.asdict(report))
    return rec


def export_results(reports: Iterable, path, fmt: str = "jsonl", record_type=ExperimentReport) -> None:
    """Write reports as JSON lines or CSV.

    CSV columns are fixed by ``record_type``'s fields, so an empty list
    still produces a header.
    """
    path = Path(path)
    reports = list(reports)
    try:
        if fmt == "jsonl":
            with path.open("w", encoding="utf-8") as fh:
                for rep in reports:
                    fh.write(json.dumps(_record(rep), sort_keys=True) + "\n")
        elif fmt == "csv":
            header = ["schema_version", "record_type"] + [f.name for f in dataclasses.fields(record_type)]
            with path.open("w", encoding="utf-8", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
                writer.writeheader()
                for rep in reports:
                    writer.writerow(_record(rep))
        else:
            raise ValueError(f"unknown format {fmt!r}; expected jsonl or csv")
    except OSError as exc:
        raise OSError(f"could not write results to {path}: {exc}") from exc


_CSV_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentReport)}


def read_results(path, fmt: str = "jsonl") -> list[dict]:
    """Read back records written by :func:`export_results`."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        if fmt == "jsonl":
            return [json.loads(line) for line in fh if line.strip()]
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        rec = {}
        for key, value in row.items():
            kind = _CSV_TYPES.get(key, "int" if key == "schema_version" else "str")
            if kind == "int":
                rec[key] = int(value)
            elif kind == "float":
                rec[key] = float(value)
            elif kind == "bool":
                rec[key] = value == "True"
            else:
                rec[key] = value
        out.append(rec)
    return out
