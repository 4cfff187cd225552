"""
Command-line front end.

Every command prints structured records (JSON array, JSON lines or CSV),
each tagged with ``schema_version`` and ``record_type``. Values come from
command-line flags first, then from the ``--config`` JSON file, then from
built-in defaults.

Exit codes: 0 when everything ran and every check held, 1 when some
bound or experiment check failed, 2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import enum
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import bounds, experiment, hilbert, series, sk_variational
from .sk_variational import SKParams

SCHEMA_VERSION = 1
EXIT_OK, EXIT_UNSATISFIED, EXIT_USAGE = 0, 1, 2

# keys every record of a given type carries (beyond schema_version/record_type)
RECORD_FIELDS: dict[str, tuple[str, ...]] = {
    "coefficient": ("kernel", "order", "value", "numerator", "denominator", "float"),
    "sign_report": ("kernel", "n", "expected_sign", "worst_violation", "worst_x", "passed", "tolerance"),
    "spectral_atom": ("omega", "weight_re", "weight_im"),
    "bound_report": ("trial", "beta", "theorem", "n", "lower", "exact", "upper", "satisfied"),
    "bound_inapplicable": ("trial", "theorem", "n", "reason"),
    "verify_summary": ("reports", "unsatisfied", "inapplicable", "worst_margin_lower", "worst_margin_upper"),
    "stationary_point": ("q", "b0", "phi_value", "residual", "converged", "selected"),
    "variational_solution": ("beta", "b1", "h", "q", "b0", "phi_bound", "free_energy_lower", "found"),
    "classical_solution": ("beta", "h", "q", "at_lhs", "stable"),
    "h0_special": ("beta", "b1", "b0_roots", "selected_b0", "bound"),
    "literature_comparison": ("beta", "b1", "static_approx", "annealed_upper", "violates"),
    "strong_field_deviation": ("beta", "b1", "found", "b0", "D"),
    "experiment_report": tuple(f.name for f in dataclasses.fields(experiment.ExperimentReport)),
    "derivative_check": ("n_sites", "s", "samples", "fd_value", "formula_value", "diff", "tol", "satisfied"),
}


class UsageError(ValueError):
    """Bad flag value or configuration entry."""


# --------------------------------------------------------------------------
# value conversion


def _jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def make_record(record_type: str, payload: Any = None, **extra) -> dict:
    rec: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "record_type": record_type}
    if dataclasses.is_dataclass(payload):
        payload = {f.name: getattr(payload, f.name) for f in dataclasses.fields(payload)}
    for key, value in {**(payload or {}), **extra}.items():
        rec[key] = _jsonable(value)
    return rec


def validate_record(rec: dict) -> None:
    """Raise ValueError unless ``rec`` matches the published record schema."""
    if rec.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"bad schema_version in {rec!r}")
    kind = rec.get("record_type")
    if kind not in RECORD_FIELDS:
        raise ValueError(f"unknown record_type {kind!r}")
    missing = [k for k in RECORD_FIELDS[kind] if k not in rec]
    if missing:
        raise ValueError(f"{kind} record lacks {missing}")


def _float_list(text: Any, name: str, count: Optional[int] = None) -> list[float]:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        out = [float(x) for x in items]
    except (TypeError, ValueError):
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(out) != count:
        raise UsageError(f"{name}: expected {count} numbers, got {len(out)}")
    return out


def _int_list(text: Any, name: str) -> list[int]:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        return [int(x) for x in items]
    except (TypeError, ValueError):
        raise UsageError(f"{name}: expected comma-separated integers, got {text!r}") from None


def _starts(text: Any) -> Optional[list[tuple[float, float]]]:
    if text is None:
        return None
    pairs = text if isinstance(text, list) else [p for p in str(text).split(";") if p.strip()]
    return [tuple(_float_list(p, "starts", 2)) for p in pairs]


# --------------------------------------------------------------------------
# validation


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError(message)


def _params(cfg: dict) -> SKParams:
    params = SKParams(beta=float(cfg["beta"]), b1=float(cfg["b1"]), h=float(cfg["h"]))
    _require(params.beta > 0, "beta must be positive")
    _require(params.b1 >= 0, "b1 must be nonnegative")
    return params


def _sites(cfg: dict) -> int:
    n = int(cfg["sites"])
    _require(1 <= n <= hilbert.MAX_SITES, f"sites must be in 1..{hilbert.MAX_SITES}")
    return n


def _positive_int(cfg: dict, key: str) -> int:
    value = int(cfg[key])
    _require(value >= 1, f"{key} must be >= 1")
    return value


# --------------------------------------------------------------------------
# commands; each returns (records, exit code)


def cmd_coeffs(cfg):
    order = int(cfg["order"])
    _require(order >= 0 and order % 2 == 0, f"order must be a nonnegative even integer, got {order}")
    table = series.taylor_table(cfg["kernel"], order)
    records = [
        make_record(
            "coefficient",
            kernel=table.kernel,
            order=m,
            value=c,
            numerator=c.numerator,
            denominator=c.denominator,
            float=float(c),
        )
        for m, c in sorted(table.entries.items())
    ]
    return records, EXIT_OK


def cmd_lemma6(cfg):
    n = int(cfg["n"])
    _require(n >= 0 and n % 2 == 0, f"n must be a nonnegative even integer, got {n}")
    points = _positive_int(cfg, "grid_points")
    rep = series.verify_sign_definiteness(cfg["kernel"], n, points)
    rec = make_record(
        "sign_report",
        {k: v for k, v in dataclasses.asdict(rep).items() if k != "grid"},
        grid_points=len(rep.grid),
        grid_min=float(rep.grid[0]),
        grid_max=float(rep.grid[-1]),
    )
    return [rec], EXIT_OK if rep.passed else EXIT_UNSATISFIED


def _terms(raw) -> list[tuple[float, str]]:
    try:
        return [(float(c), str(s)) for c, s in raw]
    except (TypeError, ValueError):
        raise UsageError("hamiltonian must be a list of [coefficient, pauli-string] pairs") from None


def cmd_spectral(cfg):
    n = _sites(cfg)
    beta = float(cfg["beta"])
    _require(beta > 0, "beta must be positive")
    try:
        if cfg.get("hamiltonian"):
            ham = hilbert.operator_from_terms(_terms(cfg["hamiltonian"]), n)
        else:
            d = experiment.sample_disorder(n, int(cfg["seed"]))
            ham = hilbert.build_tfsk(n, d.couplings, float(cfg["h"]), float(cfg["b1"]))
        a = hilbert.parse_pauli_string(cfg["observable"], n)
        b = hilbert.parse_pauli_string(cfg["observable_b"], n) if cfg.get("observable_b") else a.dag()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    measure = hilbert.spectral_measure(hilbert.gibbs(ham, beta), a, b)
    records = [
        make_record("spectral_atom", omega=w, weight_re=c.real, weight_im=c.imag)
        for w, c in measure.atoms
    ]
    return records, EXIT_OK


def cmd_verify(cfg):
    n_sites = _sites(cfg)
    trials = _positive_int(cfg, "trials")
    lo, hi = _float_list(cfg["beta_range"], "beta-range", 2)
    _require(0 < lo <= hi, "beta-range must satisfy 0 < lo <= hi")
    theorems = [t.strip().upper() for t in str(cfg["theorems"]).split(",") if t.strip()]
    for t in theorems:
        _require(t in ("T1", "T2", "T3", "T4"), f"unknown theorem {t!r}")
    plan = []
    for t in theorems:
        orders = bounds.admissible_orders(t, 8) if cfg["orders"] is None else _int_list(cfg["orders"], "orders")
        for n in orders:
            try:
                bounds.check_order(t, n)
            except bounds.ParityError as exc:
                raise UsageError(str(exc)) from None
            plan.append((t, n))

    rng = np.random.default_rng(int(cfg["seed"]))
    records, bad, skipped = [], 0, 0
    worst_lo = worst_hi = math.inf
    for trial in range(trials):
        ctx, a, _ = bounds.random_instance(rng, n_sites, (lo, hi))
        for t, n in plan:
            try:
                rep = bounds.theorem_bounds(t, ctx, a, n)
            except bounds.InapplicableError as exc:
                skipped += 1
                records.append(make_record("bound_inapplicable", trial=trial, theorem=t, n=n, reason=str(exc)))
                continue
            bad += not rep.satisfied
            worst_hi = min(worst_hi, rep.margin_upper)
            if rep.margin_lower is not None:
                worst_lo = min(worst_lo, rep.margin_lower)
            records.append(make_record("bound_report", rep, trial=trial, beta=ctx.beta))
    records.append(
        make_record(
            "verify_summary",
            reports=len(records),
            unsatisfied=bad,
            inapplicable=skipped,
            worst_margin_lower=None if math.isinf(worst_lo) else worst_lo,
            worst_margin_upper=None if math.isinf(worst_hi) else worst_hi,
        )
    )
    return records, EXIT_UNSATISFIED if bad else EXIT_OK


def _quad(cfg):
    count = int(cfg["quad_count"])
    _require(count >= 2, "quad-count must be >= 2")
    return sk_variational.gauss_hermite(count)


def cmd_sk_solve(cfg):
    params = _params(cfg)
    quad = _quad(cfg)
    result = sk_variational.solve_stationary(params, quad, starts=_starts(cfg["starts"]))
    records = [make_record("stationary_point", p) for p in result.points]
    sel = result.selected
    records.append(
        make_record(
            "variational_solution",
            beta=params.beta,
            b1=params.b1,
            h=params.h,
            q=None if sel is None else sel.q,
            b0=None if sel is None else sel.b0,
            phi_bound=None if sel is None else sel.phi_value,
            free_energy_lower=None if sel is None else -sel.phi_value / params.beta,
            found=sel is not None,
        )
    )
    return records, EXIT_OK if sel is not None else EXIT_UNSATISFIED


def cmd_sk_classical(cfg):
    beta, h = float(cfg["beta"]), float(cfg["h"])
    _require(beta > 0, "beta must be positive")
    quad = _quad(cfg)
    q = sk_variational.classical_q(beta, h, quad)
    at = sk_variational.at_line_check(beta, h, q, quad)
    return [make_record("classical_solution", beta=beta, h=h, q=q, at_lhs=at.lhs, stable=at.stable)], EXIT_OK


def cmd_sk_compare(cfg):
    params = _params(cfg)
    beta, b1 = params.beta, params.b1
    records = [
        make_record("h0_special", sk_variational.h0_special(beta, b1, _quad(cfg))),
        make_record("literature_comparison", sk_variational.literature_comparison(beta, b1)),
    ]
    try:
        dev = sk_variational.strong_field_deviation(beta, b1)
        records.append(make_record("strong_field_deviation", dev, found=True))
    except sk_variational.RootNotFound as exc:
        records.append(
            make_record("strong_field_deviation", beta=beta, b1=b1, found=False, b0=None, D=None, reason=str(exc))
        )
    return records, EXIT_OK


def cmd_sk_experiment(cfg):
    params = _params(cfg)
    rep = experiment.bound_validation(
        _sites(cfg),
        params,
        samples=_positive_int(cfg, "samples"),
        base_seed=int(cfg["seed"]),
        quad=_quad(cfg),
        workers=cfg["workers"],
    )
    return [make_record("experiment_report", rep)], EXIT_OK if rep.satisfied_3sigma else EXIT_UNSATISFIED


def cmd_sk_derivative_check(cfg):
    params = _params(cfg)
    n = _sites(cfg)
    s, q, b0, step = float(cfg["s"]), float(cfg["q"]), float(cfg["b0"]), float(cfg["step"])
    _require(0.0 <= q <= 1.0, "q must lie in [0, 1]")
    _require(step > 0 and step < s < 1.0 - step, "s must lie in (step, 1 - step)")
    if cfg["quadrature_nodes"]:
        try:
            chk = experiment.derivative_identity_quadrature(n, s, params, q, b0, int(cfg["quadrature_nodes"]), step)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        chk = experiment.derivative_identity_check(
            n, s, params, q, b0, _positive_int(cfg, "samples"), int(cfg["seed"]), step, cfg["workers"]
        )
    tol = float(cfg["tol"])
    ok = chk.diff < tol
    return [make_record("derivative_check", chk, tol=tol, satisfied=ok)], EXIT_OK if ok else EXIT_UNSATISFIED


# --------------------------------------------------------------------------
# parser

_MODEL = {"beta": 1.0, "b1": 0.5, "h": 0.0}
_COMMON = {"config": None, "out": None, "format": "jsonl", "quiet": False}

DEFAULTS: dict[str, dict[str, Any]] = {
    "coeffs": {"kernel": "f", "order": 6},
    "lemma6": {"kernel": "f", "n": 2, "grid_points": 2001},
    "spectral": {"sites": 2, "seed": 0, "beta": 1.0, "b1": 1.0, "h": 0.0, "observable": "Z1",
                 "observable_b": None, "hamiltonian": None},
    "verify": {"sites": 2, "trials": 10, "seed": 0, "beta_range": "0.1,5", "theorems": "t1,t2,t3,t4",
               "orders": None},
    "sk solve": {**_MODEL, "quad_count": sk_variational.DEFAULT_QUAD_COUNT, "starts": None},
    "sk classical": {"beta": 1.0, "h": 0.0, "quad_count": sk_variational.DEFAULT_QUAD_COUNT},
    "sk compare": {**_MODEL, "quad_count": sk_variational.DEFAULT_QUAD_COUNT},
    "sk experiment": {**_MODEL, "sites": 8, "samples": 100, "seed": 0, "quad_count": sk_variational.DEFAULT_QUAD_COUNT, "workers": None},
    "sk derivative-check": {**_MODEL, "sites": 2, "samples": 50, "seed": 0, "s": 0.5, "q": 0.5, "b0": 0.25,
                            "step": 1e-4, "tol": 1e-6, "quadrature_nodes": None, "workers": None},
}

COMMANDS: dict[str, Callable] = {
    "coeffs": cmd_coeffs,
    "lemma6": cmd_lemma6,
    "spectral": cmd_spectral,
    "verify": cmd_verify,
    "sk solve": cmd_sk_solve,
    "sk classical": cmd_sk_classical,
    "sk compare": cmd_sk_compare,
    "sk experiment": cmd_sk_experiment,
    "sk derivative-check": cmd_sk_derivative_check,
}


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS so that only flags actually given reach the namespace
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--out", help="write records here instead of stdout")
    p.add_argument("--format", choices=["json", "jsonl", "csv"])
    p.add_argument("--quiet", action="store_true", help="no summary on stderr")
    return p


def _model_flags(p, b1=True, h=True):
    p.add_argument("--beta", type=float)
    if b1:
        p.add_argument("--b1", type=float)
    if h:
        p.add_argument("--h", type=float)


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(
        prog="spinbounds", description=__doc__.strip().splitlines()[0], parents=[common],
        argument_default=argparse.SUPPRESS,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, parent=sub):
        return parent.add_parser(name, help=help_text, parents=[common], argument_default=argparse.SUPPRESS)

    p = add("coeffs", "exact Taylor coefficients of a kernel")
    p.add_argument("--kernel", choices=["f", "g", "h"])
    p.add_argument("--order", type=int)

    p = add("lemma6", "sign check of a Taylor remainder on a grid")
    p.add_argument("--kernel", choices=["f", "g", "h"])
    p.add_argument("--n", type=int)
    p.add_argument("--grid-points", type=int)

    p = add("spectral", "atoms of the spectral measure for one observable")
    p.add_argument("--sites", type=int)
    p.add_argument("--seed", type=int)
    _model_flags(p)
    p.add_argument("--observable", help="Pauli string such as X1*Z3")
    p.add_argument("--observable-b", help="second observable (default: adjoint of the first)")

    p = add("verify", "bracketing check of the truncated bounds on random instances")
    p.add_argument("--sites", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--beta-range", help="lo,hi")
    p.add_argument("--theorems", help="comma list from t1,t2,t3,t4")
    p.add_argument("--orders", help="comma list of truncation orders")

    sk = add("sk", "transverse-field SK variational bound").add_subparsers(dest="sk_command", required=True)

    p = add("solve", "all stationary points of the bound and the selected one", sk)
    _model_flags(p)
    p.add_argument("--quad-count", type=int)
    p.add_argument("--starts", help="q,b0;q,b0;...")

    p = add("classical", "classical overlap fixed point and stability", sk)
    _model_flags(p, b1=False)
    p.add_argument("--quad-count", type=int)

    p = add("compare", "h = 0 solution and comparison with earlier approximations", sk)
    _model_flags(p, h=False)
    p.add_argument("--quad-count", type=int)

    for name, help_text in (
        ("experiment", "exact-diagonalization check of the bound at finite size"),
        ("derivative-check", "finite difference of phi_N(s) against its derivative formula"),
    ):
        p = add(name, help_text, sk)
        _model_flags(p)
        p.add_argument("--sites", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int, help=f"threads (default from ${experiment.WORKERS_ENV})")
        if name == "experiment":
            p.add_argument("--quad-count", type=int)
        else:
            for flag in ("--s", "--q", "--b0", "--step", "--tol"):
                p.add_argument(flag, type=float)
            p.add_argument("--quadrature-nodes", type=int, help="average disorder by tensor Gauss-Hermite")
    return parser


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(argv: Optional[list[str]] = None) -> tuple[str, dict]:
    """Parse ``argv`` and merge flags over config over defaults."""
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    if command == "sk":
        command = f"sk {ns.pop('sk_command')}"
    config = _load_config(ns.get("config"))
    allowed = set(DEFAULTS[command]) | set(_COMMON)
    unknown = sorted(set(config) - allowed)
    if unknown:
        raise UsageError(f"unknown config keys for {command!r}: {unknown}")
    return command, {**_COMMON, **DEFAULTS[command], **config, **ns}


def render(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(records, indent=2) + "\n"
    if fmt == "jsonl":
        return "".join(json.dumps(r) + "\n" for r in records)
    header: list[str] = []
    for rec in records:
        header.extend(k for k in rec if k not in header)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in rec.items()})
    return buf.getvalue()


def main(argv: Optional[list[str]] = None) -> int:
    try:
        command, cfg = resolve(argv)
        if cfg["format"] not in ("json", "jsonl", "csv"):
            raise UsageError(f"unknown format {cfg['format']!r}")
        records, code = COMMANDS[command](cfg)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except (ValueError, TypeError) as exc:
        print(f"spinbounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    text = render(records, cfg["format"])
    if cfg["out"]:
        try:
            Path(cfg["out"]).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"spinbounds: error: cannot write {cfg['out']}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        sys.stdout.write(text)
    if not cfg["quiet"]:
        status = {EXIT_OK: "ok", EXIT_UNSATISFIED: "check failed"}[code]
        print(f"{command}: {len(records)} records, {status}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
