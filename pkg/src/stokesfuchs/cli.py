"""Batch front end: read a system description, run the pipeline, emit a report.

Subcommands
    rays         critical directions, anti-Stokes angles, dominance order
    connection   connection matrix with per-entry error estimates
    monodromy    monodromy matrices, inverses, dual family, trace invariants
    stokes       Stokes matrices and one-ray factors
    verify       closed-form Stokes data against the direct-integration oracle
    analyze      all of the above

Input is a JSON object {"n", "lambda": [[re,im],...], "A1": [[[re,im],...],...]}
with optional "eta", "series_order", "tol", "seed".  Complex numbers are
serialized as [re, im] pairs throughout; matrices are row-major nested lists.
Exit codes: 0 ok, 1 usage/parse error, 2 numeric failure, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from dataclasses import dataclass, field

import numpy as np

from . import continuation, core, local, monodromy, oracle
from .errors import MonodromyError, ParseError

VERIFY_TOL = 1e-6
COMMANDS = ("rays", "connection", "monodromy", "stokes", "verify")


@dataclass
class JobSpec:
    system: core.RankOneSystem
    eta: float
    series_order: int = local.DEFAULT_ORDER
    tol: float = 1e-12
    seed: int = 0
    commands: tuple = field(default_factory=lambda: COMMANDS)
    raw: dict = field(default_factory=dict)


def _as_complex(pair, what):
    if (not isinstance(pair, (list, tuple)) or len(pair) != 2
            or not all(isinstance(x, (int, float)) for x in pair)):
        raise ParseError(f"{what}: expected a [re, im] pair, got {pair!r}")
    return complex(pair[0], pair[1])


def parse_job(raw: dict, commands, eta=None, order=None, tol=None) -> JobSpec:
    """Validate the raw input object and apply defaults.

    Integer-typed tokens in A1 survive parsing exactly, which is what makes
    the resonant-case classification exact.
    """
    if not isinstance(raw, dict):
        raise ParseError("input must be a JSON object")
    try:
        lam = [_as_complex(p, "lambda") for p in raw["lambda"]]
        a1 = [[_as_complex(p, "A1") for p in row] for row in raw["A1"]]
    except KeyError as exc:
        raise ParseError(f"missing required field {exc}") from exc
    except TypeError as exc:
        raise ParseError(f"malformed input: {exc}") from exc
    n = raw.get("n", len(lam))
    system = core.validate_system(lam, a1, n=n)
    if eta is None:
        eta = raw.get("eta")
    if eta is None:
        eta = core.default_eta(system)
    job = JobSpec(system=system, eta=float(eta),
                  series_order=int(order if order is not None
                                   else raw.get("series_order", local.DEFAULT_ORDER)),
                  tol=float(tol if tol is not None else raw.get("tol", 1e-12)),
                  seed=int(raw.get("seed", 0)),
                  commands=tuple(commands), raw=raw)
    if job.tol <= 0 or job.series_order <= 0:
        raise ParseError("series_order and tol must be positive")
    return job


def _cpx(z):
    z = complex(z)
    return [z.real, z.imag]


def _cmat(m):
    m = np.asarray(m)
    return [[_cpx(z) for z in row] for row in m]


def run(job: JobSpec) -> dict:
    """Execute the requested commands in dependency order and assemble the
    report; raises MonodromyError subclasses on numeric failure."""
    sys = job.system
    frm = core.frame(sys, job.eta)
    report = {
        "input": job.raw,
        "eta": job.eta,
        "commands": list(job.commands),
        "seed": job.seed,
    }

    report["case_tags"] = [str(local.classify(lp)) for lp in sys.lambda_prime]
    if "rays" in job.commands:
        report["critical_directions"] = list(map(float, frm.criticals))
        report["tau"] = list(map(float, frm.tau))
        report["m"] = int(frm.m)
        report["mu"] = int(frm.mu)
        report["dominance"] = [[bool(frm.dominates[j, k]) for k in range(sys.n)]
                               for j in range(sys.n)]
        report["dominance_order"] = list(frm.order)

    need_c = any(c in job.commands
                 for c in ("connection", "monodromy", "stokes", "verify"))
    if not need_c:
        return report

    bases = local.build_all_bases(sys, job.series_order)
    cmat = continuation.connection_matrix(sys, frm, bases, job.tol)
    report["C"] = _cmat(cmat.c)
    report["err_C"] = [[float(x) for x in row] for row in cmat.err]
    report["degeneracy"] = {"zero_rows": list(cmat.zero_rows),
                            "zero_cols": list(cmat.zero_cols),
                            "near_integer_eigenvalue": cmat.near_integer_eigenvalue}

    lp = sys.lambda_prime
    if "monodromy" in job.commands or "verify" in job.commands:
        ms, ms_inv = monodromy.monodromy_matrices(cmat, lp)
        report["M"] = [_cmat(m) for m in ms]
        report["M_inv"] = [_cmat(m) for m in ms_inv]
        try:
            mstar = monodromy.mstar_matrices(cmat, lp, np.linalg.eigvals(sys.a1))
            report["M_star"] = [_cmat(m) for m in mstar]
        except MonodromyError:
            report["M_star"] = None
        m_inf, spec = monodromy.monodromy_at_infinity(ms, frm)
        report["M_infinity"] = _cmat(m_inf)
        report["M_infinity_spectrum"] = [_cpx(z) for z in spec]

    if any(c in job.commands for c in ("monodromy", "stokes", "verify")):
        s_plus = monodromy.stokes_plus(cmat, lp, frm)
        s_minus_inv = monodromy.stokes_minus_inv(cmat, lp, frm)
        report["S_plus"] = _cmat(s_plus)
        report["S_minus_inv"] = _cmat(s_minus_inv)
        if "monodromy" in job.commands or "verify" in job.commands:
            ms, _ = monodromy.monodromy_matrices(cmat, lp)
            tr = monodromy.trace_invariants(ms, lp, s_plus, s_minus_inv, frm)
            report["traces"] = {
                "tr_M": [_cpx(z) for z in tr["tr"]],
                "tr_M_closed": [_cpx(z) for z in tr["tr_closed"]],
                "tr_MM": _cmat(tr["tr_pair"]),
                "tr_MM_closed": _cmat(tr["tr_pair_closed"]),
                "max_diff_single": tr["max_diff_single"],
                "max_diff_pair": tr["max_diff_pair"],
            }

    if "stokes" in job.commands:
        wmap, s_plus_f, s_minus_inv_f = monodromy.stokes_factor_product(
            sys, frm, bases, job.tol)
        report["W"] = {str(nu): _cmat(w) for nu, w in sorted(wmap.items())}
        report["factorization_residual"] = {
            "S_plus": float(np.max(np.abs(s_plus_f - s_plus))),
            "S_minus_inv": float(np.max(np.abs(s_minus_inv_f - s_minus_inv))),
        }

    if "verify" in job.commands:
        s_nu, s_nu_mu = oracle.stokes_pair(sys, frm.crit, frm.nu,
                                           tol=min(job.tol, 1e-10))
        d_plus = float(np.max(np.abs(s_plus - s_nu)))
        d_minus = float(np.max(np.abs(s_minus_inv - np.linalg.inv(s_nu_mu))))
        report["verify"] = {
            "S_plus_oracle": _cmat(s_nu),
            "S_minus_inv_oracle": _cmat(np.linalg.inv(s_nu_mu)),
            "max_diff_S_plus": d_plus,
            "max_diff_S_minus_inv": d_minus,
            "tolerance": VERIFY_TOL,
            "passed": bool(d_plus <= VERIFY_TOL and d_minus <= VERIFY_TOL),
        }
    return report


def _flatten_csv(report: dict):
    """CSV rows: section,row,col,value_re,value_im (scalars use empty row/col)."""
    lines = ["section,row,col,re,im"]

    def emit(section, value):
        if isinstance(value, (int, float, bool)):
            lines.append(f"{section},,,{float(value)!r},")
        elif isinstance(value, str):
            lines.append(f"{section},,,{value},")
        elif isinstance(value, list) and len(value) == 2 \
                and all(isinstance(x, (int, float)) for x in value):
            lines.append(f"{section},,,{float(value[0])!r},{float(value[1])!r}")
        elif isinstance(value, list):
            for i, row in enumerate(value):
                if isinstance(row, list) and row and isinstance(row[0], list):
                    for j, z in enumerate(row):
                        lines.append(f"{section},{i},{j},{float(z[0])!r},{float(z[1])!r}")
                elif isinstance(row, list) and len(row) == 2 \
                        and all(isinstance(x, (int, float)) for x in row):
                    lines.append(f"{section},{i},,{float(row[0])!r},{float(row[1])!r}")
                else:
                    lines.append(f"{section},{i},,{row},")
        elif isinstance(value, dict):
            for key, sub in value.items():
                emit(f"{section}.{key}", sub)
        elif value is None:
            lines.append(f"{section},,,,")

    for key, value in report.items():
        if key == "input":
            continue
        emit(key, value)
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "csv":
        return _flatten_csv(report)
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stokesfuchs",
        description="monodromy and Stokes data of rank-one linear ODE systems")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS + ("analyze",):
        p = sub.add_parser(name)
        p.add_argument("--input", required=True, help="path to the JSON job file")
        p.add_argument("--output", default=None, help="write the report here")
        p.add_argument("--eta", type=float, default=None)
        p.add_argument("--order", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    commands = COMMANDS if args.command == "analyze" else (args.command,)
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read input: {exc}", file=_sys.stderr)
        return 1
    try:
        job = parse_job(raw, commands, eta=args.eta, order=args.order, tol=args.tol)
    except (ParseError, MonodromyError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 1
    try:
        report = run(job)
    except MonodromyError as exc:
        print(f"numeric failure [{type(exc).__name__}]: {exc}", file=_sys.stderr)
        return 2
    text = render(report, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)
    if "verify" in commands and not report["verify"]["passed"]:
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
