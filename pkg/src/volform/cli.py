"""Batch command-line front end.

Subcommands: integrate (trajectory to CSV), classify (a permutation
pair's class and conditions), volcheck (volume audit over random
points), order (convergence study).  All randomness is drawn from a
seeded 64-bit PCG64 generator and floats are written with 17 significant
digits, so identical configurations produce byte-identical files.

Exit codes: 0 success, 1 volcheck threshold exceeded, 2 invalid
configuration (E_CONFIG), 3 solver failure or degeneracy (E_SOLVER,
E_DEGENERATE).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import fields, schemes, verify
from .errors import ConfigError, DegeneracyError, SolverError, VolformError
from .genmap import SolverConfig
from .perm3 import Permutation, classify, render_conditions, sign

__all__ = ["main"]


def _fmt(v: float) -> str:
    return f"{v:.16e}"


def _parse_vec(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"expected three comma-separated numbers, got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ConfigError(f"cannot parse vector {text!r}") from None


def _load_field(path: str) -> fields.Field3:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"field file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"field file {path} is not valid JSON: {exc}") from None
    try:
        return fields.from_spec(spec)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad field spec in {path}: {exc}") from None


def _solver_config() -> SolverConfig:
    tol = os.environ.get("VOLFORM_NEWTON_TOL")
    if tol is None:
        return SolverConfig()
    try:
        return SolverConfig(newton_tol=float(tol))
    except ValueError:
        raise ConfigError(f"VOLFORM_NEWTON_TOL={tol!r} is not a number") from None


def _build_scheme(args) -> schemes.SchemeHandle:
    field = _load_field(args.field)
    if args.h <= 0:
        raise ConfigError(f"step size must be positive, got {args.h}")
    return schemes.make_scheme(args.scheme, field, args.h, _solver_config())


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_integrate(args) -> int:
    scheme = _build_scheme(args)
    if args.steps < 1:
        raise ConfigError(f"steps must be >= 1, got {args.steps}")
    x = _parse_vec(args.x0)
    every = max(1, args.audit_every)
    rows = ["step,t,x1,x2,x3,det_defect"]

    def defect_at(pt) -> str:
        audit = verify.volume_audit(scheme, [pt])
        return _fmt(audit.max_defect)

    for k in range(args.steps + 1):
        audit_cell = defect_at(x) if k % every == 0 else ""
        t = k * scheme.h
        rows.append(f"{k},{_fmt(t)},{_fmt(x[0])},{_fmt(x[1])},{_fmt(x[2])},{audit_cell}")
        if k < args.steps:
            x = scheme.step(x)
    _write(args.out, "\n".join(rows) + "\n")
    print(f"wrote {args.steps + 1} rows to {args.out}")
    return 0


def cmd_classify(args) -> int:
    try:
        sigma = Permutation.from_string(args.sigma)
        Sigma = Permutation.from_string(args.Sigma)
    except ValueError as exc:
        raise ConfigError(f"not a permutation: {exc}") from None
    pc = classify(sigma, Sigma)
    identity_note = " (identity)" if pc.tau.image == (1, 2, 3) else ""
    lines = [
        f"sigma: {sigma}",
        f"Sigma: {Sigma}",
        f"tau: {pc.tau}{identity_note}",
        f"sign(tau): {'+1' if sign(pc.tau) > 0 else '-1'}",
        f"class: {pc.label}",
        f"reduction: relabel rho = {pc.relabel}, adjoint: {'yes' if pc.adjoint_flag else 'no'}",
        "",
        render_conditions(sigma, Sigma),
    ]
    print("\n".join(lines))
    return 0


def cmd_volcheck(args) -> int:
    scheme = _build_scheme(args)
    if args.samples < 1:
        raise ConfigError(f"samples must be >= 1, got {args.samples}")
    rng = np.random.default_rng(args.seed)
    points = rng.uniform(-args.box, args.box, size=(args.samples, 3))
    audit = verify.volume_audit(scheme, points)
    if args.out:
        _write(args.out, audit.to_csv())
    print(f"max_defect={_fmt(audit.max_defect)} mean_defect={_fmt(audit.mean_defect)}")
    if args.fail_above is not None and audit.max_defect > args.fail_above:
        print(f"FAIL: max defect exceeds {_fmt(args.fail_above)}")
        return 1
    return 0


def cmd_order(args) -> int:
    field = _load_field(args.field)
    if args.h0 <= 0 or args.levels < 1:
        raise ConfigError("h0 must be positive and levels >= 1")
    h_list = [args.h0 / (2 ** k) for k in range(args.levels)]
    cfg = _solver_config()
    x0 = _parse_vec(args.x0)

    def factory(h):
        return schemes.make_scheme(args.scheme, field, h, cfg)

    report = verify.observed_order(factory, field, x0, args.T, h_list)
    if args.out:
        _write(args.out, report.to_text() + "\n")
    if len(h_list) == 1:
        print(f"error at h={args.h0:g}: {_fmt(report.errors[0])} "
              "(single level: no pairwise order)")
    else:
        print(f"fitted slope: {report.slope:.4f}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volform",
        description="Volume-preserving one-step integrators from generating one-forms.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_opts(p):
        p.add_argument("--field", required=True, help="path to a field JSON spec")
        p.add_argument("--scheme", required=True, choices=schemes.SCHEME_NAMES)
        p.add_argument("--x0", default="0.1,0.2,0.3", help="initial point a,b,c")

    p = sub.add_parser("integrate", help="advance a trajectory, write CSV")
    add_run_opts(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--audit-every", type=int, default=100,
                   help="audit |det J - 1| every k-th row")
    p.set_defaults(fn=cmd_integrate)

    p = sub.add_parser("classify", help="classify a permutation pair")
    p.add_argument("--sigma", required=True, help='permutation "a,b,c"')
    p.add_argument("--Sigma", required=True, help='permutation "a,b,c"')
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("volcheck", help="volume audit at random points")
    add_run_opts(p)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--box", type=float, default=1.0, help="half-width of the sample box")
    p.add_argument("--out", default=None)
    p.add_argument("--fail-above", type=float, default=None)
    p.set_defaults(fn=cmd_volcheck)

    p = sub.add_parser("order", help="observed-order study")
    add_run_opts(p)
    p.add_argument("--h0", type=float, required=True)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_order)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"E_CONFIG: {exc}", file=sys.stderr)
        return 2
    except DegeneracyError as exc:
        print(f"E_DEGENERATE: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"E_SOLVER: {exc}", file=sys.stderr)
        return 3
    except VolformError as exc:
        print(f"E_SOLVER: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
