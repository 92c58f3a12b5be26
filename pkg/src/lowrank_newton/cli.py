"""Command-line front end.

Every subcommand prints optional Newton trace lines and then a block of
``key=value`` lines.  Exit status is 0 on convergence, 2 on input errors and
3 on numerical failure or non-convergence.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .deflate import DeflationError, depth_deflation_solve
from .eig import SupportMismatch, defective_eig
from .factor import FactorArray, FactorStructure, HostingSpaceError, factor_refine, gauge_normalize
from .gcd import GcdError, numerical_gcd
from .linalg_core import LinalgError, format_complex, numerical_rank, parse_matrix, parse_scalar, parse_vector, svd
from .linear_solve import LinearSolveError, general_solve
from .mapping import LayoutError
from .newton import CONVERGED_STATIONARY, CONVERGED_ZERO, NewtonError, NewtonOptions, rank_r_newton
from .poly import PolySyntaxError, find_variables, format_poly, parse_poly, parse_system

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_NUMERIC = 3


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    rank: Optional[int] = None
    theta: Optional[float] = None
    max_steps: int = 50
    seed: int = 0
    trace: bool = False
    out: Optional[str] = None

    @classmethod
    def from_args(cls, args):
        rank = args.rank if isinstance(args.rank, int) else None
        return cls(args.command, rank, args.theta, args.max_steps, args.seed, args.trace, args.out)

    def newton(self, rank=None) -> NewtonOptions:
        return NewtonOptions(rank=rank, max_steps=self.max_steps, trace=self.trace)


def _num(x) -> str:
    x = complex(x)
    return "%.15g" % x.real if x.imag == 0 else format_complex(x)


def _real(x) -> str:
    return "%.15g" % float(x)


def _read(path_or_text: str) -> str:
    if os.path.isfile(path_or_text):
        with open(path_or_text) as fh:
            return fh.read()
    return path_or_text


def _read_file(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _poly_text(text: str) -> str:
    lines = [ln.split("#", 1)[0] for ln in text.splitlines()]
    return " ".join(ln.strip().rstrip("\\") for ln in lines if ln.strip())


def _int_list(text: str) -> list:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _common(p: argparse.ArgumentParser, rank_type=int, rank_help="projection rank of the Jacobian"):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rank", type=rank_type, help=rank_help)
    g.add_argument("--theta", type=float, help="rank tolerance")
    p.add_argument("--max-steps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0, help="seed for random choices (default 0)")
    p.add_argument("--trace", action="store_true", help="print one line per Newton step")
    p.add_argument("--out", metavar="FILE", help="write the result block to FILE instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lowrank-newton",
                                     description="Rank-r Newton solvers for singular equations.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="rank-r Newton on a polynomial system")
    p.add_argument("--system", required=True, help="system file")
    p.add_argument("--x0", required=True, help="initial point, comma separated")
    _common(p)

    p = sub.add_parser("linsolve", help="singular or rank-deficient linear system")
    p.add_argument("--matrix", required=True, help="matrix file, one row per line")
    p.add_argument("--rhs", required=True, help="right-hand side, comma separated or a file")
    p.add_argument("--x0", help="reference point for the particular solution")
    _common(p)

    p = sub.add_parser("gcd", help="numerical GCD of two univariate polynomials")
    p.add_argument("p")
    p.add_argument("q")
    p.add_argument("--degree", type=int, help="GCD degree (estimated when omitted)")
    _common(p)

    p = sub.add_parser("factor", help="refine a structured factorization")
    p.add_argument("--poly", required=True, help="polynomial string or file")
    p.add_argument("--factor", nargs=2, action="append", required=True, metavar=("EXP", "INIT"),
                   help="exponent and initial factor; the factor's monomials span its hosting space")
    p.add_argument("--u0", default="1", help="initial scalar multiplier")
    p.add_argument("--vars", help="variable order, comma separated")
    _common(p)

    p = sub.add_parser("eig", help="defective eigenvalue from an empirical matrix")
    p.add_argument("--matrix", required=True, help="matrix file")
    p.add_argument("--lambda0", required=True, type=str)
    p.add_argument("--m", type=int, required=True, help="geometric multiplicity")
    p.add_argument("--k", type=int, required=True, help="smallest Jordan block size")
    _common(p)

    p = sub.add_parser("deflate", help="depth deflation for ultrasingular zeros")
    p.add_argument("--system", required=True, help="system file")
    p.add_argument("--x0", required=True, help="initial point, comma separated")
    p.add_argument("--dim", type=int, default=0, help="dimension of the zero set")
    p.add_argument("--max-depth", type=int, default=3)
    _common(p, rank_type=_int_list, rank_help="Jacobian rank at each deflation level, comma separated")
    return parser


def _status_code(status: str) -> int:
    return EXIT_OK if status in (CONVERGED_ZERO, CONVERGED_STATIONARY) else EXIT_NUMERIC


def _trace_block(trace) -> list:
    return [("status", trace.status), ("steps", trace.steps), ("rank", trace.rank),
            ("residual", _real(trace.residual)), ("condition", _real(trace.condition))]


def cmd_solve(args, cfg):
    f = parse_system(_read_file(args.system))
    x0 = parse_vector(args.x0)
    if x0.size != f.domain.total_dim:
        raise InputError(f"x0 has {x0.size} entries, system has {f.domain.total_dim} variables")
    rank = cfg.rank
    if rank is None and cfg.theta is not None:
        J = f.J(x0)
        rank = numerical_rank(J, cfg.theta * svd(J).s[0])
    t = rank_r_newton(f, x0, cfg.newton(rank))
    out = _trace_block(t)
    out += [(f"x[{i}]", _num(v)) for i, v in enumerate(t.point)]
    return out, _status_code(t.status)


def cmd_linsolve(args, cfg):
    A = parse_matrix(_read_file(args.matrix))
    b = parse_vector(_read(args.rhs).replace("\n", " "))
    x0 = None if args.x0 is None else parse_vector(args.x0)
    sol = general_solve(A, b, rank=cfg.rank, theta=cfg.theta, x0=x0)
    tol = 1e-12 * (1.0 + float(np.linalg.norm(b)))
    status = CONVERGED_ZERO if sol.residual <= tol else CONVERGED_STATIONARY
    out = [("status", status), ("rank", sol.rank_used), ("residual", _real(sol.residual)),
           ("condition", _real(sol.condition)), ("kernel_dim", sol.kernel_dim)]
    out += [(f"x[{i}]", _num(v)) for i, v in enumerate(sol.particular)]
    for j in range(sol.kernel_dim):
        out += [(f"kernel[{j}][{i}]", _num(v)) for i, v in enumerate(sol.kernel_basis[:, j])]
    return out, EXIT_OK


def cmd_gcd(args, cfg):
    vs = tuple(sorted(set(find_variables(args.p)) | set(find_variables(args.q))))
    if len(vs) != 1:
        raise InputError(f"gcd needs univariate polynomials in one variable, found {vs}")
    p, q = parse_poly(args.p, vs), parse_poly(args.q, vs)
    theta = 1e-8 if cfg.theta is None else cfg.theta
    tri = numerical_gcd(p, q, theta=theta, degree=args.degree, opts=cfg.newton(), rank=cfg.rank)
    out = _trace_block(tri.trace)
    out += [("degree", tri.degree), ("u", format_poly(tri.u)), ("v", format_poly(tri.v)),
            ("w", format_poly(tri.w))]
    return out, _status_code(tri.trace.status)


def cmd_factor(args, cfg):
    text = _poly_text(_read(args.poly))
    inits = [(int(e), s) for e, s in args.factor]
    if args.vars:
        vs = tuple(v.strip() for v in args.vars.split(",") if v.strip())
    else:
        found = set(find_variables(text))
        for _, s in inits:
            found |= set(find_variables(s))
        vs = tuple(sorted(found))
    p = parse_poly(text, vs)
    factors = [parse_poly(s, vs) for _, s in inits]
    ells = [e for e, _ in inits]
    st = FactorStructure.from_initial(ells, factors, vs)
    res = factor_refine(p, st, FactorArray(parse_scalar(args.u0), factors), opts=cfg.newton(),
                        rank=cfg.rank)
    norm = gauge_normalize(res, ells)
    out = _trace_block(res.trace)
    out.append(("u0", _num(norm.u0)))
    for j, (u, e) in enumerate(zip(norm.factors, ells), 1):
        out += [(f"exponent[{j}]", e), (f"u[{j}]", format_poly(u))]
    return out, _status_code(res.trace.status)


def cmd_eig(args, cfg):
    A = parse_matrix(_read_file(args.matrix))
    lam0 = parse_scalar(args.lambda0)
    theta = 1e-8 if cfg.theta is None else cfg.theta
    res = defective_eig(A, lam0, args.m, args.k, theta, seed=cfg.seed, rank=cfg.rank,
                        opts=cfg.newton())
    out = _trace_block(res.trace)
    out[3] = ("residual", _real(res.residual))
    out[4] = ("condition", _real(res.condition))
    out.append(("eigenvalue", _num(res.eigenvalue)))
    for i, row in enumerate(res.X):
        out += [(f"X[{i}][{j}]", _num(v)) for j, v in enumerate(row)]
    return out, _status_code(res.trace.status)


def cmd_deflate(args, cfg):
    f = parse_system(_read_file(args.system))
    x0 = parse_vector(args.x0)
    if x0.size != f.domain.total_dim:
        raise InputError(f"x0 has {x0.size} entries, system has {f.domain.total_dim} variables")
    kw = {} if cfg.theta is None else {"theta": cfg.theta}
    res = depth_deflation_solve(f, x0, ranks=args.rank, dim=args.dim, max_depth=args.max_depth,
                                seed=cfg.seed, opts=cfg.newton(), **kw)
    out = _trace_block(res.trace)
    out += [("depth", res.depth), ("nullity", res.nullity)]
    out += [(f"x[{i}]", _num(v)) for i, v in enumerate(res.x)]
    return out, _status_code(res.trace.status)


COMMANDS = {"solve": cmd_solve, "linsolve": cmd_linsolve, "gcd": cmd_gcd, "factor": cmd_factor,
            "eig": cmd_eig, "deflate": cmd_deflate}

PARSE_ERRORS = (InputError, PolySyntaxError, LayoutError, ValueError)
NUMERIC_ERRORS = (NewtonError, LinalgError, LinearSolveError, DeflationError, GcdError,
                  SupportMismatch, HostingSpaceError, ArithmeticError, np.linalg.LinAlgError)


def _emit(pairs, path):
    text = "".join(f"{k}={v}\n" for k, v in pairs)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


VALUE_OPTIONS = {"--x0": 1, "--rhs": 1, "--lambda0": 1, "--u0": 1, "--poly": 1, "--factor": 2}


def _protect_values(argv):
    """Keep values such as ``-0.2,0.5`` from being read as flags by argparse."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        out.append(a)
        i += 1
        for _ in range(VALUE_OPTIONS.get(a, 0)):
            if i < len(argv):
                v = argv[i]
                out.append(" " + v if v.startswith("-") else v)
                i += 1
    return out


def dispatch(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_protect_values(argv))
    cfg = RunConfig.from_args(args)
    try:
        pairs, code = COMMANDS[args.command](args, cfg)
    except NUMERIC_ERRORS as exc:
        pairs, code = [("status", "failed"), ("error", "numerical"), ("message", str(exc))], EXIT_NUMERIC
    except PARSE_ERRORS as exc:
        pairs, code = [("status", "failed"), ("error", "parse"), ("message", str(exc))], EXIT_PARSE
    _emit(pairs, cfg.out)
    sys.stdout.flush()
    return code


def main(argv=None):
    sys.exit(dispatch(argv))


if __name__ == "__main__":
    main()
