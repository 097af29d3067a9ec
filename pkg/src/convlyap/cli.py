"""``convlyap`` command-line interface.

Exit codes: 0 success or feasible, 2 negative verdict (infeasible, not
decreasing, unstable), 3 term cap exceeded, 64 usage or malformed input,
70 an exactness check failed and nothing was emitted.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bounds import StabilityData, search_bound
from .dynamics import DivergenceError, estimate, simulate
from .formats import dumps, gram_to_json, poly_from_json, poly_to_json, sos_export
from .lyapunov import certify, construct_V
from .picard import TermCapExceeded, extend
from .polyalg import ParseError, Polynomial, VectorField, parse_system, poly_from_text
from .verify import check_lyapunov

EXIT_OK = 0
EXIT_NEGATIVE = 2
EXIT_CAP = 3
EXIT_USAGE = 64
EXIT_INTERNAL = 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def builtin_systems() -> list:
    return sorted(p.name[:-4] for p in resources.files("convlyap").joinpath("systems").iterdir()
                  if p.name.endswith(".txt"))


def load_system(source: str) -> VectorField:
    """Read a system file; a bare shipped name such as ``vdp`` also works."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif source in builtin_systems():
        text = resources.files("convlyap").joinpath("systems", f"{source}.txt").read_text()
    else:
        raise UsageError(f"system file not found: {source}")
    try:
        return parse_system(text)
    except ParseError as err:
        raise UsageError(f"{source}: {err}") from None
    except ValueError as err:
        raise UsageError(f"{source}: {err}") from None


def load_lyapunov(source: str, n: int) -> Polynomial:
    """Accept ``construct`` output, a bare JSON term list, or an expression in x1..xn."""
    path = Path(source)
    if not path.is_file():
        raise UsageError(f"Lyapunov file not found: {source}")
    text = path.read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        try:
            return poly_from_text(text, n)
        except (ParseError, ValueError) as err:
            raise UsageError(f"{source}: {err}") from None
    try:
        terms = obj["V"] if isinstance(obj, dict) else obj
        V = poly_from_json(terms, n)
    except (KeyError, TypeError, ValueError) as err:
        raise UsageError(f"{source}: not a polynomial: {err}") from None
    if V.nvars != n:
        raise UsageError(f"{source}: V has {V.nvars} variables, system has {n}")
    return V


def _data(args) -> StabilityData:
    try:
        return StabilityData(K=args.K, lam=args.lam, L=args.L, r=args.r, q=args.q)
    except ValueError as err:
        raise UsageError(str(err)) from None


# -- commands ----------------------------------------------------------------


def cmd_bound(args) -> int:
    res = search_bound(_data(args), args.tgrid, args.kmax, args.free_delta)
    print(dumps(res.to_dict()))
    return EXIT_OK if res.feasible else EXIT_NEGATIVE


def cmd_sweep(args) -> int:
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    lams = np.linspace(args.lambda_from, args.lambda_to, args.steps) if args.steps > 1 else [args.lambda_from]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["lambda", "T", "N", "k", "degree_bound", "feasible"])
    for lam in sorted(float(v) for v in lams):
        args.lam = lam
        res = search_bound(_data(args), args.tgrid, args.kmax, args.free_delta)
        if res.feasible:
            w.writerow([repr(lam), repr(res.T), res.N, res.k, res.degree_bound, "true"])
        else:
            w.writerow([repr(lam), "", "", "", "", "false"])
    return EXIT_OK


def cmd_construct(args) -> int:
    f = load_system(args.system)
    if args.T <= 0:
        raise UsageError("--T must be positive")
    delta = args.N * args.T if args.delta is None else args.delta
    if not 0 < delta <= args.N * args.T:
        raise UsageError(f"--delta must lie in (0, N*T] = (0, {args.N * args.T}]")
    try:
        g = extend(f, args.k, args.N, args.T)
    except TermCapExceeded as err:
        print(f"convlyap: {err}", file=sys.stderr)
        print(f"convlyap: predicted degree {err.predicted_degree}", file=sys.stderr)
        return EXIT_CAP
    result = construct_V(g, delta)
    check = certify(result)
    if not check.ok:
        print(f"convlyap: certificate failed exact checks, refusing to emit: {check}", file=sys.stderr)
        return EXIT_INTERNAL
    out = {
        "n": f.n,
        "k": args.k,
        "N": args.N,
        "T": args.T,
        "delta": result.delta,
        "V": poly_to_json(result.V),
        "V_text": result.V.to_string(),
        "degree": result.degree,
        "piece_degrees": list(result.degree_pieces),
        "gram": gram_to_json(result.gram),
        "certificate": {
            "reconstruction": check.reconstruction,
            "psd": [bool(p) for p in check.psd],
            "v_at_origin_zero": check.v_at_origin_zero,
            "degree_even": check.degree_even,
        },
    }
    print(dumps(out))
    return EXIT_OK


def cmd_verify(args) -> int:
    f = load_system(args.system)
    V = load_lyapunov(args.lyapunov, f.n)
    if args.radius <= 0:
        raise UsageError("--radius must be positive")
    try:
        rep = check_lyapunov(V, f, args.radius, args.samples)
    except ValueError as err:
        raise UsageError(str(err)) from None
    print(dumps(rep.to_dict()))
    return EXIT_OK if rep.decreasing else EXIT_NEGATIVE


def cmd_estimate(args) -> int:
    f = load_system(args.system)
    if args.radius <= 0 or args.h <= 0 or args.tend <= 0:
        raise UsageError("--radius, --h and --tend must be positive")
    rep = estimate(f, args.radius, args.samples, args.tend, args.h, args.grid)
    print(dumps(rep.__dict__))
    if not rep.stable:
        print(f"convlyap: instability: {rep.message}", file=sys.stderr)
        return EXIT_NEGATIVE
    return EXIT_OK


def cmd_export_sos(args) -> int:
    f = load_system(args.system)
    try:
        out = sos_export(f, args.radius, args.degree, args.form)
    except ValueError as err:
        raise UsageError(str(err)) from None
    print(dumps(out))
    return EXIT_OK


def cmd_simulate(args) -> int:
    f = load_system(args.system)
    try:
        x0 = [float(v) for v in args.x0.split(",")]
    except ValueError:
        raise UsageError(f"--x0 must be comma-separated numbers: {args.x0!r}") from None
    if len(x0) != f.n:
        raise UsageError(f"--x0 has {len(x0)} entries, system has {f.n}")
    if args.h <= 0 or args.tend <= 0:
        raise UsageError("--h and --tend must be positive")
    try:
        traj = simulate(f, x0, args.tend, args.h)
    except DivergenceError as err:
        err.partial.write_csv(sys.stdout)
        print(f"convlyap: {err}", file=sys.stderr)
        return EXIT_NEGATIVE
    traj.write_csv(sys.stdout)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _stability_flags(p: argparse.ArgumentParser, with_lambda: bool = True) -> None:
    p.add_argument("--K", type=float, required=True, help="overshoot constant, >= 1")
    if with_lambda:
        p.add_argument("--lambda", dest="lam", type=float, required=True, help="decay rate, > 0")
    p.add_argument("--L", type=float, required=True, help="Lipschitz bound on the ball")
    p.add_argument("--r", type=float, default=1.0, help="ball radius (default 1)")
    p.add_argument("--q", type=int, default=1, help="degree of the vector field (default 1)")
    p.add_argument("--tgrid", type=_positive_int, default=64, help="number of T grid points")
    p.add_argument("--kmax", type=_positive_int, default=30, help="largest Picard count tried")
    p.add_argument("--free-delta", action="store_true",
                   help="sweep the horizon too, using the pre-substitution conditions")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="convlyap", description="Converse SOS Lyapunov functions via Picard iteration.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("bound", help="search for the smallest degree bound")
    _stability_flags(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", help="degree bound versus decay rate, as CSV")
    _stability_flags(p, with_lambda=False)
    p.add_argument("--lambda-from", type=float, required=True)
    p.add_argument("--lambda-to", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("construct", help="build V and its exact Gram certificate")
    p.add_argument("--system", required=True, help="system file, or a shipped name: vdp, cubic, linear")
    p.add_argument("--k", type=_positive_int, required=True)
    p.add_argument("--N", type=_positive_int, required=True)
    p.add_argument("--T", type=_rational, required=True, help="piece length, e.g. 1/4")
    p.add_argument("--delta", type=_rational, default=None, help="horizon (default N*T)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="sample the Lyapunov inequalities on a ball")
    p.add_argument("--system", required=True)
    p.add_argument("--lyapunov", required=True, help="construct output, JSON term list, or expression")
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--samples", type=_positive_int, default=2000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("estimate", help="estimate K, lambda and L from simulation")
    p.add_argument("--system", required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--samples", type=_positive_int, default=32)
    p.add_argument("--tend", type=float, default=20.0)
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--grid", type=_positive_int, default=101, help="grid points per axis for L")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("export-sos", help="write SOS feasibility problem data")
    p.add_argument("--system", required=True)
    p.add_argument("--radius", type=_rational, required=True)
    p.add_argument("--degree", type=int, required=True, help="even degree 2d of V")
    p.add_argument("--form", choices=["full", "reduced", "thm3", "thm5"], default="full",
                   help="full: four multipliers; reduced: three")
    p.set_defaults(func=cmd_export_sos)

    p = sub.add_parser("simulate", help="RK4 trajectory as CSV")
    p.add_argument("--system", required=True)
    p.add_argument("--x0", required=True, help="comma-separated initial state")
    p.add_argument("--tend", type=float, required=True)
    p.add_argument("--h", type=float, default=1e-3)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as err:
        print(f"convlyap: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
