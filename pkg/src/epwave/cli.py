"""Command-line front end.

Usage::

    epwave canonical --P "1/x" --Q 1 --t-min 1 --t-max 10 --n 5
    epwave ermakov --A 1 --B 1j --tau 1 --t-max 3 --n 7
    epwave kasner --p1 -0.2
    epwave parametrix --kappa 1 --sigma 1 --T 1 --t-max 20 --n 50 --spacing log
    epwave verify --kappa 1 --sigma 1 --T 1 --t-max 20 --n 50 --spacing log

Every subcommand writes a table (CSV with a header row, or JSON with
``config``, ``columns`` and ``rows``) to ``--output`` or stdout.

Exit status: 0 when all residuals are below ``--tol``, 1 when some residual
is not, 2 on invalid input or I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import canonical, ermakov, kasner, parametrix
from .numerics import (
    DomainError,
    IntegrationError,
    Interval,
    QuadratureError,
    ScalarFunction,
    derivative,
)

__all__ = ["main", "build_parser", "run", "CLIError"]

EXIT_OK, EXIT_RESIDUAL, EXIT_INVALID = 0, 1, 2
DEFAULT_TOL = 1e-6

_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in (
        "sin", "cos", "tan", "arcsin", "arccos", "arctan", "sinh", "cosh", "tanh",
        "exp", "log", "log10", "sqrt", "abs", "pi", "e",
    )
}


class CLIError(ValueError):
    """Invalid command-line input."""


def _expression(text: str, var: str = "x"):
    """Compile a numpy expression in one variable, e.g. ``"1/x + sin(x)"``."""
    try:
        code = compile(text, "<expression>", "eval")
    except SyntaxError as exc:
        raise CLIError(f"cannot parse expression {text!r}: {exc.msg}") from None
    for name in code.co_names:
        if name != var and name not in _EXPR_NAMESPACE:
            raise CLIError(f"unknown name {name!r} in expression {text!r}")

    def fn(x):
        with np.errstate(all="ignore"):
            return eval(code, {"__builtins__": {}}, {**_EXPR_NAMESPACE, var: x})

    return fn


def _grid(args) -> np.ndarray:
    if args.n < 2:
        raise CLIError("--n must be at least 2")
    if not args.t_min < args.t_max:
        raise CLIError("--t-min must be smaller than --t-max")
    if args.spacing == "log":
        if args.t_min <= 0:
            raise CLIError("log spacing needs --t-min > 0")
        return np.geomspace(args.t_min, args.t_max, args.n)
    return np.linspace(args.t_min, args.t_max, args.n)


def _padded(lo: float, hi: float, frac: float = 0.05) -> Interval:
    pad = frac * (hi - lo)
    return Interval(lo - pad, hi + pad)


def _run_canonical(args):
    grid = _grid(args)
    domain = Interval(args.t_min, args.t_max)
    # P lives on a padded interval so P' has room for its stencil at the ends
    P = ScalarFunction(_expression(args.P), _padded(args.t_min, args.t_max))
    Q = ScalarFunction(_expression(args.Q), domain)
    eq = canonical.LinearODE2(P, Q, domain)
    cf = canonical.canonical_transform(eq)
    rows = [[x, cf.J(x), cf.integrating_factor(x)] for x in grid]
    ok = True
    if args.omega is not None or args.Omega is not None:
        if args.omega is None or args.Omega is None:
            raise CLIError("--omega and --Omega must be given together")
        bounds = canonical.SturmBounds(args.omega, args.Omega)
        chi = canonical.solve_canonical(cf.J, args.chi0, args.dchi0)
        report = canonical.sturm_gap_check(cf.J, bounds, chi, domain)
        ok = report.passed(args.tol)
        verdict = "inconclusive" if report.inconclusive else ("pass" if ok else "fail")
        print(
            f"zero gaps: {len(report.details['gaps'])} measured, {verdict}",
            file=sys.stderr,
        )
    return ["x", "J", "factor"], rows, ok


def _run_ermakov(args):
    grid = _grid(args)
    pair = ermakov.ComplexPair(_complex(args.A, "--A"), _complex(args.B, "--B"))
    params = ermakov.EPParams(args.tau)
    sol = ermakov.pinney_closed_form(pair, params, _padded(args.t_min, args.t_max))
    u0 = sol.u(args.t_min)
    du0 = derivative(sol.u, args.t_min, 1, h=ermakov.FIRST_DERIVATIVE_STEP)
    numeric = ermakov.integrate_ep(params, u0, du0, Interval(args.t_min, args.t_max))
    rows, ok = [], True
    for x in grid:
        uc, un = sol.u(x), numeric(x)
        res = ermakov.second_order_residual(sol.u, params, x)
        ok &= abs(res) < args.tol and abs(un - uc) < args.tol * abs(uc)
        rows.append([x, uc, un, res])
    return ["t", "u_closed", "u_numeric", "residual_2nd_order"], rows, ok


def _run_kasner(args):
    rows = []
    for exps in kasner.make_exponents(args.p1):
        rows.append([*exps.as_tuple(), exps.sum_residual, exps.sphere_residual])
    ok = all(abs(r[3]) < args.tol and abs(r[4]) < args.tol for r in rows)
    return ["p1", "p2", "p3", "sum_residual", "sphere_residual"], rows, ok


def _parametrix_params(args) -> parametrix.ParametrixParams:
    return parametrix.ParametrixParams(args.kappa, args.sigma, args.T, args.phi_T)


def _fill_time_defaults(args):
    if args.t_min is None:
        args.t_min = args.T
    if args.t_max is None:
        args.t_max = 20 * args.T
    if args.t_min <= 0:
        raise CLIError("--t-min must be positive")


def _run_parametrix(args):
    params = _parametrix_params(args)
    grid = _grid(args)
    domain = Interval(0.5 * args.t_min, 2 * args.t_max)
    alpha = parametrix.amplitude(params, domain)
    phi = parametrix.phase(params, domain)
    beta = parametrix.beta_closed_form(params, domain)
    psi = parametrix.psi_kasner(params, domain)
    rows = [
        [t, alpha(t), phi(t), beta.beta1(t), beta.beta2(t), psi.comp0(t)] for t in grid
    ]
    return ["t", "alpha", "phi", "beta1", "beta2", "psi0"], rows, True


def _run_verify(args):
    params = _parametrix_params(args)
    grid = _grid(args)
    overrides = {}
    domain = Interval(0.5 * args.t_min, 2 * args.t_max)
    k = params.kappa
    if args.corrupt == "psi":
        overrides["psi"] = kasner.TimeOneForm(ScalarFunction(lambda t: k / t**2, domain))
    elif args.corrupt == "alpha":
        overrides["alpha"] = ScalarFunction.constant(1.0, domain)
    reports = parametrix.verify_recipe(params, grid, **overrides)
    rows = [[r.tag, r.max_abs, r.rms] for r in reports]
    ok = all(r.passed(args.tol) for r in reports)
    return ["equation", "max_abs", "rms"], rows, ok


def _complex(text: str, flag: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise CLIError(f"{flag}: cannot parse {text!r} as a complex number") from None


_RUNNERS = {
    "canonical": _run_canonical,
    "ermakov": _run_ermakov,
    "kasner": _run_kasner,
    "parametrix": _run_parametrix,
    "verify": _run_verify,
}


def _fmt(value):
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def _json_number(value):
    if isinstance(value, str):
        return value
    value = float(value)
    if not np.isfinite(value):
        return str(value)
    return float(format(value, ".17g"))


def render(columns, rows, fmt: str, config: dict) -> str:
    if fmt == "json":
        payload = {
            "config": config,
            "columns": list(columns),
            "rows": [[_json_number(v) for v in row] for row in rows],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _config_echo(args) -> dict:
    grid_keys = ("t_min", "t_max", "n", "spacing")
    skip = {"subcommand", "output", "format", *grid_keys}
    return {
        "subcommand": args.subcommand,
        "parameters": {k: v for k, v in sorted(vars(args).items()) if k not in skip},
        "grid": {k: getattr(args, k, None) for k in grid_keys if hasattr(args, k)},
        "output": {"path": args.output, "format": args.format},
    }


def _add_grid(p, t_min=None, t_max=None, n=50, spacing="linear"):
    p.add_argument("--t-min", type=float, default=t_min, help="first grid point")
    p.add_argument("--t-max", type=float, default=t_max, help="last grid point")
    p.add_argument("--n", type=int, default=n, help="number of grid points")
    p.add_argument("--spacing", choices=("linear", "log"), default=spacing)


def _add_parametrix_params(p):
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0, help="reference time")
    p.add_argument("--phi-T", dest="phi_T", type=float, default=0.0, help="phase at T")
    _add_grid(p)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="residual threshold")

    parser = argparse.ArgumentParser(prog="epwave", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("canonical", parents=[common], help="potential J and integrating factor")
    p.add_argument("--P", required=True, help="coefficient of u' as an expression in x")
    p.add_argument("--Q", required=True, help="coefficient of u as an expression in x")
    p.add_argument("--omega", type=float, help="lower frequency bound for the zero-gap check")
    p.add_argument("--Omega", type=float, help="upper frequency bound for the zero-gap check")
    p.add_argument("--chi0", type=float, default=1.0)
    p.add_argument("--dchi0", type=float, default=0.0)
    _add_grid(p, t_min=1.0, t_max=10.0, n=10)

    p = sub.add_parser("ermakov", parents=[common], help="closed form vs numerical Pinney solution")
    p.add_argument("--A", default="1", help="complex constant, e.g. 1+2j")
    p.add_argument("--B", default="1j", help="complex constant, e.g. 1j")
    p.add_argument("--tau", type=float, default=1.0)
    _add_grid(p, t_min=0.0, t_max=2.0, n=21)

    p = sub.add_parser("kasner", parents=[common], help="exponents completing a given p1")
    p.add_argument("--p1", type=float, required=True)

    p = sub.add_parser("parametrix", parents=[common], help="amplitude, phase and auxiliary forms")
    _add_parametrix_params(p)

    p = sub.add_parser("verify", parents=[common], help="residuals of the defining relations")
    _add_parametrix_params(p)
    p.add_argument(
        "--corrupt",
        choices=("none", "psi", "alpha"),
        default="none",
        help="negative control: swap psi0 for kappa/t^2 or alpha for 1",
    )
    return parser


def run(args) -> int:
    if args.subcommand in ("parametrix", "verify"):
        _fill_time_defaults(args)
    columns, rows, ok = _RUNNERS[args.subcommand](args)
    text = render(columns, rows, args.format, _config_echo(args))
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)
    return EXIT_OK if ok else EXIT_RESIDUAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (ValueError, DomainError, IntegrationError, QuadratureError) as exc:
        print(f"epwave {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"epwave {args.subcommand}: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
