"""Command-line front end.

Subcommands::

    frkc gen          build a coefficient table for M = 1 .. M_max
    frkc solve        adaptive FRKC2 run, per-step CSV
    frkc bench        steps and error against tolerance, CSV
    frkc domain       |R(x + iy)| = 1 contour of one scheme, CSV
    frkc convergence  fixed-step error against T for FRKC2 or FRKC4, CSV

Every CSV is assembled in memory and written only once the command has
succeeded, so a failed run leaves no partial file behind.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .composition import build_frkc4, frkc4_step
from .integrator import (
    IntegrationConfig,
    SchemeTable,
    StepFailure,
    estimate_spectral_radius,
    frkc2_step,
    integrate,
    integrate_fixed,
)
from .polynomial import ConstructionError
from .problems import PROBLEMS, get_problem
from .scheme import DEFAULT_NU0, MAX_INDEX, build_scheme, read_tables, write_table


class CLIError(Exception):
    pass


@dataclass
class RunReport:
    problem: str
    tol: float
    steps_accepted: int
    steps_rejected: int
    rhs_evaluations: int
    wall_time: float
    error: Optional[float] = None

    def footer(self) -> str:
        lines = [f"# {k}: {v}" for k, v in vars(self).items() if v is not None]
        return "\n".join(lines) + "\n"


def _write(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _rms(x) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def _table(args) -> SchemeTable:
    if args.table:
        try:
            schemes = read_tables(args.table)
        except OSError as exc:
            raise CLIError(f"cannot read table {args.table}: {exc}") from exc
        if any(s.order != 2 for s in schemes):
            raise CLIError(f"{args.table} is not a second-order table")
        return SchemeTable(schemes=schemes, nu0=args.nu0)
    return SchemeTable(M_max=args.M_max, nu0=args.nu0)


def _problem(args):
    try:
        return get_problem(args.problem, args.n)
    except KeyError as exc:
        raise CLIError(exc.args[0]) from None


def cmd_gen(args) -> int:
    if not 1 <= args.M_max <= MAX_INDEX:
        raise CLIError(f"--M-max must lie in [1, {MAX_INDEX}]")
    schemes = []
    for M in range(1, args.M_max + 1):
        try:
            sc = build_scheme(args.N, M, args.nu0)
        except ConstructionError as exc:
            raise CLIError(f"building M={M} failed: {exc}") from exc
        schemes.append(sc)
        print(f"M={M:4d}  beta_bar={sc.beta_bar:.10g}  Q={sc.Q_realized:.6g}  n={sc.n_reduction}")
    buf = io.StringIO()
    write_table(schemes, buf)
    _write(args.out, buf.getvalue())
    return 0


def _run(problem, tol, t_end, table, nu0):
    config = IntegrationConfig(tol=tol, nu0=nu0, M_max=len(table))
    return integrate(problem.system, 0.0, t_end, problem.w0, config=config, table=table)


def cmd_solve(args) -> int:
    problem = _problem(args)
    table = _table(args)
    t_end = args.t_end if args.t_end is not None else problem.t_end
    start = time.perf_counter()
    w, stats = _run(problem, args.tol, t_end, table, args.nu0)
    wall = time.perf_counter() - start
    error = _rms(w - problem.exact(t_end)) if problem.exact is not None else None
    report = RunReport(problem.name, args.tol, stats.steps_accepted, stats.steps_rejected,
                       stats.rhs_evaluations, round(wall, 3), error)
    rows = ["t,T,err,M,accepted"]
    rows += [f"{t:.17g},{T:.17g},{err:.6g},{M},{int(ok)}" for t, T, err, M, ok in stats.history]
    _write(args.out, "\n".join(rows) + "\n" + report.footer())
    return 0


def cmd_bench(args) -> int:
    problem = _problem(args)
    table = _table(args)
    t_end = args.t_end if args.t_end is not None else problem.t_end
    tols = sorted(args.tol, reverse=True)
    if problem.exact is not None:
        reference, kind = problem.exact(t_end), "exact semi-discrete solution"
    else:
        ref_tol = min(tols) / 100.0
        reference, _ = _run(problem, ref_tol, t_end, table, args.nu0)
        kind = f"self-reference at tol={ref_tol:g}"
    rows = ["tol,steps,rhs_evals,error"]
    for tol in tols:
        w, stats = _run(problem, tol, t_end, table, args.nu0)
        rows.append(f"{tol:g},{stats.steps_accepted},{stats.rhs_evaluations},{_rms(w - reference):.6e}")
    rows.append(f"# problem: {problem.name}")
    rows.append(f"# reference: {kind}")
    _write(args.out, "\n".join(rows) + "\n")
    return 0


def stability_contour(R_log_abs, beta_bar: float, nx: int = 801, ny: int = 241):
    """Points on ``log|R| = 0`` over ``[-1.1, 0.05] x [-0.15, 0.15]`` (units of ``beta_bar``)."""
    from skimage.measure import find_contours

    x = np.linspace(-1.1 * beta_bar, 0.05 * beta_bar, nx)
    y = np.linspace(-0.15 * beta_bar, 0.15 * beta_bar, ny)
    Z = x[None, :] + 1j * y[:, None]
    field = R_log_abs(Z)
    points = []
    for contour in find_contours(field, 0.0):
        rows, cols = contour[:, 0], contour[:, 1]
        points.append(np.column_stack((np.interp(cols, np.arange(nx), x), np.interp(rows, np.arange(ny), y))))
    return np.concatenate(points) if points else np.zeros((0, 2))


def cmd_domain(args) -> int:
    sc = build_scheme(args.N, args.M, args.nu0)
    a = sc.a

    def log_abs(Z):
        return np.log(np.abs(1.0 + np.multiply.outer(Z, a))).sum(axis=-1)

    pts = stability_contour(log_abs, sc.beta_bar)
    rows = ["x,y"] + [f"{x:.10g},{y:.10g}" for x, y in pts]
    rows.append(f"# N={args.N} M={args.M} nu0={args.nu0} beta_bar={sc.beta_bar:.17g}")
    _write(args.out, "\n".join(rows) + "\n")
    return 0


def fitted_slope(T, err) -> float:
    """Least-squares slope of ``log err`` against ``log T``."""
    return float(np.polyfit(np.log(T), np.log(err), 1)[0])


def cmd_convergence(args) -> int:
    problem = _problem(args)
    if problem.exact is None:
        raise CLIError(f"problem {problem.name!r} has no exact solution for convergence studies")
    if not args.fixed_step:
        raise CLIError("--fixed-step needs at least one step size")
    t_end = args.t_end if args.t_end is not None else problem.t_end
    if args.N == 2:
        sc = build_scheme(2, args.M, args.nu0)
        beta_bar = sc.beta_bar

        def step(rhs, w, t, T):
            return frkc2_step(rhs, w, t, T, sc)[0]
    elif args.N == 4:
        sc4 = build_frkc4(args.M, args.nu0)
        beta_bar = sc4.beta_bar

        def step(rhs, w, t, T):
            return frkc4_step(rhs, w, t, T, sc4.prefix, sc4.finishing)
    else:
        raise CLIError("--N must be 2 or 4 for convergence studies")
    rho = estimate_spectral_radius(problem.system, problem.w0, 0.0)
    exact = problem.exact(t_end)
    rows, fit_T, fit_err = ["T,error,flag"], [], []
    for T in sorted(args.fixed_step, reverse=True):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                w = integrate_fixed(step, problem.system.rhs, 0.0, t_end, problem.w0, T)
            err = float(np.max(np.abs(w - exact)))
        except StepFailure:
            err = math.inf
        except ValueError as exc:
            raise CLIError(str(exc)) from exc
        stable = math.isfinite(err) and T * rho <= beta_bar
        rows.append(f"{T:.10g},{err:.6e},{'ok' if stable else 'unstable'}")
        if stable and err > 0:
            fit_T.append(T)
            fit_err.append(err)
    slope = fitted_slope(fit_T, fit_err) if len(fit_T) >= 2 else math.nan
    rows.append(f"# problem: {problem.name} N={args.N} M={args.M}")
    rows.append(f"# slope: {slope:.4f}")
    _write(args.out, "\n".join(rows) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frkc", description="Factorized Runge-Kutta-Chebyshev integrators")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--nu0", type=float, default=DEFAULT_NU0, help="damping strength (default %(default)s)")
        p.add_argument("--out", default=None, help="output path (default: standard output)")

    def run_opts(p):
        p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
        p.add_argument("--n", type=int, default=None, help="grid points per axis")
        p.add_argument("--t-end", type=float, default=None)
        p.add_argument("--table", default=None, help="coefficient table from 'frkc gen' (second order)")
        p.add_argument("--M-max", type=int, default=64, help="largest M when no table is given")

    p = sub.add_parser("gen", help="generate a coefficient table")
    common(p)
    p.add_argument("--M-max", type=int, required=True)
    p.add_argument("--N", type=int, default=2, choices=(1, 2, 4))
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="adaptive FRKC2 run")
    common(p)
    run_opts(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="work against tolerance")
    common(p)
    run_opts(p)
    p.add_argument("--tol", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("domain", help="stability-domain boundary")
    common(p)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--N", type=int, default=2, choices=(1, 2, 4))
    p.set_defaults(func=cmd_domain)

    p = sub.add_parser("convergence", help="fixed-step order study")
    common(p)
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--M", type=int, default=4)
    p.add_argument("--N", type=int, default=2, choices=(2, 4))
    p.add_argument("--fixed-step", type=float, nargs="+", required=True, metavar="T")
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CLIError, ConstructionError, ValueError, RuntimeError, OSError) as exc:
        print(f"frkc {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
