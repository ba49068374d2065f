"""Command-line entry point: ``fraclap <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 property failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .exact import catalog, getoor_pair, obstacle_exact
from .harness import (
    ExperimentSpec,
    InsufficientData,
    run_accuracy,
    run_dirichlet_convergence,
    run_obstacle_convergence,
    run_property_suite,
    write_csv,
)
from .kernel import KernelParams, Order, make_kernel
from .operator import AlgebraicTail, DirichletTable, Grid, ZeroFarField, apply_full
from .solve import DirichletProblem, NumericalFailure, ObstacleProblem, solve_dirichlet, solve_obstacle
from .special import ConvergenceError, PoleError

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_PROPERTY = 0, 1, 2, 3

log = logging.getLogger("fraclap")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _strs(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment, keys use dashes or underscores."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _add_globals(parser, defaults: bool) -> None:
    # Subcommands repeat the global flags with suppressed defaults, so a flag
    # given before the subcommand is not reset by the subparser.
    def d(value):
        return value if defaults else argparse.SUPPRESS

    parser.add_argument("--out-dir", default=d("."), help="directory for output files")
    parser.add_argument("--threads", type=int, default=d(1))
    parser.add_argument("--seed", type=int, default=d(0))
    parser.add_argument("--config", default=d(None), help="key=value file; command-line flags win")
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fraclap", description="Discrete fractional Laplacian toolkit")
    _add_globals(p, defaults=True)
    common = _Parser(add_help=False)
    _add_globals(common, defaults=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    w = sub.add_parser("weights", parents=[common], help="write the weights w_1..w_M")
    w.add_argument("--alpha", type=float, required=True)
    w.add_argument("--h", type=float, default=1.0)
    w.add_argument("--order", choices=["tent", "quad"], default="quad")
    w.add_argument("--M", type=int, default=101)
    w.add_argument("--out", default="weights.csv")

    a = sub.add_parser("apply", parents=[common], help="apply the operator to a catalog function")
    a.add_argument("--alpha", type=float, required=True)
    a.add_argument("--h", type=float, required=True)
    a.add_argument("--L", type=float, required=True)
    a.add_argument("--order", choices=["tent", "quad"], default="quad")
    a.add_argument("--function", choices=["gaussian", "algebraic", "c0", "c1", "getoor"], default="gaussian")
    a.add_argument("--farfield", choices=["zero", "algebraic", "table"], default="zero")
    a.add_argument("--beta", type=float, help="tail exponent; defaults to the pair's own")
    a.add_argument("--out", default="apply.csv")

    d = sub.add_parser("dirichlet", parents=[common], help="solve the extended Dirichlet problem")
    d.add_argument("--alpha", type=float, required=True)
    d.add_argument("--h", type=float, required=True)
    d.add_argument("--a", type=float, default=1.0)
    d.add_argument("--order", choices=["tent", "quad"], default="quad")
    d.add_argument("--f", default="one", help="'one' or a CSV with columns x,f")
    d.add_argument("--g", default="zero", help="'zero' or a CSV with columns x,g covering the reach")
    d.add_argument("--method", choices=["direct", "jacobi"], default="direct")
    d.add_argument("--out", default="dirichlet.csv")

    o = sub.add_parser("obstacle", parents=[common], help="solve the catalog obstacle problem")
    o.add_argument("--alpha", type=float, required=True)
    o.add_argument("--L", type=float, required=True)
    o.add_argument("--h", type=float, required=True)
    o.add_argument("--order", choices=["tent", "quad"], default="quad")
    o.add_argument("--dt", type=float)
    o.add_argument("--tol", type=float, default=1e-10)
    o.add_argument("--max-iter", type=int, default=1_000_000)
    o.add_argument("--farfield", choices=["zero", "algebraic"], default="zero")
    o.add_argument("--out", default="obstacle.csv")

    c = sub.add_parser("converge", parents=[common], help="run a convergence sweep")
    c.add_argument("--experiment", choices=["accuracy", "dirichlet", "obstacle"], default="accuracy")
    c.add_argument("--function", default="gaussian")
    c.add_argument("--alphas", type=_floats, default=(0.8,))
    c.add_argument("--hs", type=_floats, default=(0.4, 0.2, 0.1, 0.05, 0.025))
    c.add_argument("--Ls", type=_floats, default=(10.0,))
    c.add_argument("--methods", type=_strs, default=("quad",))
    c.add_argument("--farfield", choices=["zero", "algebraic"], default="zero")
    c.add_argument("--window", type=float, default=0.5)
    c.add_argument("--dt-factor", type=float)
    c.add_argument("--name", default="convergence")

    sub.add_parser("props", parents=[common], help="run the property suite")
    return p


def _config_tokens(config: dict[str, str], argv: list[str]) -> list[str]:
    tokens = []
    for key, value in config.items():
        flag = "--" + key.replace("_", "-")
        if any(a == flag or a.startswith(flag + "=") for a in argv) or key == "config":
            continue  # the command line wins
        if key == "verbose":
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(flag)
            continue
        tokens += [flag, value]
    return tokens


def _find_config(argv: list[str]) -> str | None:
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith("--config="):
            return a.split("=", 1)[1]
    return None


def parse_args(argv):
    """Parse ``argv``; entries of a --config file act as flags the command line overrides."""
    argv = list(argv)
    parser = build_parser()
    config = _find_config(argv)
    if config is not None:
        commands = [i for i, a in enumerate(argv) if a in COMMANDS]
        if commands:
            at = commands[0] + 1
            argv = argv[:at] + _config_tokens(read_config(config), argv) + argv[at:]
    return parser.parse_args(argv)


def _out(args, name) -> Path:
    path = Path(name)
    return path if path.is_absolute() else Path(args.out_dir) / path


def _read_table(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2:
        raise UsageError(f"{path}: need two columns")
    return data


def _lookup(table: np.ndarray, name: str):
    xs, vs = table[:, 0], table[:, 1]

    def fn(x):
        x = np.atleast_1d(np.asarray(x, float))
        idx = np.searchsorted(xs, x)
        idx = np.clip(idx, 0, len(xs) - 1)
        lo = np.clip(idx - 1, 0, len(xs) - 1)
        pick = np.where(np.abs(xs[lo] - x) < np.abs(xs[idx] - x), lo, idx)
        if np.any(np.abs(xs[pick] - x) > 1e-9 * max(1.0, np.abs(x).max())):
            raise UsageError(f"{name} table lacks node(s) near x = {x[np.abs(xs[pick] - x) > 1e-9][0]:g}")
        return vs[pick]

    return fn


def cmd_weights(args) -> int:
    k = make_kernel(KernelParams(args.alpha, args.h, Order.parse(args.order), args.M))
    j = np.arange(1, args.M + 1)
    path = write_csv(_out(args, args.out), ["j", "w", "w_stencil"], zip(j, k.w, k.taps()))
    print(f"total_sum = {k.total_sum:.16e}; wrote {path}")
    return EXIT_OK


def cmd_apply(args) -> int:
    pair = catalog(args.function, args.alpha)
    order = Order.parse(args.order)
    M = int(round(2 * args.L / args.h))
    M += order is Order.QUAD and M % 2 == 0
    kernel = make_kernel(KernelParams(args.alpha, args.h, order, M))
    grid = Grid(args.L, args.h)
    beta = args.beta if args.beta is not None else pair.beta
    if args.farfield == "zero":
        ff = ZeroFarField()
    elif beta is None:
        raise UsageError(f"--beta is required for {args.function} with far field {args.farfield}")
    elif args.farfield == "algebraic":
        ff = AlgebraicTail(beta)
    else:
        h, L = args.h, args.L
        left = pair.u(-L - h * np.arange(M, 0, -1))
        right = pair.u(L + h * np.arange(1, M + 1))
        ff = DirichletTable(np.asarray(left, float), np.asarray(right, float), AlgebraicTail(beta))
    u = grid.sample(pair.u)
    Lu = apply_full(kernel, u, ff, fast=True).values
    if pair.point_only:
        exact = np.full(grid.N, np.nan)
        exact[grid.center] = pair.Lu0
    else:
        exact = np.asarray(pair.Lu(grid.x), float)
    path = write_csv(
        _out(args, args.out),
        ["x", "u", "Lu_numeric", "Lu_exact", "abs_error"],
        zip(grid.x, u.values, Lu, exact, np.abs(Lu - exact)),
    )
    print(f"wrote {path}")
    return EXIT_OK


def cmd_dirichlet(args) -> int:
    grid = Grid(args.a, args.h)
    interior = np.abs(grid.x) < args.a * (1 - 1e-12)
    if args.f == "one":
        f = np.ones(int(interior.sum()))
    else:
        f = _lookup(_read_table(args.f), "f")(grid.x[interior])
    g = None if args.g == "zero" else _lookup(_read_table(args.g), "g")
    p = DirichletProblem(args.alpha, args.h, f, a=args.a, g=g, order=args.order, method=args.method)
    sol = solve_dirichlet(p)
    cols = [sol.u.x, sol.u.values]
    header = ["x", "u_numeric"]
    if args.f == "one" and args.g == "zero" and args.a == 1.0:
        header.append("u_exact")
        cols.append(getoor_pair(args.alpha).u(sol.u.x))
    path = write_csv(_out(args, args.out), header, zip(*cols))
    print(f"residual {sol.residual:.3e}; wrote {path}")
    return EXIT_OK


def cmd_obstacle(args) -> int:
    phi, u_exact = obstacle_exact(args.alpha)
    p = ObstacleProblem(
        args.alpha,
        args.L,
        args.h,
        phi,
        order=args.order,
        dt=args.dt,
        tol=args.tol,
        max_iter=args.max_iter,
        tail_beta=args.alpha if args.farfield == "algebraic" else None,
    )
    sol = solve_obstacle(p)
    x = sol.u.x
    path = write_csv(
        _out(args, args.out),
        ["x", "u_numeric", "u_exact", "phi", "coincidence_flag"],
        zip(x, sol.u.values, u_exact(x), sol.phi.values, sol.contact.astype(float)),
    )
    print(f"{sol.iterations} iterations, complementarity {sol.complementarity:.3e}; wrote {path}")
    return EXIT_OK


def cmd_converge(args) -> int:
    spec = ExperimentSpec(
        function=args.function,
        alphas=args.alphas,
        hs=args.hs,
        Ls=args.Ls,
        methods=args.methods,
        farfield=args.farfield,
        window=args.window,
        dt_factor=args.dt_factor,
        threads=args.threads,
    )
    runner = {
        "accuracy": run_accuracy,
        "dirichlet": run_dirichlet_convergence,
        "obstacle": run_obstacle_convergence,
    }[args.experiment]
    report = runner(spec)
    csv = report.to_csv(_out(args, f"{args.name}.csv"))
    report.to_gnuplot(_out(args, f"{args.name}.gp"), title=args.name)
    for key, fit in report.fits().items():
        label = f"{key[0]} alpha={key[1]:g} {key[2]} L={key[3]:g}"
        if fit is None:
            print(f"{label}: too few pre-saturation rows for a rate")
        else:
            flag = " (saturated)" if fit.saturated else ""
            print(f"{label}: rate {fit.rate:.3f} over {fit.n_used} rows{flag}")
    print(f"wrote {csv}")
    return EXIT_OK


def cmd_props(args) -> int:
    results = run_property_suite(seed=args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY


COMMANDS = {
    "weights": cmd_weights,
    "apply": cmd_apply,
    "dirichlet": cmd_dirichlet,
    "obstacle": cmd_obstacle,
    "converge": cmd_converge,
    "props": cmd_props,
}


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
    except (UsageError, OSError) as exc:
        print(f"fraclap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse: --help or a usage error
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except (NumericalFailure, ConvergenceError, PoleError, InsufficientData, np.linalg.LinAlgError) as exc:
        print(f"fraclap: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError, OSError) as exc:
        print(f"fraclap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
