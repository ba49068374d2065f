"""Convergence sweeps, rate fitting, the property suite and CSV output."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .exact import c0_pair, c1_pair, catalog, getoor_pair, obstacle_exact
from .kernel import KernelParams, Order, make_kernel, sum_partial, total_sum_closed_form
from .operator import (
    AlgebraicTail,
    Grid,
    GridFn,
    ZeroFarField,
    apply_cgm,
    apply_full,
)
from .solve import (
    DirichletProblem,
    ObstacleProblem,
    obstacle_kernel,
    solve_dirichlet,
    solve_obstacle,
    truncation_error,
)
from .special import gamma_fn, hyp2f1

__all__ = [
    "InsufficientData",
    "SATURATION_RATIO",
    "Row",
    "RateFit",
    "ConvergenceReport",
    "ExperimentSpec",
    "fit_rate",
    "saturated_tail",
    "run_accuracy",
    "run_dirichlet_convergence",
    "run_obstacle_convergence",
    "PropertyResult",
    "run_property_suite",
    "write_csv",
    "format_number",
]

SATURATION_RATIO = 2.0**0.2  # error must drop by this much per halving of h


class InsufficientData(ValueError):
    """Fewer than three usable rows for a rate fit."""


def format_number(v: float) -> str:
    return f"{float(v):.16e}"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else format_number(v) for v in r))
    path.write_text("\n".join(lines) + "\n")
    return path


# --- rate fitting --------------------------------------------------------


def saturated_tail(hs: Sequence[float], errors: Sequence[float], ratio: float = SATURATION_RATIO) -> int:
    """Number of trailing rows whose error fails to drop by ``ratio`` per halving."""
    hs = np.asarray(hs, float)
    e = np.asarray(errors, float)
    n = 0
    for k in range(len(e) - 1, 0, -1):
        halvings = math.log2(hs[k - 1] / hs[k])
        if e[k] > 0 and e[k - 1] / e[k] >= ratio**halvings:
            break
        n += 1
    return n


@dataclass(frozen=True)
class RateFit:
    rate: float
    saturated: bool
    n_used: int
    n_saturated: int


def fit_rate(hs: Sequence[float], errors: Sequence[float], *, detect_saturation: bool = True) -> RateFit:
    """Least-squares slope of log(error) against log(h) over pre-saturation rows."""
    hs = np.asarray(hs, float)
    e = np.asarray(errors, float)
    if hs.shape != e.shape:
        raise ValueError("h and error lists differ in length")
    n_sat = saturated_tail(hs, e) if detect_saturation else 0
    use = len(e) - n_sat
    if use < 3:
        raise InsufficientData(f"rate fit needs at least 3 pre-saturation rows, have {use}")
    if np.any(e[:use] <= 0):
        raise InsufficientData("errors must be positive for a log-log fit")
    slope = np.polyfit(np.log(hs[:use]), np.log(e[:use]), 1)[0]
    return RateFit(float(slope), n_sat > 0, use, n_sat)


# --- reports -------------------------------------------------------------


@dataclass(frozen=True)
class Row:
    quantity: str
    alpha: float
    method: str
    L: float
    h: float
    error: float


@dataclass
class ConvergenceReport:
    rows: list[Row] = field(default_factory=list)
    window: Optional[float] = None  # fraction of L used for max-norm errors
    diagnostics: list[dict] = field(default_factory=list)

    def series(self) -> dict[tuple, tuple[np.ndarray, np.ndarray]]:
        out: dict[tuple, list] = {}
        for r in self.rows:
            out.setdefault((r.quantity, r.alpha, r.method, r.L), []).append((r.h, r.error))
        return {k: (np.array([a for a, _ in v]), np.array([b for _, b in v])) for k, v in out.items()}

    def fits(self) -> dict[tuple, Optional[RateFit]]:
        res = {}
        for key, (hs, es) in self.series().items():
            try:
                res[key] = fit_rate(hs, es)
            except InsufficientData:
                res[key] = None
        return res

    def fit(self, quantity: str = "Lu", alpha=None, method=None, L=None) -> RateFit:
        keys = [
            k
            for k in self.series()
            if k[0] == quantity
            and (alpha is None or math.isclose(k[1], alpha))
            and (method is None or k[2] == method)
            and (L is None or math.isclose(k[3], L))
        ]
        if len(keys) != 1:
            raise KeyError(f"selection matches {len(keys)} series")
        hs, es = self.series()[keys[0]]
        return fit_rate(hs, es)

    def to_csv(self, path) -> Path:
        window = "" if self.window is None else format_number(self.window)
        header = ["quantity", "alpha", "method", "L", "h", "error", "window"]
        body = [(r.quantity, r.alpha, r.method, r.L, r.h, r.error, window) for r in self.rows]
        return write_csv(path, header, body)

    def to_gnuplot(self, path, title: str = "convergence") -> Path:
        """Companion gnuplot script with inline data blocks, one per series."""
        path = Path(path)
        lines = [
            f'set title "{title}"',
            "set logscale xy",
            'set xlabel "h"',
            'set ylabel "error"',
            "set key left top",
        ]
        plots = []
        for n, (key, (hs, es)) in enumerate(self.series().items()):
            lines.append(f"$s{n} << EOD")
            lines += [f"{format_number(a)} {format_number(b)}" for a, b in zip(hs, es)]
            lines.append("EOD")
            label = f"{key[0]} alpha={key[1]:g} {key[2]} L={key[3]:g}"
            plots.append(f'$s{n} using 1:2 with linespoints title "{label}"')
        if plots:
            lines.append("plot " + ", \\\n     ".join(plots))
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
        return path


@dataclass
class ExperimentSpec:
    """One sweep: every (alpha, method, L, h) combination is a cell.

    ``methods`` entries are ``tent``, ``quad``, or ``cgm:<k>`` for the
    midpoint comparison scheme with core radius k*h. ``farfield`` is
    ``zero`` or ``algebraic``. ``norm`` is ``auto`` (point value at 0 for
    point-only pairs, max over |x| <= window*L otherwise), ``point0`` or
    ``max``.
    """

    function: str
    alphas: tuple[float, ...]
    hs: tuple[float, ...]
    Ls: tuple[float, ...] = (1.0,)
    methods: tuple[str, ...] = ("quad",)
    L_W_factor: float = 2.0
    farfield: str = "zero"
    norm: str = "auto"
    window: float = 0.5
    dt_factor: Optional[float] = None  # obstacle: dt = dt_factor * h^alpha
    threads: int = 1

    def __post_init__(self):
        self.alphas, self.hs, self.Ls, self.methods = (
            tuple(self.alphas),
            tuple(self.hs),
            tuple(self.Ls),
            tuple(self.methods),
        )
        if any(b >= a for a, b in zip(self.hs, self.hs[1:])):
            raise ValueError("h list must be strictly decreasing")
        if self.farfield not in ("zero", "algebraic"):
            raise ValueError(f"unknown far-field mode {self.farfield!r}")
        if self.norm not in ("auto", "point0", "max"):
            raise ValueError(f"unknown norm {self.norm!r}")
        for m in self.methods:
            _parse_method(m)

    def cells(self):
        for a in self.alphas:
            for m in self.methods:
                for L in self.Ls:
                    for h in self.hs:
                        yield a, m, L, h


def _parse_method(m: str) -> tuple[str, float]:
    if m in ("tent", "quad"):
        return m, 0.0
    if m.startswith("cgm:"):
        return "cgm", float(m[4:])
    raise ValueError(f"unknown method {m!r}; use tent, quad or cgm:<k>")


def _run_cells(spec: ExperimentSpec, fn):
    cells = list(spec.cells())
    if spec.threads > 1:
        with ThreadPoolExecutor(spec.threads) as ex:
            return list(ex.map(lambda c: fn(*c), cells))
    return [fn(*c) for c in cells]


def _truncation_index(order: Order, L_W: float, h: float) -> int:
    M = int(round(L_W / h))
    if order is Order.QUAD and M % 2 == 0:
        M += 1
    return M


def run_accuracy(spec: ExperimentSpec) -> ConvergenceReport:
    """Operator error against the exact fractional Laplacian of a catalog pair."""

    def cell(alpha, method, L, h):
        pair = catalog(spec.function, alpha)
        grid = Grid(L, h)
        kind, eps_factor = _parse_method(method)
        if kind == "cgm":
            Lu = apply_cgm(alpha, eps_factor * h, pair.u, grid, L_W=spec.L_W_factor * L).values
        else:
            order = Order.parse(kind)
            kernel = make_kernel(KernelParams(alpha, h, order, _truncation_index(order, spec.L_W_factor * L, h)))
            if spec.farfield == "algebraic":
                if pair.beta is None:
                    raise ValueError(f"{spec.function} has no algebraic tail exponent")
                ff = AlgebraicTail(pair.beta)
            else:
                ff = ZeroFarField()
            Lu = apply_full(kernel, grid.sample(pair.u), ff, fast=True).values
        norm = spec.norm
        if norm == "auto":
            norm = "point0" if pair.point_only else "max"
        if norm == "point0":
            exact0 = pair.Lu0 if pair.point_only else float(pair.Lu(np.array([0.0]))[0])
            err = abs(Lu[grid.center] - exact0)
        else:
            if pair.point_only:
                raise ValueError(f"{spec.function} has no closed-form Lu away from 0")
            mask = np.abs(grid.x) <= spec.window * L * (1 + 1e-12)
            err = float(np.abs(Lu[mask] - pair.Lu(grid.x[mask])).max())
        return Row("Lu", alpha, method, L, h, float(err))

    return ConvergenceReport(_run_cells(spec, cell), window=spec.window)


def run_dirichlet_convergence(spec: ExperimentSpec) -> ConvergenceReport:
    """Dirichlet solves on (-L, L) per cell; ``L`` plays the role of a.

    ``getoor``: f = 1, g = 0. ``c1``: f and g from the C1 pair, with an
    extra ``r`` series holding the truncation error. ``zero``: f = g = 0.
    Errors are maxima over every grid node.
    """
    if spec.function not in ("getoor", "c1", "zero"):
        raise ValueError(f"no Dirichlet experiment for {spec.function!r}")

    def cell(alpha, method, a, h):
        order = Order.parse(method)
        L_W = spec.L_W_factor * a
        if spec.function == "getoor":
            exact = getoor_pair(alpha).u
            p = DirichletProblem(alpha, h, lambda x: np.ones_like(x), a=a, order=order, L_W=L_W)
        elif spec.function == "zero":
            exact = lambda x: np.zeros_like(x)
            p = DirichletProblem(alpha, h, lambda x: np.zeros_like(x), a=a, order=order, L_W=L_W)
        else:
            pair = c1_pair(alpha)
            exact = pair.u
            p = DirichletProblem(alpha, h, pair.Lu, a=a, g=pair.u, g_beta=pair.beta, order=order, L_W=L_W)
        sol = solve_dirichlet(p)
        x = sol.u.x
        out = [Row("u", alpha, method, a, h, float(np.abs(sol.u.values - exact(x)).max()))]
        if spec.function == "c1":
            r = truncation_error(pair.u, pair.Lu, p)
            out.append(Row("r", alpha, method, a, h, float(np.abs(r).max())))
        return out

    rows = [r for group in _run_cells(spec, cell) for r in group]
    rows.sort(key=lambda r: (r.quantity != "u", r.quantity))  # stable: keeps cell order
    return ConvergenceReport(rows)


def run_obstacle_convergence(spec: ExperimentSpec) -> ConvergenceReport:
    """Obstacle problem with the catalog obstacle; series ``u`` and ``Lu``.

    ``Lu`` is compared against (1 - x^2)_+^{1 - alpha/2}. With
    ``farfield = 'algebraic'`` the solution is continued by |x|^{-alpha}.
    """

    def cell(alpha, method, L, h):
        phi, u_exact = obstacle_exact(alpha)
        f_exact = c0_pair(alpha).Lu
        dt = None if spec.dt_factor is None else spec.dt_factor * h**alpha
        p = ObstacleProblem(
            alpha,
            L,
            h,
            phi,
            order=Order.parse(method),
            dt=dt,
            tail_beta=alpha if spec.farfield == "algebraic" else None,
            L_W=spec.L_W_factor * L,
        )
        sol = solve_obstacle(p)
        x = sol.u.x
        rows = [
            Row("u", alpha, method, L, h, float(np.abs(sol.u.values - u_exact(x)).max())),
            Row("Lu", alpha, method, L, h, float(np.abs(sol.Lu.values - f_exact(x)).max())),
        ]
        diag = {
            "alpha": alpha,
            "method": method,
            "L": L,
            "h": h,
            "iterations": sol.iterations,
            "dt": sol.dt,
            "complementarity": sol.complementarity,
            "monotone": sol.monotone,
        }
        return rows, diag

    results = _run_cells(spec, cell)
    rows = [r for rs, _ in results for r in rs]
    rows.sort(key=lambda r: r.quantity != "u")
    return ConvergenceReport(rows, diagnostics=[d for _, d in results])


# --- property suite ------------------------------------------------------


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _prop_positivity() -> PropertyResult:
    bad = []
    for alpha in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0, 1.1, 1.5, 1.9, 1.99):
        for order in Order:
            k = make_kernel(KernelParams(alpha, 1.0, order, 1001))
            if not (np.all(k.w > 0) and k.w_boundary > 0):
                bad.append((alpha, order.name))
    return PropertyResult("weight positivity", not bad, f"failures: {bad}" if bad else "alpha lattice x orders, M=1001")


def _prop_supersolution(h: float = 0.01) -> PropertyResult:
    grid = Grid(1.0, h)
    inside = np.abs(grid.x) < 1.0 - 1e-12
    v = GridFn(grid, np.where(inside, 4.0 - grid.x**2, 0.0))
    worst = np.inf
    for alpha in (0.1, 0.5, 1.0, 1.5, 1.9):
        for order in Order:
            k = make_kernel(KernelParams(alpha, h, order, _truncation_index(order, 2.0, h)))
            worst = min(worst, float(apply_full(k, v, fast=True).values[inside].min()))
    return PropertyResult("supersolution", worst >= 1.0, f"min L_h v = {worst:.6g} at h = {h}")


def _prop_max_principle(rng: np.random.Generator, n: int = 100) -> PropertyResult:
    fails = 0
    for t in range(n):
        alpha = float(rng.choice([0.3, 0.8, 1.2, 1.7]))
        order = Order.TENT if t % 2 else Order.QUAD
        sign = -1.0 if t < n // 2 else 1.0
        grid = Grid(1.0, 0.05)
        f = sign * rng.random(int((np.abs(grid.x) < 1 - 1e-12).sum()))
        sol = solve_dirichlet(DirichletProblem(alpha, 0.05, f, order=order))
        if np.any(sign * sol.u.values < 0.0):
            fails += 1
    return PropertyResult("maximum principle", fails == 0, f"{fails} of {n} random sign-definite f violated")


def _prop_linearity(rng: np.random.Generator) -> PropertyResult:
    grid = Grid(2.0, 0.05)
    k = make_kernel(KernelParams(0.6, 0.05, Order.QUAD, 81))
    ff = AlgebraicTail(0.4)
    u, v = rng.standard_normal(grid.N), rng.standard_normal(grid.N)
    a, b = rng.standard_normal(2)
    lhs = apply_full(k, GridFn(grid, a * u + b * v), ff).values
    rhs = a * apply_full(k, GridFn(grid, u), ff).values + b * apply_full(k, GridFn(grid, v), ff).values
    err = float(np.abs(lhs - rhs).max() / np.abs(lhs).max())
    return PropertyResult("linearity of apply_full", err <= 1e-12, f"relative deviation {err:.2e}")


def _prop_fast_direct(rng: np.random.Generator) -> PropertyResult:
    worst = 0.0
    for alpha, order in ((0.4, Order.TENT), (1.3, Order.QUAD)):
        grid = Grid(3.0, 0.03)
        k = make_kernel(KernelParams(alpha, 0.03, order, _truncation_index(order, 6.0, 0.03)))
        u = GridFn(grid, rng.standard_normal(grid.N))
        d = apply_full(k, u, AlgebraicTail(0.5)).values
        f = apply_full(k, u, AlgebraicTail(0.5), fast=True).values
        worst = max(worst, float(np.abs(d - f).max() / np.abs(d).max()))
    return PropertyResult("fast vs direct convolution", worst <= 1e-10, f"relative deviation {worst:.2e}")


def _prop_special() -> PropertyResult:
    errs = []
    for x in (0.3, 1.7, 4.2, 9.5):
        errs.append(abs(gamma_fn(x + 1) / (x * gamma_fn(x)) - 1))
        errs.append(abs(gamma_fn(x) * gamma_fn(1 - x) * math.sin(math.pi * x) / math.pi - 1))
    errs.append(abs(gamma_fn(0.5) / math.sqrt(math.pi) - 1))
    for z in (-0.9, -0.3, 0.4, 0.8, 0.95):
        errs.append(abs(hyp2f1(1, 1, 2, z) * z / -math.log1p(-z) - 1))
        errs.append(abs(hyp2f1(0.3, 1.1, 1.1, z) * (1 - z) ** 0.3 - 1))
    a, b, c = 0.25, 0.6, 1.9
    for z in (-0.7, 0.3, 0.9):
        euler = (1 - z) ** (c - a - b) * hyp2f1(c - a, c - b, c, z)
        errs.append(abs(hyp2f1(a, b, c, z) / euler - 1))
    worst = max(errs)
    return PropertyResult("special function identities", worst <= 1e-12, f"max relative deviation {worst:.2e}")


def _prop_weight_sum() -> PropertyResult:
    worst = 0.0
    for alpha in (0.3, 0.5, 1.0, 1.5, 1.9):
        for order in Order:
            k = make_kernel(KernelParams(alpha, 0.1, order, 1001))
            partial = sum_partial(k)
            tail = 2.0 * k.c1a / (alpha * k.L_W**alpha)
            worst = max(worst, abs((partial + tail) / total_sum_closed_form(alpha, 0.1) - 1))
    return PropertyResult("weight sum identity", worst <= 1e-10, f"max relative gap {worst:.2e}")


def _prop_obstacle(rng: np.random.Generator) -> PropertyResult:
    alpha, h = 0.5, 0.1
    phi, _ = obstacle_exact(alpha)
    p = ObstacleProblem(alpha, 2.0, h, phi, tol=1e-8)
    kernel = obstacle_kernel(p)
    grid = p.grid
    ph = phi(grid.x)
    dt = 0.5 / kernel.total_sum

    def step(u):
        Lu = apply_full(kernel, GridFn(grid, u), fast=True).values
        return u - dt * np.minimum(u - ph, Lu)

    u = ph + rng.random(grid.N)
    v = u + rng.random(grid.N)
    ordered = bool(np.all(step(u) <= step(v) + 1e-13))
    sol = solve_obstacle(p)
    ok = ordered and sol.monotone and np.all(sol.u.values >= ph - p.tol)
    return PropertyResult(
        "obstacle monotonicity",
        bool(ok),
        f"order preserved={ordered}, nondecreasing iterates={sol.monotone}",
    )


def run_property_suite(seed: int = 0) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    return [
        _prop_positivity(),
        _prop_weight_sum(),
        _prop_supersolution(),
        _prop_max_principle(rng),
        _prop_linearity(rng),
        _prop_fast_direct(rng),
        _prop_special(),
        _prop_obstacle(rng),
    ]
