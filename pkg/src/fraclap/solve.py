"""Extended Dirichlet problem and fractional obstacle problem.

Dirichlet: find u with L_h u = f at nodes |x| < a and u = g elsewhere. The
unknowns are the interior values; the exterior enters the right-hand side
through the same (I) + (II) - (III) splitting used by
:func:`fraclap.operator.apply_full`. The interior matrix is symmetric
Toeplitz and strictly diagonally dominant.

Obstacle: iterate u <- u - dt * min(u - phi, L_h u) from u = phi.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg

from .kernel import Kernel, KernelParams, Order, make_kernel, sum_partial
from .operator import (
    AlgebraicTail,
    DirichletTable,
    Grid,
    GridFn,
    ZeroFarField,
    apply_full,
    term_II,
)

__all__ = [
    "NumericalFailure",
    "DirichletProblem",
    "DirichletSolution",
    "ObstacleProblem",
    "ObstacleSolution",
    "dirichlet_kernel",
    "solve_dirichlet",
    "solve_obstacle",
    "obstacle_kernel",
    "truncation_error",
]

log = logging.getLogger(__name__)

Func = Callable[[np.ndarray], np.ndarray]


class NumericalFailure(RuntimeError):
    """Singular system or an iteration that failed to converge."""


def _reach(order: Order, span: int) -> int:
    # Smallest admissible truncation index covering `span` grid cells.
    m = max(span, 3)
    if order is Order.QUAD and m % 2 == 0:
        m += 1
    return m


@dataclass
class DirichletProblem:
    """L_h u = f on |x| < a, u = g on |x| >= a.

    ``f`` is a callable or an array over the interior nodes. ``g`` is a
    callable or ``None`` for g = 0. When ``g_beta`` is set, g is modelled
    beyond the sampled exterior by an algebraic tail |x|^{-g_beta}.
    """

    alpha: float
    h: float
    f: Union[Func, np.ndarray]
    a: float = 1.0
    g: Optional[Func] = None
    g_beta: Optional[float] = None
    order: Order = Order.QUAD
    L_W: Optional[float] = None  # exterior sampling reach, default 2a
    method: str = "direct"
    tol: float = 1e-12

    def __post_init__(self):
        self.order = Order.parse(self.order)
        if self.method not in ("direct", "jacobi"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def grid(self) -> Grid:
        return Grid(self.a, self.h)


@dataclass
class DirichletSolution:
    u: GridFn  # on [-a, a]; endpoints carry g(+-a)
    interior: np.ndarray  # boolean mask of unknowns
    residual: float
    iterations: int
    diag_margin: float
    kernel: Kernel = field(repr=False)


def dirichlet_kernel(p: DirichletProblem) -> Kernel:
    span = int(round((2.0 * p.a if p.L_W is None else p.L_W) / p.h))
    return make_kernel(KernelParams(p.alpha, p.h, p.order, _reach(p.order, span)))


def _exterior_model(p: DirichletProblem, kernel: Kernel):
    if p.g is None:
        return ZeroFarField()
    M, h, a = kernel.M, kernel.h, p.a
    left_x = -a - h * np.arange(M, 0, -1)
    right_x = a + h * np.arange(1, M + 1)
    tail = ZeroFarField()
    if p.g_beta is not None:
        anchor = a + M * h
        tail = AlgebraicTail(
            p.g_beta,
            u_left=float(p.g(np.array([-anchor]))[0]),
            u_right=float(p.g(np.array([anchor]))[0]),
            anchor=anchor,
        )
    return DirichletTable(np.asarray(p.g(left_x), float), np.asarray(p.g(right_x), float), tail)


def _assemble(kernel: Kernel, n_int: int) -> np.ndarray:
    col = np.empty(n_int)
    col[0] = kernel.total_sum
    col[1:] = -kernel.w[: n_int - 1]
    return scipy.linalg.toeplitz(col)


def _jacobi(A: np.ndarray, b: np.ndarray, tol: float, max_iter: int = 100_000) -> tuple[np.ndarray, int]:
    d = np.diag(A)
    u = b / d
    scale = max(np.abs(b).max(), 1e-300)
    for it in range(1, max_iter + 1):
        r = b - A @ u
        u = u + r / d
        if np.abs(r).max() <= tol * scale:
            return u, it
    raise NumericalFailure(f"Jacobi iteration did not converge in {max_iter} steps")


def solve_dirichlet(p: DirichletProblem) -> DirichletSolution:
    grid = p.grid
    kernel = dirichlet_kernel(p)
    x = grid.x
    interior = np.abs(x) < p.a - 1e-12 * p.a
    n_int = int(interior.sum())

    # Exterior-only state: g on |x| >= a, zero on the unknowns.
    exterior_vals = np.zeros(grid.N)
    if p.g is not None:
        exterior_vals[~interior] = np.asarray(p.g(x[~interior]), float)
    ff = _exterior_model(p, kernel)
    ext_part = apply_full(kernel, GridFn(grid, exterior_vals), ff, fast=True).values[interior]

    f = np.asarray(p.f(x[interior]) if callable(p.f) else p.f, dtype=float)
    if f.shape != (n_int,):
        raise ValueError(f"f must have {n_int} interior values")
    b = f - ext_part

    A = _assemble(kernel, n_int)
    # Diagonal must equal the truncated stencil mass plus the analytic tail.
    diag_check = sum_partial(kernel) + float(term_II(kernel, 1.0))
    if not np.isclose(diag_check, kernel.total_sum, rtol=1e-10):
        raise NumericalFailure("closed-form weight sum disagrees with truncated sum + tail")
    margin = float(np.min(2.0 * np.diag(A) - np.abs(A).sum(axis=1)))
    if not margin > 0:
        raise NumericalFailure(f"matrix not strictly diagonally dominant (margin {margin})")

    if p.method == "direct":
        u_int = scipy.linalg.solve(A, b, assume_a="pos")
        iterations = 1
    else:
        u_int, iterations = _jacobi(A, b, p.tol)
    residual = float(np.abs(A @ u_int - b).max())
    if residual > 1e-10 * max(np.abs(b).max(), 1e-300):
        raise NumericalFailure(f"linear solve residual {residual:.3e} too large")

    values = exterior_vals.copy()
    values[interior] = u_int
    return DirichletSolution(GridFn(grid, values), interior, residual, iterations, margin, kernel)


def truncation_error(
    u_exact: Func,
    f_exact: Func,
    p: DirichletProblem,
) -> np.ndarray:
    """r_i = f(x_i) - (L_h u_exact)_i on the interior nodes of ``p``.

    L_h is the exact discrete operator the Dirichlet solver inverts, with
    the exterior taken from ``p.g``.
    """
    grid = p.grid
    kernel = dirichlet_kernel(p)
    x = grid.x
    interior = np.abs(x) < p.a - 1e-12 * p.a
    ff = _exterior_model(p, kernel)
    Lu = apply_full(kernel, GridFn(grid, np.asarray(u_exact(x), float)), ff, fast=True).values
    return np.asarray(f_exact(x[interior]), float) - Lu[interior]


# --- obstacle ------------------------------------------------------------


@dataclass
class ObstacleProblem:
    """min(u - phi, L_h u) = 0 on the grid [-L, L].

    ``dt`` defaults to 0.5 / total_sum, inside the monotonicity bound
    dt <= 1 / total_sum. With ``tail_beta`` set, u is continued beyond
    [-L, L] by an algebraic tail instead of zero.
    """

    alpha: float
    L: float
    h: float
    phi: Union[Func, GridFn]
    order: Order = Order.QUAD
    dt: Optional[float] = None
    tol: float = 1e-10
    max_iter: int = 1_000_000
    tail_beta: Optional[float] = None
    L_W: Optional[float] = None

    def __post_init__(self):
        self.order = Order.parse(self.order)

    @property
    def grid(self) -> Grid:
        return Grid(self.L, self.h)


@dataclass
class ObstacleSolution:
    u: GridFn
    phi: GridFn
    Lu: GridFn
    iterations: int
    dt: float
    step_norm: float
    complementarity: float
    contact: np.ndarray
    monotone: bool
    kernel: Kernel = field(repr=False)


def obstacle_kernel(p: ObstacleProblem) -> Kernel:
    span = int(round((2.0 * p.L if p.L_W is None else p.L_W) / p.h))
    return make_kernel(KernelParams(p.alpha, p.h, p.order, _reach(p.order, span)))


def solve_obstacle(p: ObstacleProblem, u0: Optional[np.ndarray] = None) -> ObstacleSolution:
    grid = p.grid
    kernel = obstacle_kernel(p)
    dt = 0.5 / kernel.total_sum if p.dt is None else float(p.dt)
    if dt * kernel.total_sum > 1.0 + 1e-12 or dt > 1.0:
        raise ValueError(
            f"dt = {dt:.4g} breaks monotonicity; need dt <= min(1, 1/total_sum) = "
            f"{min(1.0, 1.0 / kernel.total_sum):.4g}"
        )
    ff = ZeroFarField() if p.tail_beta is None else AlgebraicTail(p.tail_beta)
    phi = np.asarray(p.phi.values if isinstance(p.phi, GridFn) else p.phi(grid.x), dtype=float)
    if phi.shape != (grid.N,) or not np.all(np.isfinite(phi)):
        raise ValueError("obstacle must be finite on every grid node")
    u = phi.copy() if u0 is None else np.asarray(u0, float).copy()

    monotone = True
    step = np.inf
    for it in range(1, p.max_iter + 1):
        Lu = apply_full(kernel, GridFn(grid, u), ff, fast=True).values
        delta = -dt * np.minimum(u - phi, Lu)
        u = u + delta
        # roundoff in the FFT path can produce tiny negative steps
        if delta.min() < -1e-12 * max(1.0, np.abs(u).max()):
            monotone = False
        step = float(np.abs(delta).max())
        if step <= p.tol * dt:
            break
    else:
        raise NumericalFailure(
            f"obstacle iteration not converged after {p.max_iter} steps "
            f"(last step {step:.3e}, target {p.tol * dt:.3e})"
        )
    Lu = apply_full(kernel, GridFn(grid, u), ff, fast=True).values
    comp = float(np.abs(np.minimum(u - phi, Lu)).max())
    contact = (u - phi) <= np.maximum(Lu, 0.0)
    log.debug("obstacle converged in %d iterations, complementarity %.3e", it, comp)
    return ObstacleSolution(
        u=GridFn(grid, u),
        phi=GridFn(grid, phi),
        Lu=GridFn(grid, Lu),
        iterations=it,
        dt=dt,
        step_norm=step,
        complementarity=comp,
        contact=contact,
        monotone=monotone,
        kernel=kernel,
    )
