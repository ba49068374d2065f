"""Application of the discrete fractional Laplacian to grid functions.

For a node x_i in [-L, L] the operator is split as

    (I)   sum_{0 < |j| <= M} (u_i - u_{i-j}) w_j           truncated stencil
    (II)  u_i * int_{|y| > L_W} nu(y) dy                  analytic, exact
    (III) int_{|y| > L_W} u(x_i - y) nu(y) dy              far-field model

with L_W = M h and the result (I) + (II) - (III). Values of u outside
[-L, L] needed by (I), and the integrand of (III), come from a far-field
model: zero, an algebraic tail |y|^{-beta}, or tabulated exterior data.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.signal import fftconvolve

from .kernel import Kernel, sum_partial
from .special import hyp2f1

__all__ = [
    "Grid",
    "GridFn",
    "ZeroFarField",
    "AlgebraicTail",
    "DirichletTable",
    "FarFieldModel",
    "extended_values",
    "apply_truncated",
    "term_II",
    "term_III_algebraic",
    "apply_terms",
    "apply_full",
    "apply_full_fast",
    "apply_cgm",
    "estimate_beta",
]


@dataclass(frozen=True)
class Grid:
    """Uniform nodes x_i = -L + i h, i = 0..N-1, including both endpoints.

    L / h must be an integer so that x = 0 is a node.
    """

    L: float
    h: float
    N: int = field(init=False)

    def __post_init__(self):
        if not (self.L > 0 and self.h > 0):
            raise ValueError("grid needs L > 0 and h > 0")
        ratio = self.L / self.h
        n_half = round(ratio)
        if n_half < 1 or abs(ratio - n_half) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"L / h = {ratio} must be a positive integer")
        object.__setattr__(self, "N", 2 * n_half + 1)

    @property
    def x(self) -> np.ndarray:
        half = (self.N - 1) // 2
        return np.arange(-half, half + 1) * self.h

    @property
    def center(self) -> int:
        return (self.N - 1) // 2

    def sample(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFn":
        return GridFn(self, np.asarray(fn(self.x), dtype=float))


@dataclass(frozen=True, eq=False)
class GridFn:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x


@dataclass(frozen=True)
class ZeroFarField:
    """u vanishes outside [-L, L]."""


@dataclass(frozen=True)
class AlgebraicTail:
    """u(y) ~ u(+-L) (L/|y|)^beta outside [-L, L].

    Amplitudes left as ``None`` are read from the grid function's endpoint
    values each time the operator is applied.
    """

    beta: float
    u_left: Optional[float] = None
    u_right: Optional[float] = None
    anchor: Optional[float] = None  # defaults to the grid half-width L

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"tail exponent beta must be positive, got {self.beta}")


@dataclass(frozen=True, eq=False)
class DirichletTable:
    """Exterior samples at spacing h on [-L-L_W, -L) and (L, L+L_W].

    ``left`` is ordered by increasing x (x = -L - M h first), ``right`` by
    increasing x (x = L + h first). Beyond L_W the ``tail`` rule applies.
    """

    left: np.ndarray
    right: np.ndarray
    tail: Union[ZeroFarField, AlgebraicTail] = ZeroFarField()


FarFieldModel = Union[ZeroFarField, AlgebraicTail, DirichletTable]


def _check_compatible(kernel: Kernel, grid: Grid) -> None:
    if not math.isclose(kernel.h, grid.h, rel_tol=1e-12):
        raise ValueError(f"kernel spacing {kernel.h} differs from grid spacing {grid.h}")


def _tail_amplitudes(tail: AlgebraicTail, u: GridFn) -> tuple[float, float, float]:
    left = u.values[0] if tail.u_left is None else tail.u_left
    right = u.values[-1] if tail.u_right is None else tail.u_right
    anchor = u.grid.L if tail.anchor is None else tail.anchor
    return float(left), float(right), float(anchor)


def extended_values(kernel: Kernel, u: GridFn, ff: FarFieldModel) -> np.ndarray:
    """Samples of u on nodes -L - M h .. L + M h (length N + 2M)."""
    _check_compatible(kernel, u.grid)
    M, N = kernel.M, u.grid.N
    ext = np.zeros(N + 2 * M)
    ext[M : M + N] = u.values
    if isinstance(ff, ZeroFarField):
        return ext
    if isinstance(ff, DirichletTable):
        left = np.asarray(ff.left, dtype=float)
        right = np.asarray(ff.right, dtype=float)
        if left.shape != (M,) or right.shape != (M,):
            raise ValueError(f"Dirichlet table needs {M} samples per side")
        ext[:M] = left
        ext[M + N :] = right
        return ext
    if isinstance(ff, AlgebraicTail):
        ul, ur, anchor = _tail_amplitudes(ff, u)
        y = u.grid.L + kernel.h * np.arange(1, M + 1)
        decay = (anchor / y) ** ff.beta
        ext[M + N :] = ur * decay
        ext[:M] = ul * decay[::-1]
        return ext
    raise TypeError(f"unsupported far-field model {type(ff).__name__}")


def _truncated_direct(kernel: Kernel, ext: np.ndarray, N: int) -> np.ndarray:
    M = kernel.M
    taps = kernel.taps()
    c = ext[M : M + N]
    out = np.zeros(N)
    for j in range(1, M + 1):
        out += taps[j - 1] * ((c - ext[M + j : M + j + N]) + (c - ext[M - j : M - j + N]))
    return out


def _truncated_fft(kernel: Kernel, ext: np.ndarray, N: int) -> np.ndarray:
    M = kernel.M
    taps = kernel.taps()
    stencil = np.concatenate([taps[::-1], [0.0], taps])
    neighbours = fftconvolve(ext, stencil, mode="valid")
    return sum_partial(kernel) * ext[M : M + N] - neighbours


def apply_truncated(
    kernel: Kernel,
    u: GridFn,
    ff: FarFieldModel = ZeroFarField(),
    i: Optional[int] = None,
    *,
    fast: bool = False,
):
    """Term (I): the stencil truncated at |j| = M, w_M replaced by the boundary weight.

    Returns the full array, or a single value when node index ``i`` is given.
    """
    ext = extended_values(kernel, u, ff)
    N = u.grid.N
    if i is not None:
        M = kernel.M
        taps = kernel.taps()
        k = M + i
        j = np.arange(1, M + 1)
        return float(np.sum(taps * ((ext[k] - ext[k + j]) + (ext[k] - ext[k - j]))))
    return (_truncated_fft if fast else _truncated_direct)(kernel, ext, N)


def term_II(kernel: Kernel, u_i):
    """u_i times the kernel mass beyond |y| = L_W."""
    return np.asarray(u_i) * 2.0 * kernel.c1a / (kernel.alpha * kernel.L_W**kernel.alpha)


def _tail_integral(alpha: float, beta: float, c1a: float, L_W: float, z: np.ndarray) -> np.ndarray:
    # int_{L_W}^inf (y - x)^{-beta} C y^{-1-alpha} dy with z = x / L_W
    z = np.ascontiguousarray(np.atleast_1d(z), dtype=float)
    return _tail_integral_cached(alpha, beta, c1a, L_W, z.tobytes()).copy()


@lru_cache(maxsize=64)
def _tail_integral_cached(alpha: float, beta: float, c1a: float, L_W: float, zbytes: bytes) -> np.ndarray:
    # Depends only on the grid, so iterative solvers reuse it across steps.
    s = alpha + beta
    pref = c1a / (s * L_W**s)
    z = np.frombuffer(zbytes, dtype=float)
    return pref * np.array([hyp2f1(beta, s, s + 1.0, float(zz)) for zz in z])


def term_III_algebraic(
    kernel: Kernel,
    ff: AlgebraicTail,
    x_i,
    *,
    L: float,
    u_left: Optional[float] = None,
    u_right: Optional[float] = None,
) -> np.ndarray:
    """Far-field integral of u(x_i - y) over |y| > L_W under the algebraic tail.

    Requires L_W >= 2 L so that every hypergeometric argument has |z| <= 1/2.
    """
    if kernel.L_W < 2.0 * L * (1.0 - 1e-12):
        raise ValueError(f"L_W = {kernel.L_W} must be at least 2 L = {2 * L}")
    ul = ff.u_left if u_left is None else u_left
    ur = ff.u_right if u_right is None else u_right
    if ul is None or ur is None:
        raise ValueError("tail amplitudes are required")
    anchor = L if ff.anchor is None else ff.anchor
    x = np.atleast_1d(np.asarray(x_i, dtype=float))
    z = x / kernel.L_W
    scale = anchor**ff.beta
    right_tail = ul * scale * _tail_integral(kernel.alpha, ff.beta, kernel.c1a, kernel.L_W, z)
    left_tail = ur * scale * _tail_integral(kernel.alpha, ff.beta, kernel.c1a, kernel.L_W, -z)
    return right_tail + left_tail


def apply_terms(
    kernel: Kernel, u: GridFn, ff: FarFieldModel = ZeroFarField(), *, fast: bool = False
) -> dict[str, np.ndarray]:
    """The three contributions (I), (II), (III) at every node."""
    t1 = apply_truncated(kernel, u, ff, fast=fast)
    t2 = term_II(kernel, u.values)
    tail = ff.tail if isinstance(ff, DirichletTable) else ff
    if isinstance(tail, AlgebraicTail):
        ul, ur, _ = _tail_amplitudes(tail, u)
        t3 = term_III_algebraic(kernel, tail, u.x, L=u.grid.L, u_left=ul, u_right=ur)
    else:
        t3 = np.zeros(u.grid.N)
    return {"I": t1, "II": t2, "III": t3}


def apply_full(
    kernel: Kernel, u: GridFn, ff: FarFieldModel = ZeroFarField(), *, fast: bool = False
) -> GridFn:
    """(I) + (II) - (III) at every node of ``u``'s grid."""
    t = apply_terms(kernel, u, ff, fast=fast)
    return GridFn(u.grid, t["I"] + t["II"] - t["III"])


def apply_full_fast(kernel: Kernel, u: GridFn, ff: FarFieldModel = ZeroFarField()) -> GridFn:
    """Same as :func:`apply_full` with term (I) done by FFT convolution, O(N log N)."""
    return apply_full(kernel, u, ff, fast=True)


def apply_cgm(
    alpha: float,
    epsilon: float,
    u: Callable[[np.ndarray], np.ndarray],
    grid: Grid,
    *,
    L_W: Optional[float] = None,
) -> GridFn:
    """Midpoint-rule comparison scheme with a second-derivative core of radius epsilon.

    Inside |y| < epsilon the integral is replaced by -C eps^{2-a}/(2-a) u''
    (u'' by central differences with step h). Outside, the kernel mass of
    each cell [eps + jh, eps + (j+1)h] is integrated exactly and multiplied
    by u at the cell midpoint, on both sides, up to radius L_W (default 2L).
    u is taken to vanish outside [-L, L]; the kernel mass beyond the last
    cell is added analytically.
    """
    from .kernel import c_const

    h, L = grid.h, grid.L
    if epsilon < h / 2.0 * (1.0 - 1e-12):
        raise ValueError(f"epsilon = {epsilon} must be at least h/2 = {h / 2}")
    R = 2.0 * L if L_W is None else L_W
    c = c_const(alpha)

    def uz(x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) <= L * (1 + 1e-12), u(x), 0.0)

    x = grid.x
    u0 = uz(x)
    d2 = (uz(x + h) - 2.0 * u0 + uz(x - h)) / h**2
    out = -c * epsilon ** (2.0 - alpha) / (2.0 - alpha) * d2
    ncell = int(math.floor((R - epsilon) / h + 1e-9))
    edges = epsilon + h * np.arange(ncell + 1)
    mass = (edges[:-1] ** -alpha - edges[1:] ** -alpha) / alpha
    mids = epsilon + h * (np.arange(ncell) + 0.5)
    for m, y in zip(mass, mids):
        out += c * m * ((u0 - uz(x + y)) + (u0 - uz(x - y)))
    out += u0 * 2.0 * c * edges[-1] ** -alpha / alpha
    return GridFn(grid, out)


def estimate_beta(u: GridFn, window: float = 0.25) -> float:
    """Fit |u| ~ |x|^{-beta} over the outer ``window`` fraction of each half-grid."""
    x = u.x
    mask = (np.abs(x) >= (1.0 - window) * u.grid.L) & (u.values != 0.0)
    if mask.sum() < 3:
        raise ValueError("not enough nonzero samples in the fitting window")
    slope = np.polyfit(np.log(np.abs(x[mask])), np.log(np.abs(u.values[mask])), 1)[0]
    return float(-slope)
