"""Convolution weights for the 1D discrete fractional Laplacian.

The operator is approximated on a grid of spacing ``h`` by

    L_h u_i = sum_{j >= 1} w_j (2 u_i - u_{i+j} - u_{i-j}).

The stencil near the origin comes from a centered second difference of the
singular part |y| < h. Away from it, the kernel C |y|^{-1-alpha} is integrated
exactly against a piecewise linear (``Order.TENT``) or piecewise quadratic
(``Order.QUAD``) interpolant. Every weight scales as ``h**-alpha``, so all
weights are computed at unit spacing and rescaled.

Weights at large ``j`` are second differences of slowly varying powers and
suffer cancellation when formed literally from the primitives ``F`` and
``G``. They are evaluated here from convergent expansions in ``1/j`` whose
leading terms cancel analytically. The literal primitive formulas remain
available (:func:`weights_from_primitives`) and are cross-checked in the
test suite.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from .special import exprel, gamma_fn

__all__ = [
    "Order",
    "KernelParams",
    "Kernel",
    "c_const",
    "primitive_F",
    "dF",
    "primitive_G",
    "dG",
    "d2G",
    "unit_weights",
    "unit_boundary_weight",
    "weights_from_primitives",
    "total_sum_closed_form",
    "make_kernel",
    "sum_partial",
    "tail_sum_estimate",
]


class Order(enum.Enum):
    TENT = 1
    QUAD = 2

    @classmethod
    def parse(cls, value: "Order | str | int") -> "Order":
        if isinstance(value, Order):
            return value
        if isinstance(value, int):
            return cls(value)
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise ValueError(f"unknown interpolation order {value!r}") from None


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")


def c_const(alpha: float) -> float:
    """Normalising constant C_{1,alpha} of the kernel C |y|^{-1-alpha}."""
    _check_alpha(alpha)
    return (
        alpha
        * 2.0 ** (alpha - 1.0)
        * gamma_fn((alpha + 1.0) / 2.0)
        / (math.sqrt(math.pi) * gamma_fn((2.0 - alpha) / 2.0))
    )


# Primitives with F'' = G''' = C t^{-1-alpha} on t > 0.


def _check_t(t: float) -> None:
    if not t > 0.0:
        raise ValueError(f"primitives are defined for t > 0, got {t}")


def primitive_F(t: float, alpha: float) -> float:
    _check_t(t)
    c = c_const(alpha)
    if alpha == 1.0:
        return -c * math.log(t)
    return c / ((alpha - 1.0) * alpha) * t ** (1.0 - alpha)


def dF(t: float, alpha: float) -> float:
    _check_t(t)
    return -c_const(alpha) / alpha * t ** (-alpha)


def primitive_G(t: float, alpha: float) -> float:
    _check_t(t)
    c = c_const(alpha)
    if alpha == 1.0:
        return c * (t - t * math.log(t))
    return c / ((2.0 - alpha) * (alpha - 1.0) * alpha) * t ** (2.0 - alpha)


def dG(t: float, alpha: float) -> float:
    _check_t(t)
    c = c_const(alpha)
    if alpha == 1.0:
        return -c * math.log(t)
    return c / ((alpha - 1.0) * alpha) * t ** (1.0 - alpha)


def d2G(t: float, alpha: float) -> float:
    _check_t(t)
    return -c_const(alpha) / alpha * t ** (-alpha)


# --- unit-spacing weights -------------------------------------------------

_SERIES_CAP = 2000


def _n_terms(xmax: float) -> int:
    # Coefficients decay at least polynomially, so xmax**K bounds the remainder.
    if xmax <= 0.0:
        return 1
    k = int(math.ceil(math.log(1e-18) / math.log(xmax))) + 2
    if k > _SERIES_CAP:
        raise ArithmeticError(f"expansion variable {xmax} too close to 1")
    return k


def _horner(coefs: list[float], x: np.ndarray) -> np.ndarray:
    # sum_{k>=1} coefs[k-1] x^k
    acc = np.zeros_like(x)
    for c in reversed(coefs):
        acc = (acc + c) * x
    return acc


def _tent_interior(alpha: float, j: np.ndarray) -> np.ndarray:
    # F(j+1) - 2F(j) + F(j-1) = 2C j^{1-a} sum_k c_k j^{-2k},
    # c_1 = 1/2, c_{k+1} = c_k (p-2k)(p-2k-1)/((2k+1)(2k+2)), p = 1 - alpha.
    p = 1.0 - alpha
    x = 1.0 / (j * j)
    coefs = [0.5]
    for k in range(1, _n_terms(float(x.max()))):
        coefs.append(coefs[-1] * (p - 2 * k) * (p - 2 * k - 1) / ((2 * k + 1) * (2 * k + 2)))
    return 2.0 * c_const(alpha) * j**p * _horner(coefs, x)


def _quad_b(alpha: float, n: int) -> list[float]:
    # b_k = prod_{m=3}^{2k} (q - m) / (2k+1)!, q = 2 - alpha.
    q = 2.0 - alpha
    b = [1.0 / 6.0]
    for k in range(1, n):
        b.append(b[-1] * (q - 2 * k - 1) * (q - 2 * k - 2) / ((2 * k + 2) * (2 * k + 3)))
    return b


def _quad_even(alpha: float, j: np.ndarray) -> np.ndarray:
    # 2[G'(j+1) + G'(j-1) - G(j+1) + G(j-1)] = 4C j^{1-a} sum_k 2k b_k j^{-2k}
    x = 1.0 / (j * j)
    b = _quad_b(alpha, _n_terms(float(x.max())))
    coefs = [2 * k * bk for k, bk in enumerate(b, start=1)]
    return 4.0 * c_const(alpha) * j ** (1.0 - alpha) * _horner(coefs, x)


def _quad_odd(alpha: float, j: np.ndarray) -> np.ndarray:
    # -(G'(j+2) + 6G'(j) + G'(j-2))/2 + G(j+2) - G(j-2)
    #   = C j^{1-a} sum_k (3-2k) b_k (4/j^2)^k
    x = 4.0 / (j * j)
    b = _quad_b(alpha, _n_terms(float(x.max())))
    coefs = [(3 - 2 * k) * bk for k, bk in enumerate(b, start=1)]
    return c_const(alpha) * j ** (1.0 - alpha) * _horner(coefs, x)


def _w1(alpha: float, order: Order) -> float:
    c = c_const(alpha)
    p = 1.0 - alpha
    if order is Order.TENT:
        # C/(2-a) - F'(1) + F(2) - F(1); F(2) - F(1) = -(C/a) (2^p - 1)/p
        return c / (2.0 - alpha) + c / alpha - c / alpha * math.log(2.0) * exprel(p * math.log(2.0))
    # C/(2-a) - G''(1) - (G'(3) + 3G'(1))/2 + G(3) - G(1)
    #   = C/(2-a) + C/a - (C/a) * X(p)/p,
    # X(p)/p = -(E/p)/2 + (3E/p - 2)/(1+p), E = 3^p - 1.
    e_over_p = math.log(3.0) * exprel(p * math.log(3.0))
    x_over_p = -0.5 * e_over_p + (3.0 * e_over_p - 2.0) / (1.0 + p)
    return c / (2.0 - alpha) + c / alpha - c / alpha * x_over_p


def unit_weights(alpha: float, order: Order | str, n: int) -> np.ndarray:
    """Two-sided weights w_1..w_n at h = 1 (array index j - 1)."""
    _check_alpha(alpha)
    order = Order.parse(order)
    if n < 1:
        raise ValueError("need at least one weight")
    w = np.empty(n)
    w[0] = _w1(alpha, order)
    if n == 1:
        return w
    j = np.arange(2, n + 1, dtype=float)
    if order is Order.TENT:
        w[1:] = _tent_interior(alpha, j)
    else:
        even = j[j % 2 == 0]
        odd = j[j % 2 == 1]
        w[1::2] = _quad_even(alpha, even)
        if odd.size:
            w[2::2] = _quad_odd(alpha, odd)
    return w


def unit_boundary_weight(alpha: float, order: Order | str, m: int) -> float:
    """One-sided weight at the truncation node j = m (h = 1).

    Only the part of the basis function lying inside |y| <= m contributes.
    """
    _check_alpha(alpha)
    order = Order.parse(order)
    c = c_const(alpha)
    if order is Order.TENT:
        if m < 2:
            raise ValueError("TENT truncation needs m >= 2")
        # F'(m) - F(m) + F(m-1) = C m^{1-a} sum_{n>=2} (-1)^n d_n m^{-n},
        # d_2 = 1/2, d_{n+1} = d_n (p - n)/(n + 1).
        p = 1.0 - alpha
        total, d, n = 0.0, 0.5, 2
        while n < _SERIES_CAP:
            term = (-1) ** n * d * float(m) ** (-n)
            total += term
            if abs(term) <= 1e-18 * abs(total):
                break
            d *= (p - n) / (n + 1)
            n += 1
        return c * float(m) ** p * total
    if m < 3 or m % 2 == 0:
        raise ValueError("QUAD truncation needs an odd m >= 3")
    # G''(m) - (3G'(m) + G'(m-2))/2 + G(m) - G(m-2)
    #   = C m^{2-a} sum_{n>=3} e_n (-2)^n (n-4)/4 m^{-n},
    # e_3 = 1/6, e_{n+1} = e_n (q - n)/(n + 1).
    q = 2.0 - alpha
    total, e, n = 0.0, 1.0 / 6.0, 3
    while n < _SERIES_CAP:
        term = e * (-2.0 / m) ** n * (n - 4) / 4.0
        total += term
        if term != 0.0 and abs(term) <= 1e-18 * abs(total):
            break
        e *= (q - n) / (n + 1)
        n += 1
    return c * float(m) ** q * total


def weights_from_primitives(alpha: float, order: Order | str, n: int) -> np.ndarray:
    """Weights w_1..w_n (h = 1) evaluated literally from F and G.

    Loses accuracy to cancellation as j grows; kept as an independent check
    on the expansions used by :func:`unit_weights`.
    """
    order = Order.parse(order)
    c = c_const(alpha)
    F, F1 = (lambda t: primitive_F(t, alpha)), (lambda t: dF(t, alpha))
    G, G1, G2 = (lambda t: primitive_G(t, alpha)), (lambda t: dG(t, alpha)), (lambda t: d2G(t, alpha))
    out = np.empty(n)
    for j in range(1, n + 1):
        if order is Order.TENT:
            if j == 1:
                v = c / (2 - alpha) - F1(1) + F(2) - F(1)
            else:
                v = F(j + 1) - 2 * F(j) + F(j - 1)
        elif j == 1:
            v = c / (2 - alpha) - G2(1) - (G1(3) + 3 * G1(1)) / 2 + G(3) - G(1)
        elif j % 2 == 0:
            v = 2 * (G1(j + 1) + G1(j - 1) - G(j + 1) + G(j - 1))
        else:
            v = -(G1(j + 2) + 6 * G1(j) + G1(j - 2)) / 2 + G(j + 2) - G(j - 2)
        out[j - 1] = v
    return out


def total_sum_closed_form(alpha: float, h: float = 1.0) -> float:
    """sum_{j != 0} w_j, identical for both interpolation orders."""
    _check_alpha(alpha)
    return (
        2.0**alpha
        * gamma_fn((alpha + 1.0) / 2.0)
        / (math.sqrt(math.pi) * gamma_fn(2.0 - alpha / 2.0))
        * h ** (-alpha)
    )


@dataclass(frozen=True)
class KernelParams:
    alpha: float
    h: float
    order: Order
    M: int

    def __post_init__(self):
        object.__setattr__(self, "order", Order.parse(self.order))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "h", float(self.h))
        _check_alpha(self.alpha)
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.order is Order.TENT and self.M < 2:
            raise ValueError("TENT kernels need M >= 2")
        if self.order is Order.QUAD and (self.M < 3 or self.M % 2 == 0):
            raise ValueError(
                f"QUAD kernels need odd M >= 3 so truncation falls on a panel edge, got M={self.M}"
            )

    @property
    def L_W(self) -> float:
        return self.M * self.h


@dataclass(frozen=True, eq=False)
class Kernel:
    """Weights truncated at ``|j| = M``.

    ``w[j - 1]`` is the full two-sided weight for j = 1..M; the truncated
    operator uses ``w_boundary`` in place of ``w[M - 1]``.
    """

    params: KernelParams
    w: np.ndarray
    w_boundary: float
    total_sum: float
    c1a: float

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def h(self) -> float:
        return self.params.h

    @property
    def M(self) -> int:
        return self.params.M

    @property
    def order(self) -> Order:
        return self.params.order

    @property
    def L_W(self) -> float:
        return self.params.L_W

    def taps(self) -> np.ndarray:
        """Weights w_1..w_M as used by the truncated operator."""
        t = self.w.copy()
        t[-1] = self.w_boundary
        return t


@functools.lru_cache(maxsize=64)
def _make_kernel_cached(params: KernelParams) -> Kernel:
    scale = params.h ** (-params.alpha)
    w = unit_weights(params.alpha, params.order, params.M) * scale
    w.setflags(write=False)
    wb = unit_boundary_weight(params.alpha, params.order, params.M) * scale
    return Kernel(
        params=params,
        w=w,
        w_boundary=wb,
        total_sum=total_sum_closed_form(params.alpha, params.h),
        c1a=c_const(params.alpha),
    )


def make_kernel(params: KernelParams | None = None, **kwargs) -> Kernel:
    """Build (or fetch from cache) the kernel for ``params``.

    Accepts either a :class:`KernelParams` or its fields as keywords.
    """
    if params is None:
        params = KernelParams(**kwargs)
    return _make_kernel_cached(params)


def sum_partial(kernel: Kernel) -> float:
    """2 (w_1 + ... + w_{M-1} + w_boundary)."""
    return 2.0 * math.fsum(np.append(kernel.w[:-1], kernel.w_boundary))


def tail_sum_estimate(kernel: Kernel) -> float:
    """Weight mass beyond the truncation, total_sum - sum_partial."""
    return kernel.total_sum - sum_partial(kernel)
