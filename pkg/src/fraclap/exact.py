"""Closed-form test functions u with known (-Delta)^{alpha/2} u.

Each entry is an :class:`ExactPair`. ``Lu`` is ``None`` for pairs whose
fractional Laplacian is known only at a point; ``Lu0`` then carries that
value at x = 0. All functions are even and accept scalars or arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .special import gamma_fn, hyp2f1

__all__ = [
    "ExactPair",
    "gaussian_pair",
    "algebraic_pair",
    "c0_pair",
    "c1_pair",
    "c0_branches",
    "c1_branches",
    "getoor_pair",
    "getoor_constant",
    "obstacle_exact",
    "catalog",
]

Func = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ExactPair:
    name: str
    alpha: float
    u: Func
    Lu: Optional[Func]
    regularity: str
    beta: Optional[float] = None  # algebraic decay exponent, None if u decays fast
    Lu0: Optional[float] = None

    @property
    def point_only(self) -> bool:
        return self.Lu is None


def _even(fn: Callable[[float], float]) -> Func:
    # Evaluate on |x| so that u(-x) and u(x) are bit-identical.
    vec = np.vectorize(lambda x: fn(abs(float(x))), otypes=[float])

    def wrapped(x):
        out = vec(x)
        return float(out) if np.ndim(out) == 0 else out

    return wrapped


def _require_sub1(alpha: float, name: str) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"{name} needs alpha in (0, 1), got {alpha}")


def gaussian_pair(alpha: float) -> ExactPair:
    lu0 = 2.0**alpha * gamma_fn((1.0 + alpha) / 2.0) / math.sqrt(math.pi)
    return ExactPair(
        name="gaussian",
        alpha=alpha,
        u=lambda x: np.exp(-np.square(np.abs(x))),
        Lu=None,
        regularity="smooth-exp",
        Lu0=lu0,
    )


def algebraic_pair(alpha: float) -> ExactPair:
    """u = (1+x^2)^{-(1-alpha)/2}, which decays like |x|^{alpha-1}."""
    _require_sub1(alpha, "algebraic_pair")
    k = 2.0**alpha * gamma_fn((1.0 + alpha) / 2.0) / gamma_fn((1.0 - alpha) / 2.0)

    def u(x):
        return (1.0 + np.square(np.abs(x))) ** (-(1.0 - alpha) / 2.0)

    def lu(x):
        return k * (1.0 + np.square(np.abs(x))) ** (-(1.0 + alpha) / 2.0)

    return ExactPair("algebraic", alpha, u, lu, "smooth-alg", beta=1.0 - alpha, Lu0=k)


def c0_branches(alpha: float) -> tuple[Callable[[float], float], Callable[[float], float]]:
    """Inner (|x| <= 1) and outer (|x| >= 1) formulas of the C0 solution, for x >= 0."""
    g1 = gamma_fn((1.0 - alpha) / 2.0)
    g2 = gamma_fn(2.0 - alpha / 2.0)
    inner = 2.0**-alpha / math.sqrt(math.pi) * g1 * g2
    outer = 2.0**-alpha * g1 * g2 / (gamma_fn(alpha / 2.0) * gamma_fn((5.0 - alpha) / 2.0))
    a, b, c = (1.0 - alpha) / 2.0, (2.0 - alpha) / 2.0, (5.0 - alpha) / 2.0

    def inside(x: float) -> float:
        return inner * (1.0 - (1.0 - alpha) * x * x)

    def outside(x: float) -> float:
        return outer * x ** (alpha - 1.0) * hyp2f1(a, b, c, 1.0 / (x * x))

    return inside, outside


def c1_branches(alpha: float) -> tuple[Callable[[float], float], Callable[[float], float]]:
    g1 = gamma_fn((1.0 - alpha) / 2.0)
    g3 = gamma_fn(3.0 - alpha / 2.0)
    inner = 2.0 ** (-alpha - 1.0) / math.sqrt(math.pi) * g1 * g3
    outer = 2.0**-alpha * g1 * g3 / (gamma_fn(alpha / 2.0) * gamma_fn((7.0 - alpha) / 2.0))
    a, b, c = (1.0 - alpha) / 2.0, (2.0 - alpha) / 2.0, (7.0 - alpha) / 2.0
    c2 = 2.0 - 2.0 * alpha
    c4 = 1.0 - 4.0 * alpha / 3.0 + alpha * alpha / 3.0

    def inside(x: float) -> float:
        x2 = x * x
        return inner * (1.0 - c2 * x2 + c4 * x2 * x2)

    def outside(x: float) -> float:
        return outer * x ** (alpha - 1.0) * hyp2f1(a, b, c, 1.0 / (x * x))

    return inside, outside


def _piecewise(branches) -> Callable[[float], float]:
    inside, outside = branches
    return lambda x: inside(x) if x <= 1.0 else outside(x)


def _bump(power: float) -> Func:
    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.clip(1.0 - x * x, 0.0, None) ** power
        return float(out) if out.ndim == 0 else out

    return f


def c0_pair(alpha: float) -> ExactPair:
    """Solution of L u = (1-x^2)_+^{1-alpha/2}; continuous, kinked at |x| = 1."""
    _require_sub1(alpha, "c0_pair")
    return ExactPair("c0", alpha, _even(_piecewise(c0_branches(alpha))), _bump(1.0 - alpha / 2.0), "C0", beta=1.0 - alpha)


def c1_pair(alpha: float) -> ExactPair:
    """Solution of L u = (1-x^2)_+^{2-alpha/2}; C^1 with a jump in u'' at |x| = 1."""
    _require_sub1(alpha, "c1_pair")
    return ExactPair("c1", alpha, _even(_piecewise(c1_branches(alpha))), _bump(2.0 - alpha / 2.0), "C1", beta=1.0 - alpha)


def getoor_constant(alpha: float) -> float:
    return 2.0**-alpha * math.sqrt(math.pi) / (gamma_fn(1.0 + alpha / 2.0) * gamma_fn((1.0 + alpha) / 2.0))


def getoor_pair(alpha: float) -> ExactPair:
    """Expected exit time from (-1, 1): L u = 1 inside, u = 0 outside."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    k = getoor_constant(alpha)

    def u(x):
        x = np.asarray(x, dtype=float)
        out = k * np.clip(1.0 - x * x, 0.0, None) ** (alpha / 2.0)
        return float(out) if out.ndim == 0 else out

    def lu(x):
        # Only meaningful inside (-1, 1).
        out = np.ones_like(np.asarray(x, dtype=float))
        return float(out) if out.ndim == 0 else out

    return ExactPair("getoor", alpha, u, lu, "Holder-alpha/2", Lu0=1.0)


def obstacle_exact(alpha: float) -> tuple[Func, Func]:
    """Obstacle phi and the solution u of min(u - phi, L u) = 0.

    The contact set is [-1, 1], where u coincides with phi.
    """
    _require_sub1(alpha, "obstacle_exact")
    k = 2.0**-alpha / math.sqrt(math.pi) * gamma_fn((1.0 - alpha) / 2.0) * gamma_fn((4.0 - alpha) / 2.0)

    def phi(x):
        x = np.asarray(x, dtype=float)
        out = k * np.clip(1.0 - (1.0 - alpha) * x * x, 0.0, None)
        return float(out) if out.ndim == 0 else out

    return phi, c0_pair(alpha).u


_CATALOG = {
    "gaussian": gaussian_pair,
    "algebraic": algebraic_pair,
    "c0": c0_pair,
    "c1": c1_pair,
    "getoor": getoor_pair,
}


def catalog(name: str, alpha: float) -> ExactPair:
    try:
        return _CATALOG[name](alpha)
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; choose from {sorted(_CATALOG)}") from None
