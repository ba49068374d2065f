"""Scalar special functions: the Gamma function and Gauss's 2F1.

Both are written in-repo so the weight and exact-solution code has no
hidden dependency on a particular scipy build. Inputs are real scalars.
"""

from __future__ import annotations

import math

__all__ = ["gamma_fn", "hyp2f1", "exprel", "PoleError", "ConvergenceError"]


class PoleError(ValueError):
    """Argument sits on a pole of the function."""


class ConvergenceError(ArithmeticError):
    """A series did not reach tolerance within its term cap."""


# Lanczos coefficients, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _is_nonpositive_int(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def gamma_fn(x: float) -> float:
    """Gamma function for real ``x`` via the Lanczos approximation.

    Uses the reflection formula below 1/2. Raises :class:`PoleError` at
    0, -1, -2, ...
    """
    x = float(x)
    if _is_nonpositive_int(x):
        raise PoleError(f"Gamma has a pole at x = {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    # Integers are exact in double precision up to 170!, so short-circuit.
    if x == math.floor(x) and x <= 171.0:
        return float(math.factorial(int(x) - 1))
    z = x - 1.0
    acc = _LANCZOS_P[0]
    for i, p in enumerate(_LANCZOS_P[1:], start=1):
        acc += p / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _SQRT_2PI * t ** (z + 0.5) * math.exp(-t) * acc


def exprel(x: float) -> float:
    """(exp(x) - 1) / x, continuous at 0."""
    if x == 0.0:
        return 1.0
    return math.expm1(x) / x


def _series(a: float, b: float, c: float, z: float, max_terms: int, rtol: float) -> float:
    total = 1.0
    term = 1.0
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if term == 0.0 or abs(term) <= rtol * abs(total):
            return total
    raise ConvergenceError(
        f"2F1({a}, {b}; {c}; {z}) series did not converge in {max_terms} terms"
    )


def hyp2f1(
    a: float,
    b: float,
    c: float,
    z: float,
    *,
    max_terms: int = 100_000,
    rtol: float = 1e-16,
) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z in [-1, 1].

    The power series is summed with a term-ratio recurrence. Where that
    series converges too slowly to be useful (z close to +1 or -1) the
    argument is first moved into |z| <= 1/2 or 1 - z <= 1/4 by the standard
    Pfaff and 1 - z linear transformations.
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    if _is_nonpositive_int(c):
        raise PoleError(f"2F1 undefined for c = {c}")
    if not -1.0 <= z <= 1.0:
        raise ValueError(f"2F1 argument z = {z} outside [-1, 1]")
    if z == 0.0 or a == 0.0 or b == 0.0:
        return 1.0
    s = c - a - b
    if z == 1.0:
        if s <= 0.0:
            raise ValueError(f"2F1 diverges at z = 1 when c - a - b = {s} <= 0")
        return gamma_fn(c) * gamma_fn(s) / (gamma_fn(c - a) * gamma_fn(c - b))
    if z < -0.5:
        # Pfaff: maps [-1, -1/2) onto [1/3, 1/2).
        w = z / (z - 1.0)
        return (1.0 - z) ** (-a) * hyp2f1(a, c - b, c, w, max_terms=max_terms, rtol=rtol)
    # The 1 - z transform degenerates when c - a - b is an integer (or within
    # rounding of one); there the plain series is used.
    if z > 0.75 and abs(s - round(s)) > 1e-6:
        return _one_minus_z(a, b, c, z, max_terms, rtol)
    return _series(a, b, c, z, max_terms, rtol)


def _rgamma(x: float) -> float:
    return 0.0 if _is_nonpositive_int(x) else 1.0 / gamma_fn(x)


def _one_minus_z(a: float, b: float, c: float, z: float, max_terms: int, rtol: float) -> float:
    # Requires non-integer c - a - b.
    s = c - a - b
    y = 1.0 - z
    gc = gamma_fn(c)
    first = gc * gamma_fn(s) * _rgamma(c - a) * _rgamma(c - b)
    second = gc * gamma_fn(-s) * _rgamma(a) * _rgamma(b)
    out = 0.0
    if first != 0.0:
        out += first * _series(a, b, 1.0 - s, y, max_terms, rtol)
    if second != 0.0:
        out += second * y**s * _series(c - a, c - b, 1.0 + s, y, max_terms, rtol)
    return out
