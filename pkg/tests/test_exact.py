import math

import numpy as np
import pytest
from scipy.integrate import quad

from fraclap.exact import (
    algebraic_pair,
    c0_branches,
    c0_pair,
    c1_branches,
    c1_pair,
    catalog,
    gaussian_pair,
    getoor_constant,
    getoor_pair,
    obstacle_exact,
)
from fraclap.kernel import c_const

pytestmark = pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")


def singular_integral(u, alpha, x, breaks=()):
    """C int_0^inf (2u(x) - u(x+y) - u(x-y)) y^{-1-alpha} dy by adaptive quadrature."""
    c = c_const(alpha)
    ux = u(x)
    f = lambda y: (2 * ux - u(x + y) - u(x - y)) * y ** (-1 - alpha)
    pts = sorted({0.0, *[b for b in breaks if b > 0], 20.0})
    total = sum(quad(f, a, b, limit=400, epsabs=1e-13, epsrel=1e-11)[0] for a, b in zip(pts, pts[1:]))
    total += quad(f, 20.0, np.inf, limit=400, epsabs=1e-13)[0]
    return c * total


def _kinks(x):
    return (abs(1 - x), 1 + x, abs(-1 - x))


@pytest.mark.parametrize("x", [0.0, 0.7, 2.5])
def test_algebraic_pair_oracle(x):
    p = algebraic_pair(0.4)
    assert p.Lu(x) == pytest.approx(singular_integral(p.u, 0.4, x), rel=1e-7)


def test_algebraic_pair_lu0_frozen():
    # DERIVED: 2^a Gamma((1+a)/2) / Gamma((1-a)/2) at a = 0.4
    p = algebraic_pair(0.4)
    assert p.Lu0 == pytest.approx(2**0.4 * math.gamma(0.7) / math.gamma(0.3), rel=1e-14)
    assert p.beta == pytest.approx(0.6)


def test_gaussian_point_value():
    for alpha in (0.5, 1.0, 1.5):
        p = gaussian_pair(alpha)
        assert p.point_only
        assert p.Lu0 == pytest.approx(singular_integral(p.u, alpha, 0.0), rel=1e-8)
    assert gaussian_pair(1.0).Lu0 == pytest.approx(2 / math.sqrt(math.pi), abs=1e-15)


@pytest.mark.parametrize("x", [0.0, 0.3, 0.9, 1.5, 3.0])
def test_c0_pair_oracle(x):
    alpha = 0.6
    p = c0_pair(alpha)
    assert p.Lu(x) == pytest.approx(singular_integral(p.u, alpha, x, _kinks(x)), rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("x", [0.0, 0.5, 1.2])
def test_c1_pair_oracle(x):
    alpha = 0.8
    p = c1_pair(alpha)
    assert p.Lu(x) == pytest.approx(singular_integral(p.u, alpha, x, _kinks(x)), rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("branches", [c0_branches, c1_branches])
def test_branches_meet_at_one(branches):
    for alpha in (0.2, 0.5, 0.8):
        inside, outside = branches(alpha)
        assert inside(1.0) == pytest.approx(outside(1.0), rel=1e-12)


def test_c1_slope_continuous():
    inside, outside = c1_branches(0.6)
    e = 1e-6
    left = (inside(1.0) - inside(1.0 - e)) / e
    right = (outside(1.0 + e) - outside(1.0)) / e
    assert abs(left - right) <= 5e-6


def test_c0_has_a_kink():
    inside, outside = c0_branches(0.6)
    e = 1e-6
    left = (inside(1.0) - inside(1.0 - e)) / e
    right = (outside(1.0 + e) - outside(1.0)) / e
    assert abs(left - right) > 1e-2


def test_pairs_are_even():
    x = np.linspace(0, 4, 17)
    for name in ("gaussian", "algebraic", "c0", "c1", "getoor"):
        p = catalog(name, 0.5)
        np.testing.assert_array_equal(p.u(x), p.u(-x))


def test_getoor_values():
    assert getoor_pair(1.0).u(0.0) == pytest.approx(1.0, abs=1e-12)
    # DERIVED: mpmath evaluation of the constant at alpha = 0.8
    assert getoor_constant(0.8) == pytest.approx(1.0736712740308343, rel=1e-14)
    # alpha -> 2 recovers (1 - x^2)/2
    assert getoor_pair(1.9999).u(0.5) == pytest.approx(0.5 * 0.75, rel=1e-3)
    assert getoor_pair(0.8).u(1.5) == 0.0


def test_getoor_oracle_inside():
    alpha = 0.8
    p = getoor_pair(alpha)
    for x in (0.0, 0.5):
        assert singular_integral(p.u, alpha, x, _kinks(x)) == pytest.approx(1.0, rel=1e-6)


def test_obstacle_exact():
    alpha = 0.5
    phi, u = obstacle_exact(alpha)
    x = np.linspace(-1, 1, 41)
    np.testing.assert_allclose(u(x), phi(x), rtol=1e-13, atol=1e-15)
    far = np.linspace(1.05, 6, 30)
    assert np.all(u(far) > phi(far))
    assert np.all(phi(np.array([2.0, 3.0])) == 0.0)


def test_catalog_errors():
    with pytest.raises(ValueError):
        catalog("cauchy", 0.5)
    with pytest.raises(ValueError):
        c0_pair(1.2)
