import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclap.special import ConvergenceError, PoleError, exprel, gamma_fn, hyp2f1


@pytest.mark.parametrize("x", [0.05, 0.3, 0.5, 1.0, 1.5, 2.75, 7.0, 10.25, 33.3])
def test_gamma_matches_math(x):
    assert gamma_fn(x) == pytest.approx(math.gamma(x), rel=5e-14)


@pytest.mark.parametrize("x", [-0.5, -1.3, -2.7, -5.5])
def test_gamma_negative_reflection(x):
    assert gamma_fn(x) == pytest.approx(math.gamma(x), rel=5e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, -4.0])
def test_gamma_poles(x):
    with pytest.raises(PoleError):
        gamma_fn(x)


def test_gamma_half_and_integers():
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma_fn(6) == 120.0


@given(st.floats(min_value=0.01, max_value=40.0))
def test_gamma_recurrence(x):
    assert gamma_fn(x + 1) == pytest.approx(x * gamma_fn(x), rel=1e-13)


def test_exprel():
    assert exprel(0.0) == 1.0
    assert exprel(1e-12) == pytest.approx(1 + 5e-13, rel=1e-15)
    assert exprel(2.0) == pytest.approx((math.e**2 - 1) / 2, rel=1e-15)


@pytest.mark.parametrize(
    "a,b,c,z",
    [
        (0.3, 1.1, 1.4, 0.9),  # 1 - z transform
        (0.5, 1.3, 2.3, -0.5),
        (0.25, 0.75, 2.25, 1 / 16),
        (0.8, 1.6, 2.6, -0.999),  # Pfaff transform
        (0.8, 1.6, 2.6, 0.5),
        (0.1, 1.5, 2.5, 0.999),
        (1.0, 1.0, 2.0, -1.0),
    ],
)
def test_hyp2f1_against_mpmath(a, b, c, z):
    assert hyp2f1(a, b, c, z) == pytest.approx(float(mpmath.hyp2f1(a, b, c, z)), rel=1e-13)


def test_hyp2f1_frozen_values():
    # DERIVED: mpmath at 30 digits
    assert hyp2f1(0.3, 1.1, 1.4, 0.9) == pytest.approx(1.6130816172748114, rel=1e-13)
    assert hyp2f1(0.5, 1.3, 2.3, -0.5) == pytest.approx(0.88686947799928779, rel=1e-13)


def test_hyp2f1_gauss_sum():
    a, b, c = 0.2, 0.7, 2.1
    gauss = math.gamma(c) * math.gamma(c - a - b) / (math.gamma(c - a) * math.gamma(c - b))
    assert hyp2f1(a, b, c, 1.0) == pytest.approx(gauss, rel=1e-13)


def test_hyp2f1_elementary():
    for z in (-0.9, 0.2, 0.7):
        assert hyp2f1(1, 1, 2, z) == pytest.approx(-math.log1p(-z) / z, rel=1e-13)
    assert hyp2f1(0.0, 3.0, 2.0, 0.5) == 1.0


def test_hyp2f1_errors():
    with pytest.raises(PoleError):
        hyp2f1(1, 1, -2, 0.3)
    with pytest.raises(ValueError):
        hyp2f1(1, 1, 2, 1.5)
    with pytest.raises(ValueError):
        hyp2f1(1, 1, 1.5, 1.0)  # c - a - b < 0 diverges
    with pytest.raises(ConvergenceError):
        hyp2f1(0.5, 0.5, 1.5, 0.5, max_terms=3)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.05, 1.5),
    st.floats(0.05, 1.5),
    st.floats(0.2, 3.0),
    st.floats(-0.95, 0.95),
)
def test_hyp2f1_euler_transform(a, b, c, z):
    lhs = hyp2f1(a, b, c, z)
    rhs = (1 - z) ** (c - a - b) * hyp2f1(c - a, c - b, c, z)
    assert lhs == pytest.approx(rhs, rel=1e-11)
