import numpy as np
import pytest

from fraclap.exact import c0_pair, c1_pair, getoor_constant, getoor_pair, obstacle_exact
from fraclap.kernel import Order
from fraclap.operator import Grid, GridFn, apply_full
from fraclap.solve import (
    DirichletProblem,
    NumericalFailure,
    ObstacleProblem,
    dirichlet_kernel,
    solve_dirichlet,
    solve_obstacle,
    truncation_error,
)

one = lambda x: np.ones_like(x)
zero = lambda x: np.zeros_like(x)


def test_zero_data_gives_zero():
    sol = solve_dirichlet(DirichletProblem(0.7, 0.05, zero))
    assert np.all(sol.u.values == 0.0)
    assert sol.diag_margin > 0


def test_exterior_values_are_g():
    g = lambda x: 1.0 / (1.0 + x * x)
    sol = solve_dirichlet(DirichletProblem(0.7, 0.05, one, g=g, g_beta=2.0))
    ext = ~sol.interior
    np.testing.assert_array_equal(sol.u.values[ext], g(sol.u.x[ext]))
    assert ext.sum() == 2


@pytest.mark.parametrize("order", list(Order))
def test_jacobi_matches_direct(order):
    kw = dict(alpha=1.2, h=0.05, f=one, order=order)
    d = solve_dirichlet(DirichletProblem(**kw))
    j = solve_dirichlet(DirichletProblem(**kw, method="jacobi", tol=1e-13))
    assert j.iterations > 1
    np.testing.assert_allclose(j.u.values, d.u.values, atol=1e-8)


def test_unknown_method():
    with pytest.raises(ValueError):
        DirichletProblem(0.5, 0.1, one, method="cg")


def test_wrong_f_length():
    with pytest.raises(ValueError):
        solve_dirichlet(DirichletProblem(0.5, 0.1, np.ones(3)))


def test_solution_satisfies_discrete_equation():
    p = DirichletProblem(0.9, 0.05, lambda x: 1 + x)
    sol = solve_dirichlet(p)
    Lu = apply_full(sol.kernel, sol.u).values
    np.testing.assert_allclose(Lu[sol.interior], 1 + sol.u.x[sol.interior], atol=1e-10)


def test_getoor_alpha_one():
    # K(1) = 1, so u(0) -> 1.
    assert getoor_constant(1.0) == pytest.approx(1.0, rel=1e-14)
    sol = solve_dirichlet(DirichletProblem(1.0, 0.01, one))
    assert sol.u.values[sol.u.grid.center] == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_getoor_error_decreases(alpha):
    errs = []
    for h in (0.05, 0.025, 0.0125):
        sol = solve_dirichlet(DirichletProblem(alpha, h, one))
        errs.append(np.abs(sol.u.values - getoor_pair(alpha).u(sol.u.x)).max())
    assert errs[0] > errs[1] > errs[2]


def test_error_bounded_by_truncation_error():
    # With L_h monotone and v = 4 - x^2 a supersolution, |e| <= 4 max|r|.
    alpha = 0.6
    pair = c1_pair(alpha)
    p = DirichletProblem(alpha, 0.05, pair.Lu, g=pair.u, g_beta=pair.beta)
    sol = solve_dirichlet(p)
    e = np.abs(sol.u.values - pair.u(sol.u.x)).max()
    r = np.abs(truncation_error(pair.u, pair.Lu, p)).max()
    assert 0 < e <= 4 * r


def test_truncation_error_shrinks():
    # A wide exterior table; at the default reach the pure power tail sets a floor near 1e-4.
    pair = c1_pair(0.4)
    r = [
        np.abs(truncation_error(pair.u, pair.Lu, DirichletProblem(0.4, h, pair.Lu, g=pair.u, g_beta=pair.beta, L_W=32.0))).max()
        for h in (0.1, 0.05, 0.025)
    ]
    assert r[0] > r[1] > r[2]


def test_reach_is_admissible():
    k = dirichlet_kernel(DirichletProblem(0.5, 0.1, one, order=Order.QUAD, L_W=2.0))
    assert k.M % 2 == 1 and k.M >= 20


# --- obstacle


def test_negative_obstacle_gives_zero():
    sol = solve_obstacle(ObstacleProblem(0.5, 2.0, 0.1, lambda x: -1 - x * x))
    assert np.abs(sol.u.values).max() < 1e-9
    assert sol.monotone


def test_dt_too_large():
    p = ObstacleProblem(0.5, 2.0, 0.1, obstacle_exact(0.5)[0], dt=10.0)
    with pytest.raises(ValueError):
        solve_obstacle(p)


def test_iteration_budget():
    p = ObstacleProblem(0.5, 2.0, 0.1, obstacle_exact(0.5)[0], max_iter=3)
    with pytest.raises(NumericalFailure):
        solve_obstacle(p)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_obstacle():
    with pytest.raises(ValueError):
        solve_obstacle(ObstacleProblem(0.5, 2.0, 0.1, lambda x: 1 / x))


def test_obstacle_solution_properties():
    alpha = 0.5
    phi, u_exact = obstacle_exact(alpha)
    sol = solve_obstacle(ObstacleProblem(alpha, 4.0, 0.1, phi, tail_beta=alpha))
    u, ph, Lu = sol.u.values, sol.phi.values, sol.Lu.values
    assert sol.monotone
    assert np.all(u >= ph - 1e-12)
    assert Lu.min() > -1e-8
    assert sol.complementarity < 1e-8
    assert sol.contact[sol.u.grid.center]
    assert np.abs(u - u_exact(sol.u.x)).max() < 0.02
    assert np.abs(Lu - c0_pair(alpha).Lu(sol.u.x)).max() < 0.2


def test_gridfn_obstacle_and_warm_start():
    alpha = 0.5
    grid = Grid(2.0, 0.1)
    phi = grid.sample(obstacle_exact(alpha)[0])
    cold = solve_obstacle(ObstacleProblem(alpha, 2.0, 0.1, phi))
    warm = solve_obstacle(ObstacleProblem(alpha, 2.0, 0.1, phi), u0=cold.u.values)
    assert warm.iterations < cold.iterations
    np.testing.assert_allclose(warm.u.values, cold.u.values, atol=1e-8)


def test_obstacle_larger_than_phi_everywhere():
    # u is the least supersolution above phi: raising phi cannot lower u.
    alpha = 0.7
    phi = obstacle_exact(alpha)[0]
    lo = solve_obstacle(ObstacleProblem(alpha, 2.0, 0.1, phi))
    hi = solve_obstacle(ObstacleProblem(alpha, 2.0, 0.1, lambda x: phi(x) + 0.1))
    assert np.all(hi.u.values >= lo.u.values - 1e-9)
