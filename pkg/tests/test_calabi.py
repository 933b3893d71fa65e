import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasemap import calabi
from phasemap.errors import ConditioningError, DomainError, SizeError


def test_quadratic_hessian_is_identity():
    g = calabi.hessian_metric(calabi.potential_catalog("quadratic", 3), 1)
    for x in ([0.0, 0.0, 0.0], [0.4, -0.3, 0.9], [2.0, 1.0, -3.0]):
        np.testing.assert_allclose(g(x), np.eye(3), atol=1e-8)


def test_squared_quadratic_vanishes_at_origin():
    g = calabi.hessian_metric(calabi.potential_catalog("quadratic", 2), 2)
    np.testing.assert_allclose(g([0.0, 0.0]), 0.0, atol=1e-6)


def test_quartic_hessian():
    g = calabi.hessian_metric(calabi.potential_catalog("quartic", 2), 1)
    np.testing.assert_allclose(g([1.0, 1.0]), np.diag([12.0, 12.0]), atol=1e-6)


def test_derivative_tensor_against_polynomial():
    u = calabi.ScalarPotential(2, lambda x: x[0] ** 3 * x[1] + 2 * x[1] ** 3)
    x = np.array([0.7, -0.4])
    third = calabi.derivative_tensor(u, x, 3, calabi.H3)
    exact = np.zeros((2, 2, 2))
    exact[0, 0, 0] = 6 * x[1]
    exact[0, 0, 1] = exact[0, 1, 0] = exact[1, 0, 0] = 6 * x[0]
    exact[1, 1, 1] = 12.0
    np.testing.assert_allclose(third, exact, atol=1e-5)


def test_christoffel_is_half_third_derivative():
    u = calabi.potential_catalog("coupled_quartic", 2, eps=0.1)
    x = np.array([0.3, 0.2])
    gam = calabi.christoffel_first(calabi.hessian_metric(u), x)
    np.testing.assert_allclose(gam, 0.5 * calabi.derivative_tensor(u, x, 3, calabi.H3), atol=1e-12)
    a, b, eps = x[0], x[1], 0.1
    # u_112 = 4 eps y, u_122 = 4 eps x
    assert gam[0, 0, 1] == pytest.approx(0.5 * 4 * eps * b, abs=1e-6)
    assert gam[0, 1, 1] == pytest.approx(0.5 * 4 * eps * a, abs=1e-6)


def test_constant_metric_christoffel_zero():
    g = calabi.MetricField(2, lambda x: np.array([[2.0, 0.3], [0.3, 1.0]]))
    np.testing.assert_array_equal(calabi.christoffel_first(g, [0.4, 0.1]), 0.0)


def test_flat_metric_curvature():
    g = calabi.hessian_metric(calabi.potential_catalog("quadratic", 3))
    r, ricci = calabi.riemann(g, [0.2, -0.1, 0.4])
    assert np.max(np.abs(r)) <= 1e-6 and np.max(np.abs(ricci)) <= 1e-6


def test_sphere_gaussian_curvature():
    g = calabi.MetricField(2, lambda x: np.diag([1.0, np.sin(x[0]) ** 2]))
    assert calabi.gaussian_curvature(g, [np.pi / 4, 0.3]) == pytest.approx(1.0, abs=1e-4)


def test_hyperbolic_plane_curvature():
    g = calabi.MetricField(2, lambda x: np.eye(2) / x[1] ** 2)
    assert calabi.gaussian_curvature(g, [0.1, 1.3]) == pytest.approx(-1.0, abs=1e-4)


def test_riemann_antisymmetry():
    g = calabi.MetricField(2, lambda x: np.array([[1 + x[0] ** 2, 0.1 * x[1]], [0.1 * x[1], 2 + np.sin(x[0])]]))
    r, _ = calabi.riemann(g, [0.3, 0.5])
    np.testing.assert_allclose(r, -r.transpose(0, 1, 3, 2), atol=1e-12)
    low = calabi.lowered_riemann(g, [0.3, 0.5])
    np.testing.assert_allclose(low, -low.transpose(1, 0, 2, 3), atol=1e-5)


def test_identity_quadratic_both_sides_zero():
    rep = calabi.hessian_curvature_check(calabi.potential_catalog("quadratic", 2), [0.2, 0.1])
    assert rep.max_difference <= 1e-6 and rep.passed


def test_identity_coupled_quartic_and_sign_pinned():
    rep = calabi.hessian_curvature_check(calabi.potential_catalog("coupled_quartic", 2, eps=0.1), [0.3, 0.2])
    assert rep.passed and rep.max_difference <= 1e-4
    assert rep.sign == -1


def test_identity_detects_flipped_product():
    u = calabi.potential_catalog("coupled_quartic", 2, eps=0.5)
    x = np.array([0.8, 0.6])
    g = calabi.hessian_metric(u)
    gm = g(x)
    gam = calabi.christoffel_first(g, x)
    ginv = np.linalg.inv(gm)
    flipped = -(np.einsum("lm,ijm,hkl->hijk", ginv, gam, gam) + np.einsum("lm,ikm,hjl->hijk", ginv, gam, gam))
    low = calabi.lowered_riemann(g, x)
    assert np.max(np.abs(low - flipped)) >= 1e-2
    assert np.max(np.abs(low + calabi.hessian_identity_tensor(gm, gam))) <= 1e-4


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["coupled_quartic", "coupled_cubic", "exp_coupled"]),
       st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.integers(1, 2))
def test_identity_property(name, a, b, power):
    x = np.array([a, b])
    u = calabi.potential_catalog(name, 2, eps=0.1)
    if power == 2:
        x = x + 0.3  # keep u**2 strictly convex
    rep = calabi.hessian_curvature_check(u, x, power)
    assert rep.max_difference <= 1e-4


def test_identity_refuses_indefinite():
    saddle = calabi.ScalarPotential(2, lambda x: x[0] ** 2 - x[1] ** 2)
    with pytest.raises(ConditioningError):
        calabi.hessian_curvature_check(saddle, [0.1, 0.2])


def test_nonfinite_potential_is_domain_error():
    u = calabi.ScalarPotential(2, lambda x: np.log(x[0]) + x[1] ** 2)
    with pytest.raises(DomainError), np.errstate(invalid="ignore"):
        calabi.hessian_metric(u)([-1.0, 0.0])


def test_lagrangian_hamiltonian_cases():
    assert calabi.calabi_lagrangian_hamiltonian(np.eye(2), None, [1.0, 0.0]) == (1.0, 1.0, 0.0)
    assert calabi.calabi_lagrangian_hamiltonian(np.eye(2), None, [0.0, 0.0]) == (0.0, 0.0, 0.0)
    with pytest.raises(SizeError):
        calabi.calabi_lagrangian_hamiltonian(np.eye(2), None, [1.0, 0.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_lagrangian_equals_hamiltonian(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, (n, n))
    g = a.T @ a + n * np.eye(n)
    lag, ham, diff = calabi.calabi_lagrangian_hamiltonian(g, None, rng.uniform(-1, 1, n))
    assert abs(diff) <= 1e-12 * max(1.0, abs(lag))


def test_lagrangian_with_metric_field():
    g = calabi.hessian_metric(calabi.potential_catalog("exp_coupled", 2))
    lag, ham, diff = calabi.calabi_lagrangian_hamiltonian(g, [0.2, 0.4], [0.5, -1.0])
    assert abs(diff) <= 1e-12 and lag > 0


def _closed_form_coupled_quartic(eps):
    def g(x):
        a, b = x
        return np.array([[1 + 2 * eps * b * b, 4 * eps * a * b], [4 * eps * a * b, 1 + 2 * eps * a * a]])

    def third(x):
        a, b = x
        t = np.zeros((2, 2, 2))
        t[0, 0, 1] = t[0, 1, 0] = t[1, 0, 0] = 4 * eps * b
        t[0, 1, 1] = t[1, 0, 1] = t[1, 1, 0] = 4 * eps * a
        return t

    return calabi.MetricField(2, g), third


@pytest.mark.parametrize("x", [[0.3, 0.2], [-0.4, 0.35], [0.1, -0.45]])
def test_identity_on_closed_form_metric(x):
    # curvature through metric differencing, identity from analytic third derivatives
    g, third = _closed_form_coupled_quartic(0.1)
    x = np.array(x)
    low = calabi.lowered_riemann(g, x)
    ident = calabi.hessian_identity_tensor(g(x), 0.5 * third(x))
    assert np.max(np.abs(low + ident)) <= 1e-6
    assert np.max(np.abs(low - ident)) >= 1e-3
    np.testing.assert_allclose(calabi.christoffel_first(g, x), 0.5 * third(x), atol=1e-9)
