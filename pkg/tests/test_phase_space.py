import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasemap.errors import CapabilityError, SizeError, UsageError
from phasemap.phase_space import (CoefficientSet, PhaseVector, QuadraticHamiltonian, Reparameterization,
                                  StructureMatrix, coefficient_set, evaluate, flow_rhs, gradient,
                                  pair_coefficients, symplectic_matrix)
from phasemap.polynomials import MatrixPolynomial


def sym(rng, d):
    a = rng.uniform(-1, 1, (d, d))
    return a + a.T


def test_phase_vector_split():
    v = PhaseVector([1, 2, 3, 4])
    assert v.n == 2
    assert list(v.q) == [1, 2] and list(v.p) == [3, 4]
    with pytest.raises(SizeError):
        PhaseVector([1, 2, 3])


def test_harmonic_oscillator_value_and_flow():
    h = QuadraticHamiltonian(1, np.eye(2))
    assert evaluate(h, [1.0, 0.0], 0.0) == pytest.approx(0.5)
    # dq/dtau = p, dp/dtau = -q
    np.testing.assert_allclose(flow_rhs(StructureMatrix.symplectic(1), h, [1.0, 0.0], 0.0), [0.0, -1.0])
    np.testing.assert_allclose(flow_rhs(symplectic_matrix(1), h, [0.0, 2.0], 0.0), [2.0, 0.0])


def test_linear_and_scalar_terms():
    h = QuadraticHamiltonian(1, np.zeros((2, 2)), gvec=[1.0, 2.0], dscal=3.0)
    assert evaluate(h, [1.0, 1.0], 0.0) == pytest.approx(6.0)
    np.testing.assert_allclose(gradient(h, [5.0, -1.0], 0.0), [1.0, 2.0])


def test_polynomial_coefficients_in_tau():
    hpoly = MatrixPolynomial(np.array([np.eye(2), 2 * np.eye(2)]))
    h = QuadraticHamiltonian(1, hpoly, gvec=MatrixPolynomial(np.array([[[1.0], [0.0]]])))
    assert evaluate(h, [1.0, 0.0], 1.0) == pytest.approx(0.5 * 3.0 + 1.0)


def test_asymmetric_matrix_rejected():
    with pytest.raises(UsageError):
        QuadraticHamiltonian(1, np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_wrong_shapes_rejected():
    h = QuadraticHamiltonian(2, np.eye(4))
    with pytest.raises(SizeError):
        evaluate(h, [1.0, 2.0], 0.0)
    with pytest.raises(SizeError):
        flow_rhs(np.eye(2), h, np.zeros(4), 0.0)
    with pytest.raises(SizeError):
        StructureMatrix.general(np.eye(3))
    with pytest.raises(UsageError):
        StructureMatrix("symplectic", np.eye(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_gradient_matches_finite_difference(n, seed):
    rng = np.random.default_rng(seed)
    h = QuadraticHamiltonian(n, sym(rng, 2 * n), gvec=rng.uniform(-1, 1, 2 * n), dscal=0.3)
    x = rng.uniform(-1, 1, 2 * n)
    eps = 1e-6
    fd = np.array([(evaluate(h, x + eps * e, 0.0) - evaluate(h, x - eps * e, 0.0)) / (2 * eps)
                   for e in np.eye(2 * n)])
    np.testing.assert_allclose(gradient(h, x, 0.0), fd, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_symplectic_flow_conserves_energy_direction(n, seed):
    # grad H . J grad H = 0 for antisymmetric J
    rng = np.random.default_rng(seed)
    h = QuadraticHamiltonian(n, sym(rng, 2 * n))
    x = rng.uniform(-1, 1, 2 * n)
    g = gradient(h, x, 0.0)
    assert abs(g @ flow_rhs(StructureMatrix.symplectic(n), h, x, 0.0)) <= 1e-12 * max(1.0, g @ g)


def test_state_dependent_needs_derivative():
    def hm(xi, tau):
        return (1.0 + xi[0] ** 2) * np.eye(2)

    h = QuadraticHamiltonian(1, hm, state_dependent=True)
    with pytest.raises(CapabilityError):
        coefficient_set(h, [0.5, 0.1], 0.0)
    with pytest.raises(CapabilityError):
        gradient(h, [0.5, 0.1], 0.0)


def test_state_dependent_gradient_with_derivative():
    def hm(xi, tau):
        return (1.0 + xi[0] ** 2) * np.eye(2)

    def dhm(xi, tau):
        d = np.zeros((2, 2, 2))
        d[0] = 2 * xi[0] * np.eye(2)
        return d

    h = QuadraticHamiltonian(1, hm, state_dependent=True, dhmat=dhm)
    x = np.array([0.5, 0.1])
    eps = 1e-6
    fd = [(evaluate(h, x + eps * e, 0.0) - evaluate(h, x - eps * e, 0.0)) / (2 * eps) for e in np.eye(2)]
    np.testing.assert_allclose(gradient(h, x, 0.0), fd, atol=1e-8)
    cs = coefficient_set(h, x, 0.0)
    # X = H + 1/2 dH/dxi . xi
    np.testing.assert_allclose(cs.zmat, hm(x, 0.0) + 0.5 * np.einsum("lij,i->lj", dhm(x, 0.0), x))


def test_coefficient_set_target_scaling():
    rep = Reparameterization.polynomial([0.0, 2.0])
    h = QuadraticHamiltonian(1, np.eye(2), gvec=[1.0, 0.0])
    src = coefficient_set(h, np.zeros(2), 0.3, rep, side="source")
    tgt = coefficient_set(h, np.zeros(2), 0.3, rep, side="target")
    np.testing.assert_array_equal(src.ybar, np.eye(2))
    np.testing.assert_array_equal(tgt.ybar, 2 * np.eye(2))
    both = pair_coefficients(src, tgt)
    assert isinstance(both, CoefficientSet)
    np.testing.assert_array_equal(both.ybar, tgt.ybar)
    np.testing.assert_array_equal(both.zmat, src.zmat)
    with pytest.raises(UsageError):
        coefficient_set(h, np.zeros(2), 0.0, side="middle")


def test_reparameterizations():
    taus = np.linspace(0, 1, 11)
    assert Reparameterization.identity().max_derivative_error(taus) < 1e-9
    assert Reparameterization.polynomial([0.1, 1.0, 0.5]).max_derivative_error(taus) < 1e-9
    w = Reparameterization.wobble(0.5, 30.0)
    assert w.max_derivative_error(taus) < 1e-6
    assert w.t_of_tau(0.0) == 0.0
