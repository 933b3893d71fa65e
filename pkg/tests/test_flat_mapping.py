import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasemap import flat_mapping as fm
from phasemap.errors import ConditioningError, SizeError, UsageError
from phasemap.phase_space import Reparameterization, symplectic_matrix
from phasemap.transport import BlockMatrix, t_rhs

SIG_Y = np.diag([1, 1, 1, 1, 1, -1.0])
SIG_Z = np.diag([1, 1, 1, -1, 1, -1.0])
TAUS = np.linspace(0.0, 1.0, 101)


def rand(seed, *shape):
    return np.random.default_rng(seed).uniform(-1, 1, shape)


def test_initial_condition():
    t3 = rand(0, 6, 6)
    tb = fm.closed_form_T(fm.ClosedFormT(t3, SIG_Y, SIG_Z), 0.0)
    for blk in (tb.b1, tb.b2, tb.b4):
        np.testing.assert_array_equal(blk, 0.0)
    np.testing.assert_array_equal(tb.b3, t3)


def test_identity_t3_equal_signatures():
    cf = fm.ClosedFormT(np.eye(6), SIG_Y, SIG_Y)
    assert fm.closed_form_residual(cf, TAUS) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_closed_form_residual(seed):
    cf = fm.ClosedFormT(rand(seed, 6, 6), SIG_Y, SIG_Z, Reparameterization.polynomial([0.0, 1.0, 0.3]))
    assert fm.closed_form_residual(cf, TAUS) <= 1e-10


def test_closed_form_derivative_matches_differencing():
    cf = fm.ClosedFormT(rand(1, 6, 6), SIG_Y, SIG_Z, Reparameterization.wobble(0.5, 30.0),
                        initial=(rand(2, 6, 6), rand(3, 6, 6), rand(4, 6, 6)))
    h = 1e-5
    for tau in (0.2, 0.7):
        fd = (fm.closed_form_T(cf, tau + h).assemble() - fm.closed_form_T(cf, tau - h).assemble()) / (2 * h)
        np.testing.assert_allclose(fm.closed_form_dT(cf, tau).assemble(), fd, atol=1e-6)
    assert fm.closed_form_residual(cf, TAUS) <= 1e-10


def test_minus_sign_in_t4_is_required():
    # dT4/dtau = -T3 Z4 only with the minus sign
    cf = fm.ClosedFormT(rand(5, 6, 6), SIG_Y, SIG_Z)
    tb = fm.closed_form_T(cf, 0.5)
    assert np.allclose(tb.b4, -cf.t3 @ SIG_Z * 0.5)


def test_closed_form_validation():
    with pytest.raises(SizeError):
        fm.ClosedFormT(np.eye(6), np.diag([1, 1, 1, 1, 1, 2.0]), SIG_Z)
    with pytest.raises(SizeError):
        fm.ClosedFormT(np.eye(5), SIG_Y, SIG_Z)
    with pytest.raises(SizeError):
        fm.FlatHamiltonian([1.0, 0.5])


def test_map_phase():
    y = np.arange(1.0, 5.0)
    np.testing.assert_array_equal(fm.map_phase(np.eye(4), y), y)
    swap = BlockMatrix(np.zeros((2, 2)), np.eye(2), np.eye(2), np.zeros((2, 2)))
    np.testing.assert_array_equal(fm.map_phase(swap, y), [3, 4, 1, 2])
    t = rand(6, 4, 4)
    np.testing.assert_allclose(fm.map_phase(t, y), t @ y, atol=1e-13)
    with pytest.raises(SizeError):
        fm.map_phase(t, np.ones(3))


def test_w12_cases():
    n, m = 4, 6
    t1 = np.hstack([np.eye(n), np.zeros((n, m - n))])
    t1 = np.vstack([t1, np.zeros((m - n, m))])
    w1, w2 = fm.build_w12(0.0, np.eye(n), t1, np.zeros((m, m)))
    np.testing.assert_array_equal(w1, t1[:n])
    a1, a2 = fm.build_w12(0.2, rand(7, n, n) + 3 * np.eye(n), rand(8, m, m), rand(9, m, m))
    b1, b2 = fm.build_w12(0.2 + np.log(2.0), rand(7, n, n) + 3 * np.eye(n), rand(8, m, m), rand(9, m, m))
    np.testing.assert_allclose(b1, a1 / 2, rtol=1e-15)
    np.testing.assert_allclose(b2, a2 / 2, rtol=1e-15)
    einv = rand(10, n, n) + 3 * np.eye(n)
    t2 = rand(11, m, m)
    _, got = fm.build_w12(0.4, einv, t1, t2)
    np.testing.assert_allclose(got, np.exp(-0.4) * einv @ t2[:n], atol=1e-13)
    with pytest.raises(ConditioningError):
        fm.build_w12(0.0, np.zeros((n, n)), t1, t2)


def test_w34_constant_frame():
    n, m = 4, 6
    tb = fm.closed_form_T(fm.ClosedFormT(rand(12, m, m), SIG_Y, SIG_Z), 0.6)
    einv = rand(13, n, n) + 3 * np.eye(n)
    m1, m2, m3, m4, w3, w4 = fm.build_w34(lambda t: 0.0, lambda t: einv, SIG_Y, tb, 0.6, np.eye(n))
    np.testing.assert_array_equal(m1, 0.0)
    np.testing.assert_array_equal(m2, 0.0)
    np.testing.assert_array_equal(w3, m3)
    np.testing.assert_array_equal(w4, m4)
    with pytest.raises(UsageError):
        fm.build_w34(lambda t: 0.0, lambda t: einv, SIG_Y, tb, 0.6, np.eye(n), variant="other")


def test_map_coordinates():
    n, m = 2, 4
    z = np.zeros((n, m))
    w = fm.MappingMatrices(z, z, z, z, z, z, z, z)
    u, p = fm.map_coordinates(w, np.ones(m), np.ones(m))
    np.testing.assert_array_equal(u, 0.0)
    np.testing.assert_array_equal(p, 0.0)
    w1 = np.hstack([np.eye(n), np.zeros((n, m - n))])
    w = fm.MappingMatrices(w1, z, z, z, z, z, z, z)
    u, _ = fm.map_coordinates(w, np.arange(4.0), np.ones(m))
    np.testing.assert_array_equal(u, [0.0, 1.0])
    mats = [rand(20 + i, n, m) for i in range(4)]
    w = fm.MappingMatrices(*mats, *mats)
    y, pp = rand(30, m), rand(31, m)
    u, p = fm.map_coordinates(w, y, pp)
    np.testing.assert_allclose(u, mats[0] @ y + mats[1] @ pp, atol=1e-13)
    np.testing.assert_allclose(p, mats[2] @ y + mats[3] @ pp, atol=1e-13)


def test_hamiltonian_equality():
    assert fm.hamiltonian_equality_check(0.0, 0.0, 0.0).passed
    assert fm.hamiltonian_equality_check(1.25, 1.25, 1.25).passed
    assert not fm.hamiltonian_equality_check(1.25, 1.25 + 1e-6, 1.25).passed
    flat = fm.FlatHamiltonian([1, 1, 1, 1, 1, -1.0])
    assert flat.value([0, 0, 0, 0, 1, 1.0]) == 0.0


def _oracle_scenario(seed):
    rng = np.random.default_rng(seed)
    n, m = 4, 6
    e = np.eye(n) + 0.3 * rng.uniform(-1, 1, (n, n))
    einv = np.linalg.inv(e)
    g = e.T @ np.diag([1, 1, 1, -1.0]) @ e
    cf = fm.ClosedFormT(rng.uniform(-1, 1, (m, m)), SIG_Y, SIG_Z)
    return fm.OracleScenario(cf, lambda t: 0.3 * t + 0.1 * np.sin(t), lambda t: einv, g,
                             rng.uniform(-1, 1, m), rng.uniform(-1, 1, m))


def test_momentum_oracle_resolves_one_variant():
    gaps, passing = fm.resolve_momentum_variant(_oracle_scenario(40), np.linspace(0.1, 1.0, 10))
    assert passing == ["consistent"]
    assert gaps["consistent"] <= 1e-6 < gaps["literal"]


def test_momentum_oracle_constant_factor_both_agree():
    sc = _oracle_scenario(41)
    sc = fm.OracleScenario(sc.cf, lambda t: 0.0, sc.ebar_inv, sc.gbar, sc.y0, sc.p0)
    gaps, passing = fm.resolve_momentum_variant(sc, [0.3, 0.8])
    assert sorted(passing) == ["consistent", "literal"]


def test_unsigned_t4_form_fails_transport_equations():
    # T4 = +T3 Z4 tau (no minus) violates dT/dtau = J Ybar T - T J Z
    cf = fm.ClosedFormT(rand(50, 6, 6), SIG_Y, SIG_Z)
    j = symplectic_matrix(6)
    zmat, ybar = fm.flat_coefficients(SIG_Y, SIG_Z)
    tau = 0.7
    good = fm.closed_form_T(cf, tau)
    bad = BlockMatrix(good.b1, good.b2, good.b3, -good.b4)
    dbad = fm.closed_form_dT(cf, tau)
    dbad = BlockMatrix(dbad.b1, dbad.b2, dbad.b3, -dbad.b4)
    gap = np.max(np.abs(dbad.assemble() - t_rhs(bad, j, zmat, j, ybar).assemble()))
    assert gap > 0.1
