import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasemap import riccati as rc
from phasemap.errors import ConditioningError, SizeError, UsageError
from phasemap.polynomials import MatrixPolynomial
from phasemap.rng import SplitMix64

N = 6
Y4 = np.diag([1, 1, 1, 1, 1, -1.0])
Z4 = np.diag([1, 1, 1, -1, 1, -1.0])
GRID = np.linspace(0.0, 1.0, 101)


def const_traj(a, taus=GRID):
    return rc.sample(lambda t: a, taus)


def test_residuals_vanish_for_constant_a_and_zero_terms():
    rng = np.random.default_rng(0)
    a = rng.uniform(-1, 1, (4, 4))
    s = np.eye(4) + 0.1 * rng.uniform(-1, 1, (4, 4))
    r = np.eye(4) + 0.1 * rng.uniform(-1, 1, (4, 4))
    z = np.zeros((4, 4))
    assert rc.riccati_residual(const_traj(a), s, r, z, z, z, z) == 0.0
    assert rc.compatibility_residual(s, const_traj(a), r, z, z, z, z) == 0.0
    assert rc.compatibility_residual(s, const_traj(2 * a), r, z, z, z, z) == 0.0


def test_algebraic_balance_with_identity_a():
    rng = np.random.default_rng(1)
    s = 3 * np.eye(4) + rng.uniform(-1, 1, (4, 4))
    r = 3 * np.eye(4) + rng.uniform(-1, 1, (4, 4))
    d, e = rng.uniform(-1, 1, (4, 4)), rng.uniform(-1, 1, (4, 4))
    fg = -(np.linalg.solve(s, d) + e @ np.linalg.inv(r))
    res = rc.riccati_residual(const_traj(np.eye(4)), s, r, d, e, fg, np.zeros((4, 4)))
    assert res <= 1e-13


def test_riccati_gate_refuses_singular_and_names_tau():
    z = np.zeros((2, 2))
    s = np.diag([1.0, 0.0])
    with pytest.raises(ConditioningError, match="tau="):
        rc.riccati_residual(const_traj(np.eye(2)), s, np.eye(2), z, z, z, z)


def test_compatibility_shape_mismatch():
    z = np.zeros((2, 2))
    with pytest.raises(SizeError):
        rc.compatibility_residual(np.eye(3), const_traj(np.eye(2)), np.eye(2), z, z, z, z)


def test_nonsingular_exact_solution_and_fourth_order():
    rng = SplitMix64(5)
    a0 = np.linalg.inv(3.0 * np.eye(4) + rng.symmetric((4, 4)) / 4)
    k = rng.symmetric((4, 4)) / 4
    amat = rc.inverse_linear_solution(a0, k)
    eye, zero = np.eye(4), np.zeros((4, 4))
    res = [rc.riccati_residual(rc.sample(amat, np.linspace(0, 1, pts)), eye, eye, zero, zero, -k, zero)
           for pts in (11, 21, 1001)]
    assert res[2] <= 1e-8
    assert 10.0 <= res[0] / res[1] <= 22.0


def zero_params(**kw):
    base = dict(s3=np.eye(N), s4=np.zeros((N, N)), r1=np.eye(N), r3=np.zeros((N, N)))
    base.update(kw)
    return rc.RiccatiFamilyParams(**base)


def test_zero_member():
    member = rc.build_family(zero_params(), "first", Y4, Z4)
    for tau in (0.0, 0.5, 1.0):
        np.testing.assert_array_equal(member.amat(tau), 0.0)
        np.testing.assert_array_equal(member.tblocks(tau).assemble(), 0.0)
    rep = rc.verify_member(member, None, GRID)
    assert rep.max_T_mismatch == 0.0 and rep.compat_residual == 0.0
    assert rep.passed


def test_quadratic_f_member_compatibility():
    f = MatrixPolynomial(np.array([np.zeros((N, N)), np.zeros((N, N)), np.eye(N)]))
    p = zero_params(f=f, a3fun=0.3 * np.eye(N), a4fun=-0.2 * np.eye(N))
    rep = rc.verify_member(rc.build_family(p, "first", Y4, Z4), None, GRID)
    assert rep.compat_residual <= 1e-8
    assert rep.max_T_mismatch <= 1e-10


def test_distinct_draws_give_distinct_a1_within_bounds():
    rng = SplitMix64(9)
    members = [rc.build_family(rc.random_params(rng, N, 3, "first"), "first", Y4, Z4) for _ in range(2)]
    a1 = [m.amat(0.5)[:N, :N] for m in members]
    assert np.max(np.abs(a1[0] - a1[1])) > 1e-3
    for m in members:
        assert rc.verify_member(m, None, GRID).compat_residual <= 1e-8


@pytest.mark.parametrize("variant,key", [("first", "v1"), ("second", "u1")])
def test_family_draws_and_fault_detection(variant, key):
    rng = SplitMix64(2024)
    for _ in range(5):
        params = rc.random_params(rng, N, 3, variant)
        member = rc.build_family(params, variant, Y4, Z4)
        rep = rc.verify_member(member, None, GRID)
        assert rep.max_T_mismatch <= 1e-10
        assert rep.compat_residual <= 1e-8
        assert rep.riccati_residual is None or rep.riccati_residual <= 1e-8
        assert rep.passed
    bad = rc.build_family(dataclasses.replace(params, **{key: getattr(params, key) + 1e-3}),
                          variant, Y4, Z4)
    assert rc.verify_member(bad, member.closed_form, GRID).max_T_mismatch >= 1e-4


def test_riccati_gate_reported_for_rank_deficient_factors():
    rep = rc.verify_member(rc.build_family(rc.random_params(SplitMix64(1), N), "first", Y4, Z4),
                           None, GRID)
    assert rep.riccati_residual is None and rep.riccati_gate.startswith("refused")


def test_running_integral_changes_a_with_tau():
    rng = SplitMix64(3)
    params = rc.random_params(rng, 3, 2, "first", integral="running")
    member = rc.build_family(params, "first")
    assert np.max(np.abs(member.amat(0.2) - member.amat(0.8))) > 0.0
    assert rc.verify_member(member, None, GRID).compat_residual >= 0.0


def test_family_usage_errors():
    with pytest.raises(UsageError):
        rc.build_family(zero_params(a2fun=np.eye(N)), "first")
    with pytest.raises(UsageError):
        rc.build_family(zero_params(a3fun=np.eye(N)), "second")
    with pytest.raises(UsageError):
        rc.build_family(zero_params(), "third")
    with pytest.raises(UsageError):
        rc.build_family(zero_params(integral="sideways", f=np.eye(N)), "first")
    with pytest.raises(ConditioningError):
        rc.build_family(zero_params(s3=np.zeros((N, N))), "first")
    with pytest.raises(SizeError):
        rc.build_family(zero_params(f=np.eye(3)), "first")


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_reduction_trajectories_agree(seed):
    rng = SplitMix64(seed)
    d = 4
    ybar, z, a = (rng.symmetric((d, d)) for _ in range(3))
    s0 = rng.symmetric((d, d)) + 2 * np.eye(d)
    r0 = rng.symmetric((d, d)) + 2 * np.eye(d)
    f = MatrixPolynomial(rng.symmetric((2, d, d)))
    g = MatrixPolynomial(rng.symmetric((2, d, d)))
    rep = rc.reduction_check(ybar, z, a, s0, r0, f, g, steps=400)
    assert rep.s_difference <= 1e-9 and rep.r_difference <= 1e-9
    assert rep.passed
