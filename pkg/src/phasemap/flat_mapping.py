"""Exact mapping between two flat Hamiltonians ``1/2 eta^AB P_A P_B``.

Both Hamiltonians have vanishing coordinate blocks, so with the canonical
structure on each side the transport equations collapse to

    T1' = t' Y4 T3,  T2' = t' Y4 T4 - T1 Z4,  T3' = 0,  T4' = -T3 Z4

and integrate in closed form. The first n rows of the coordinate block, pulled
back through a target vielbein and conformal factor, give the coordinate and
momentum mapping matrices W1..W4.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConditioningError, SizeError, UsageError
from .phase_space import Reparameterization, symplectic_matrix
from .transport import BlockMatrix, dense, t_rhs

COND_LIMIT = 1e12
EQUALITY_RTOL = 1e-10


@dataclass(frozen=True)
class FlatHamiltonian:
    signature: np.ndarray

    def __post_init__(self):
        sig = np.array(self.signature, dtype=float).reshape(-1)
        if sig.size == 0 or not np.all(np.abs(sig) == 1.0):
            raise SizeError("signature entries must all be +1 or -1")
        sig.setflags(write=False)
        object.__setattr__(self, "signature", sig)

    @property
    def m(self):
        return self.signature.size

    @property
    def matrix(self):
        return np.diag(self.signature)

    def value(self, momenta):
        p = np.asarray(momenta, dtype=float)
        return 0.5 * float(p @ (self.signature * p))


def _diag_signature(mat, name):
    d = np.asarray(mat, dtype=float)
    if d.ndim == 1:
        d = np.diag(d)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise SizeError(f"{name} must be a square diagonal matrix")
    if np.any(d - np.diag(np.diag(d))) or not np.all(np.abs(np.diag(d)) == 1.0):
        raise SizeError(f"{name} must be diagonal with +1/-1 entries")
    return d


@dataclass(frozen=True)
class ClosedFormT:
    """Analytic mapping matrix between two flat Hamiltonians.

    ``initial`` holds constant offsets ``(C1, C2, C4)`` for the T1, T2, T4
    blocks at tau = 0; by default they vanish.
    """

    t3: np.ndarray
    y4: np.ndarray
    z4: np.ndarray
    rep: Reparameterization = field(default_factory=Reparameterization.identity)
    initial: Optional[tuple] = None

    def __post_init__(self):
        t3 = np.array(self.t3, dtype=float)
        y4 = _diag_signature(self.y4, "y4")
        z4 = _diag_signature(self.z4, "z4")
        if t3.ndim != 2 or t3.shape != y4.shape or y4.shape != z4.shape:
            raise SizeError("t3, y4 and z4 must share one square shape")
        for name, val in (("t3", t3), ("y4", y4), ("z4", z4)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        if self.initial is not None:
            c1, c2, c4 = (np.asarray(c, dtype=float) for c in self.initial)
            object.__setattr__(self, "initial", (c1, c2, c4))

    @property
    def m(self):
        return self.t3.shape[0]

    def offsets(self):
        if self.initial is None:
            z = np.zeros_like(self.t3)
            return z, z, z
        return self.initial


def closed_form_T(cf: ClosedFormT, tau) -> BlockMatrix:
    """T blocks at ``tau``: ``T1 = Y4 T3 t``, ``T2 = -Y4 T3 Z4 t tau``, ``T4 = -T3 Z4 tau``."""
    t = cf.rep.t_of_tau(tau)
    t0 = cf.rep.t_of_tau(0.0)
    c1, c2, c4 = cf.offsets()
    y4t3 = cf.y4 @ cf.t3
    t1 = y4t3 * (t - t0) + c1
    t2 = -y4t3 @ cf.z4 * (t * tau) + cf.y4 @ c4 * (t - t0) - c1 @ cf.z4 * tau + c2
    t4 = -cf.t3 @ cf.z4 * tau + c4
    return BlockMatrix(t1, t2, cf.t3, t4)


def closed_form_dT(cf: ClosedFormT, tau) -> BlockMatrix:
    """Analytic tau-derivative of :func:`closed_form_T`."""
    t = cf.rep.t_of_tau(tau)
    td = cf.rep.dt_dtau(tau)
    c1, _, c4 = cf.offsets()
    y4t3 = cf.y4 @ cf.t3
    d1 = y4t3 * td
    d2 = -y4t3 @ cf.z4 * (td * tau + t) + cf.y4 @ c4 * td - c1 @ cf.z4
    d4 = -cf.t3 @ cf.z4
    return BlockMatrix(d1, d2, np.zeros_like(cf.t3), d4)


def flat_coefficients(y4, z4, dt_dtau=1.0):
    """Dense ``(Z, Ybar)`` for a flat source and target; only the fourth block is nonzero."""
    y4 = _diag_signature(y4, "y4")
    z4 = _diag_signature(z4, "z4")
    zero = np.zeros_like(z4)
    zmat = BlockMatrix(zero, zero, zero, z4).assemble()
    ybar = BlockMatrix(zero, zero, zero, dt_dtau * y4).assemble()
    return zmat, ybar


def closed_form_residual(cf: ClosedFormT, taus) -> float:
    """Max-abs gap between the analytic derivative and the transport right-hand side."""
    j = symplectic_matrix(cf.m)
    zmat, ybar = flat_coefficients(cf.y4, cf.z4)
    worst = 0.0
    for tau in taus:
        rhs = t_rhs(closed_form_T(cf, tau), j, zmat, j, ybar * cf.rep.dt_dtau(tau)).assemble()
        lhs = closed_form_dT(cf, tau).assemble()
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def map_phase(t, state) -> np.ndarray:
    """Apply ``T`` to ``(Y, P)``: ``(T1 Y + T2 P, T3 Y + T4 P)``."""
    tm = dense(t)
    s = np.asarray(state, dtype=float).reshape(-1)
    if tm.ndim != 2 or tm.shape[1] != s.size:
        raise SizeError(f"state of length {s.size} does not match T of shape {tm.shape}")
    return tm @ s


def _check_frame(mat, name):
    m = np.asarray(mat, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SizeError(f"{name} must be square")
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(f"{name} is not invertible (cond={cond:.3g})", cond=cond)
    return m


def build_w12(sigma_bar, ebar_inv, t1, t2):
    """Coordinate mapping matrices ``W1, W2`` (n x m).

    ``ebar_inv`` is the inverse target vielbein (coordinate index first); it
    selects the first n rows of the T1 and T2 blocks.
    """
    einv = _check_frame(ebar_inv, "inverse vielbein")
    n = einv.shape[0]
    t1, t2 = np.asarray(t1, dtype=float), np.asarray(t2, dtype=float)
    if t1.shape != t2.shape or t1.shape[0] < n:
        raise SizeError("T1/T2 must be m x m with m >= n")
    factor = np.exp(-sigma_bar) * einv
    return factor @ t1[:n], factor @ t2[:n]


@dataclass(frozen=True)
class MappingMatrices:
    """W1, W2 map ``(Y, P)`` to target coordinates; W3, W4 (lowered) to momenta."""

    w1: np.ndarray
    w2: np.ndarray
    w3: np.ndarray
    w4: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    m4: np.ndarray
    variant: str = "consistent"


def _frame_factor(sigma_fn, einv_fn, t):
    return np.exp(-sigma_fn(t)) * _check_frame(einv_fn(t), "inverse vielbein")


def build_w34(sigma_bar: Callable, ebar_inv: Callable, y4, tblocks: BlockMatrix, t, gbar,
              variant="consistent", step=None):
    """Momentum mapping matrices.

    ``M1, M2`` carry the t-derivative of ``exp(-sigma) E^-1`` (central
    difference); ``M3, M4`` the target flow ``Y4 (T3, T4)``. The
    ``"consistent"`` variant pairs the derivative with T1 in ``M1`` as the
    product rule requires; ``"literal"`` pairs it with T2, as sometimes
    printed. Returns ``(M1, M2, M3, M4, W3_lowered, W4_lowered)``.
    """
    if variant not in ("consistent", "literal"):
        raise UsageError(f"unknown variant {variant!r}")
    y4 = _diag_signature(y4, "y4")
    t1, t2, t3, t4 = tblocks.blocks()
    h = (1e-5 if step is None else step) * max(1.0, abs(t))
    factor = _frame_factor(sigma_bar, ebar_inv, t)
    n = factor.shape[0]
    dfactor = (_frame_factor(sigma_bar, ebar_inv, t + h)
               - _frame_factor(sigma_bar, ebar_inv, t - h)) / (2 * h)
    m1 = dfactor @ (t1 if variant == "consistent" else t2)[:n]
    m2 = dfactor @ t2[:n]
    m3 = factor @ (y4 @ t3)[:n]
    m4 = factor @ (y4 @ t4)[:n]
    g = np.asarray(gbar, dtype=float)
    if g.shape != (n, n):
        raise SizeError(f"target metric must be {n}x{n}")
    return m1, m2, m3, m4, g @ (m1 + m3), g @ (m2 + m4)


def mapping_matrices(sigma_bar, ebar_inv, y4, tblocks, t, gbar, variant="consistent"):
    w1, w2 = build_w12(sigma_bar(t), ebar_inv(t), tblocks.b1, tblocks.b2)
    m1, m2, m3, m4, w3, w4 = build_w34(sigma_bar, ebar_inv, y4, tblocks, t, gbar, variant)
    return MappingMatrices(w1, w2, w3, w4, m1, m2, m3, m4, variant)


def map_coordinates(w: MappingMatrices, Y, P):
    """``u_bar = W1 Y + W2 P`` and ``p_bar = W3 Y + W4 P``."""
    y, p = np.asarray(Y, dtype=float), np.asarray(P, dtype=float)
    if y.shape != (w.w1.shape[1],) or p.shape != (w.w2.shape[1],):
        raise SizeError("Y and P must have length m")
    return w.w1 @ y + w.w2 @ p, w.w3 @ y + w.w4 @ p


@dataclass(frozen=True)
class EqualityReport:
    values: tuple
    max_difference: float
    tolerance: float
    passed: bool


def hamiltonian_equality_check(q_val, hhat_val, h_val, rtol=EQUALITY_RTOL) -> EqualityReport:
    vals = (float(q_val), float(hhat_val), float(h_val))
    diff = max(abs(vals[0] - vals[1]), abs(vals[0] - vals[2]), abs(vals[1] - vals[2]))
    tol = rtol * max(1.0, abs(vals[2]))
    return EqualityReport(vals, diff, tol, bool(diff <= tol))


@dataclass(frozen=True)
class OracleScenario:
    """Source flat flow plus a target frame along which momenta are mapped."""

    cf: ClosedFormT
    sigma_bar: Callable
    ebar_inv: Callable
    gbar: np.ndarray
    y0: np.ndarray
    p0: np.ndarray


def hamilton_oracle_gap(sc: OracleScenario, tau, variant="consistent", step=1e-4):
    """Relative gap between mapped momenta and ``Gbar du_bar/dt``.

    The source moves freely, ``Y(tau) = Y0 + Z4 P0 tau``; ``u_bar`` is
    differentiated along tau by a central difference and divided by dt/dtau.
    """
    z4 = sc.cf.z4

    def state(tt):
        return sc.y0 + z4 @ sc.p0 * tt, sc.p0

    def ubar(tt):
        tb = closed_form_T(sc.cf, tt)
        t = sc.cf.rep.t_of_tau(tt)
        w1, w2 = build_w12(sc.sigma_bar(t), sc.ebar_inv(t), tb.b1, tb.b2)
        y, p = state(tt)
        return w1 @ y + w2 @ p

    h = step * max(1.0, abs(tau))
    du_dt = (ubar(tau + h) - ubar(tau - h)) / (2 * h) / sc.cf.rep.dt_dtau(tau)
    oracle = sc.gbar @ du_dt
    t = sc.cf.rep.t_of_tau(tau)
    w = mapping_matrices(sc.sigma_bar, sc.ebar_inv, sc.cf.y4, closed_form_T(sc.cf, tau), t,
                         sc.gbar, variant)
    y, p = state(tau)
    _, pbar = map_coordinates(w, y, p)
    return float(np.max(np.abs(pbar - oracle)) / max(1.0, np.max(np.abs(oracle))))


def resolve_momentum_variant(sc: OracleScenario, taus, tol=1e-6):
    """Run the Hamilton-equation oracle on both M-matrix variants.

    Returns ``{variant: max_gap}`` and the list of variants within ``tol``.
    """
    gaps = {v: max(hamilton_oracle_gap(sc, tau, v) for tau in taus)
            for v in ("literal", "consistent")}
    return gaps, [v for v, g in gaps.items() if g <= tol]
