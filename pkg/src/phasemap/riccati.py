"""Matrix Riccati equation for the middle factor of ``T = S A R``.

With ``S' = B Ybar S + D + S A F`` and ``R' = -R C Z + E + G A R`` the
product ``S A R`` obeys the transport equation exactly when

    S A' R + D A R + S A E + S A (F + G) A R = 0,

which for invertible S, R is the Riccati equation

    A' + S^-1 D A + A E R^-1 + A (F + G) A = 0.

For the flat pair of Hamiltonians the S and R systems are solved in closed
form and A can be chosen from an infinite family indexed by arbitrary
polynomial matrix functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConditioningError, SizeError, UsageError
from .flat_mapping import ClosedFormT, _diag_signature, closed_form_T
from .phase_space import Reparameterization
from .polynomials import MAX_DEGREE, MatrixPolynomial
from .transport import Trajectory, central_difference, compose_T, dense

COND_LIMIT = 1e12


def _fn(obj):
    if obj is None:
        return None
    if callable(obj):
        return lambda tau: dense(obj(tau))
    fixed = dense(obj)
    return lambda tau: fixed


def sample(fn, taus) -> Trajectory:
    """Evaluate a matrix function on a grid."""
    taus = np.asarray(taus, dtype=float)
    return Trajectory(taus, np.array([dense(fn(t)) for t in taus]))


def _checked_inverse(mat, name, tau):
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(
            f"{name} is singular or ill-conditioned at tau={'n/a' if tau is None else format(float(tau), '.17g')}"
            f" (cond={cond:.3g})",
            tau=tau, cond=cond,
        )
    return np.linalg.inv(mat)


def riccati_residual(a_traj: Trajectory, s, r, d, e, f, g) -> float:
    """Max-abs residual of ``A' + S^-1 D A + A E R^-1 + A (F+G) A`` over interior samples.

    ``A'`` comes from central differences of ``a_traj``. Refuses with
    :class:`ConditioningError` when S or R fails the conditioning gate.
    """
    sf, rf, df, ef, ff, gf = (_fn(x) for x in (s, r, d, e, f, g))
    idx, adot = central_difference(a_traj)
    worst = 0.0
    for i, ad in zip(idx, adot):
        tau = a_traj.taus[i]
        a = a_traj.states[i]
        sinv = _checked_inverse(sf(tau), "S", tau)
        rinv = _checked_inverse(rf(tau), "R", tau)
        res = ad + sinv @ df(tau) @ a + a @ ef(tau) @ rinv + a @ (ff(tau) + gf(tau)) @ a
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def compatibility_residual(s, a_traj: Trajectory, r, d, e, f, g) -> float:
    """Max-abs of ``S A' R + D A R + S A E + S A (F+G) A R`` over interior samples."""
    sf, rf, df, ef, ff, gf = (_fn(x) for x in (s, r, d, e, f, g))
    idx, adot = central_difference(a_traj)
    worst = 0.0
    for i, ad in zip(idx, adot):
        tau = a_traj.taus[i]
        a = a_traj.states[i]
        sm, rm = sf(tau), rf(tau)
        mats = (sm, rm, df(tau), ef(tau), ff(tau), gf(tau), a, ad)
        if len({m.shape for m in mats}) != 1:
            raise SizeError("all matrices in the compatibility condition must share one shape")
        res = sm @ ad @ rm + df(tau) @ a @ rm + sm @ a @ ef(tau) + sm @ a @ (ff(tau) + gf(tau)) @ a @ rm
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def _poly(obj, n, name):
    if obj is None:
        return MatrixPolynomial.zeros(n)
    p = obj if isinstance(obj, MatrixPolynomial) else MatrixPolynomial.constant(obj)
    if p.shape != (n, n):
        raise SizeError(f"{name} must be {n}x{n}, got {p.shape}")
    if p.degree > MAX_DEGREE:
        raise UsageError(f"{name} has degree {p.degree} > {MAX_DEGREE}")
    return p


@dataclass(frozen=True)
class RiccatiFamilyParams:
    """Constants and arbitrary functions indexing one family member.

    Matrix functions are :class:`MatrixPolynomial` instances (constants are
    accepted). ``fblocks``/``gblocks`` are the 2n x 2n F and G matrices.
    ``integral`` selects how the arbitrary integrand enters A: ``"definite"``
    integrates over ``[lower_limit, upper_limit]`` (a constant), ``"running"``
    uses the antiderivative from ``lower_limit`` to tau.
    """

    s3: np.ndarray
    s4: np.ndarray
    r1: np.ndarray
    r3: np.ndarray
    v1: Optional[np.ndarray] = None
    v2: Optional[np.ndarray] = None
    u1: Optional[np.ndarray] = None
    u2: Optional[np.ndarray] = None
    f: Optional[MatrixPolynomial] = None
    g: Optional[MatrixPolynomial] = None
    l: Optional[MatrixPolynomial] = None
    m: Optional[MatrixPolynomial] = None
    a2fun: Optional[MatrixPolynomial] = None
    a3fun: Optional[MatrixPolynomial] = None
    a4fun: Optional[MatrixPolynomial] = None
    fblocks: Optional[MatrixPolynomial] = None
    gblocks: Optional[MatrixPolynomial] = None
    lower_limit: float = 0.0
    upper_limit: float = 1.0
    integral: str = "definite"
    t3: Optional[np.ndarray] = None

    @property
    def n(self):
        return np.asarray(self.s3).shape[0]


@dataclass(frozen=True)
class FamilyMember:
    """Closed-form S, R, A, D, E (with F, G) of one family member."""

    variant: str
    n: int
    smat: Callable
    rmat: Callable
    amat: MatrixPolynomial
    dmat: Callable
    emat: Callable
    fmat: Callable
    gmat: Callable
    closed_form: ClosedFormT
    implied_t3: np.ndarray = field(repr=False)

    def tblocks(self, tau):
        return compose_T(self.smat(tau), self.amat(tau), self.rmat(tau))


def _integrated(p: MatrixPolynomial, params: RiccatiFamilyParams):
    if params.integral == "definite":
        return MatrixPolynomial.constant(p.integral(params.lower_limit, params.upper_limit))
    if params.integral == "running":
        return p.antiderivative(params.lower_limit)
    raise UsageError(f"integral must be 'definite' or 'running', got {params.integral!r}")


def _middle_factor(params: RiccatiFamilyParams, variant: str):
    n = params.n
    zero = np.zeros((n, n))
    const = {k: zero if getattr(params, k) is None else np.asarray(getattr(params, k), dtype=float)
             for k in ("v1", "v2", "u1", "u2")}
    if variant == "first":
        if params.a2fun is not None:
            raise UsageError("the first variant takes a3fun/a4fun; a2fun is not free")
        s3inv = _checked_inverse(np.asarray(params.s3, dtype=float), "S3", None)
        s4 = np.asarray(params.s4, dtype=float)
        a3 = _poly(params.a3fun, n, "a3fun")
        a4 = _poly(params.a4fun, n, "a4fun")
        a1 = (a3.lmul(-s3inv @ s4) + _integrated(_poly(params.f, n, "f"), params).lmul(s3inv)
              + MatrixPolynomial.constant(const["v1"]))
        a2 = (a4.lmul(-s3inv @ s4) + _integrated(_poly(params.g, n, "g"), params).lmul(s3inv)
              + MatrixPolynomial.constant(const["v2"]))
    elif variant == "second":
        if params.a3fun is not None:
            raise UsageError("the second variant takes a2fun/a4fun; a3fun is not free")
        r1inv = _checked_inverse(np.asarray(params.r1, dtype=float), "R1", None)
        r3 = np.asarray(params.r3, dtype=float)
        a2 = _poly(params.a2fun, n, "a2fun")
        a4 = _poly(params.a4fun, n, "a4fun")
        a1 = (a2.rmul(-r3 @ r1inv) + _integrated(_poly(params.l, n, "l"), params).lmul(r1inv)
              + MatrixPolynomial.constant(const["u1"]))
        a3 = (a4.rmul(-r3 @ r1inv) + _integrated(_poly(params.m, n, "m"), params).lmul(r1inv)
              + MatrixPolynomial.constant(const["u2"]))
    else:
        raise UsageError(f"variant must be 'first' or 'second', got {variant!r}")
    return MatrixPolynomial.block([[a1, a2], [a3, a4]])


def build_family(params: RiccatiFamilyParams, variant="first", y4=None, z4=None,
                 rep: Optional[Reparameterization] = None) -> FamilyMember:
    """Assemble S, R, A, D, E for one member of the exact solution family.

    ``S = [[Y4 S3 t, Y4 S4 t], [S3, S4]]`` and
    ``R = [[R1, -R1 Z4 tau], [R3, -R3 Z4 tau]]`` solve the reduced S and R
    systems for the flat pair; ``D = -S A F`` and ``E = -G A R`` blockwise.
    """
    n = params.n
    rep = Reparameterization.identity() if rep is None else rep
    y4 = _diag_signature(np.eye(n) if y4 is None else y4, "y4")
    z4 = _diag_signature(np.eye(n) if z4 is None else z4, "z4")
    s3, s4, r1, r3 = (np.asarray(getattr(params, k), dtype=float) for k in ("s3", "s4", "r1", "r3"))
    for name, mat in (("s3", s3), ("s4", s4), ("r1", r1), ("r3", r3), ("y4", y4), ("z4", z4)):
        if mat.shape != (n, n):
            raise SizeError(f"{name} must be {n}x{n}")
    _checked_inverse(s3, "S3", None)
    _checked_inverse(r1, "R1", None)
    amat = _middle_factor(params, variant)
    fpoly = params.fblocks if params.fblocks is not None else MatrixPolynomial.zeros(2 * n)
    gpoly = params.gblocks if params.gblocks is not None else MatrixPolynomial.zeros(2 * n)
    for name, p in (("fblocks", fpoly), ("gblocks", gpoly)):
        if p.shape != (2 * n, 2 * n):
            raise SizeError(f"{name} must be {2 * n}x{2 * n}")

    def smat(tau):
        t = rep.t_of_tau(tau)
        return np.block([[y4 @ s3 * t, y4 @ s4 * t], [s3, s4]])

    def rmat(tau):
        return np.block([[r1, -r1 @ z4 * tau], [r3, -r3 @ z4 * tau]])

    def blocks(mat):
        return mat[:n, :n], mat[:n, n:], mat[n:, :n], mat[n:, n:]

    def dmat(tau):
        a1, a2, a3, a4 = blocks(amat(tau))
        f1, f2, f3, f4 = blocks(fpoly(tau))
        d3 = -(s3 @ (a1 @ f1 + a2 @ f3) + s4 @ (a3 @ f1 + a4 @ f3))
        d4 = -(s3 @ (a1 @ f2 + a2 @ f4) + s4 @ (a3 @ f2 + a4 @ f4))
        t = rep.t_of_tau(tau)
        return np.block([[y4 @ d3 * t, y4 @ d4 * t], [d3, d4]])

    def emat(tau):
        a1, a2, a3, a4 = blocks(amat(tau))
        g1, g2, g3, g4 = blocks(gpoly(tau))
        col1 = a1 @ r1 + a2 @ r3
        col2 = a3 @ r1 + a4 @ r3
        e1 = -(g1 @ col1 + g2 @ col2)
        e3 = -(g3 @ col1 + g4 @ col2)
        return np.block([[e1, -e1 @ z4 * tau], [e3, -e3 @ z4 * tau]])

    a0 = amat(params.lower_limit)
    implied = np.hstack([s3, s4]) @ a0 @ np.vstack([r1, r3])
    t3 = implied if params.t3 is None else np.asarray(params.t3, dtype=float)
    return FamilyMember(
        variant=variant, n=n, smat=smat, rmat=rmat, amat=amat, dmat=dmat, emat=emat,
        fmat=lambda tau: fpoly(tau), gmat=lambda tau: gpoly(tau),
        closed_form=ClosedFormT(t3, y4, z4, rep), implied_t3=implied,
    )


@dataclass(frozen=True)
class MemberReport:
    max_T_mismatch: float
    compat_residual: float
    riccati_residual: Optional[float]
    riccati_gate: str
    tolerances: dict
    passed: bool


DEFAULT_TOLERANCES = {"t_mismatch": 1e-10, "compatibility": 1e-8, "riccati": 1e-8}


def verify_member(member: FamilyMember, closed_t: Optional[ClosedFormT], grid,
                  tolerances=None) -> MemberReport:
    """Check ``S A R`` against the closed form and both residual conditions.

    ``max_T_mismatch`` is the max-abs gap scaled by ``max(1, |T|)``. When S or
    R fails the conditioning gate the Riccati residual is reported as None
    and ``riccati_gate`` names the failing sample; the member can still pass.
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    grid = np.asarray(grid, dtype=float)
    closed_t = member.closed_form if closed_t is None else closed_t
    mismatch = 0.0
    for tau in grid:
        ref = closed_form_T(closed_t, tau).assemble()
        got = member.tblocks(tau).assemble()
        scale = max(1.0, float(np.max(np.abs(ref))))
        mismatch = max(mismatch, float(np.max(np.abs(got - ref))) / scale)
    compat = 0.0
    ric = None
    gate = "n/a"
    if grid.size >= 3:
        a_traj = sample(member.amat, grid)
        args = (member.smat, member.rmat, member.dmat, member.emat, member.fmat, member.gmat)
        compat = compatibility_residual(args[0], a_traj, *args[1:])
        try:
            ric = riccati_residual(a_traj, *args)
            gate = "passed"
        except ConditioningError as exc:
            gate = f"refused: {exc}"
    passed = mismatch <= tol["t_mismatch"] and compat <= tol["compatibility"]
    if ric is not None:
        passed = passed and ric <= tol["riccati"]
    return MemberReport(mismatch, compat, ric, gate, tol, bool(passed))


def random_params(rng, n, degree=3, variant="first", integral="definite") -> RiccatiFamilyParams:
    """Draw a parameter set with entries uniform in [-1, 1].

    ``rng`` provides ``symmetric(shape)`` (see :class:`phasemap.rng.SplitMix64`).
    S3 and R1 get a diagonal shift so they pass the conditioning gate.
    """
    def mat():
        return rng.symmetric((n, n))

    def poly(size=n):
        return MatrixPolynomial(rng.symmetric((degree + 1, size, size)))

    s3 = mat() + 2.0 * np.eye(n)
    r1 = mat() + 2.0 * np.eye(n)
    common = dict(s3=s3, s4=mat(), r1=r1, r3=mat(), fblocks=poly(2 * n), gblocks=poly(2 * n),
                  integral=integral)
    if variant == "first":
        return RiccatiFamilyParams(v1=mat(), v2=mat(), f=poly(), g=poly(), a3fun=poly(),
                                   a4fun=poly(), **common)
    return RiccatiFamilyParams(u1=mat(), u2=mat(), l=poly(), m=poly(), a2fun=poly(),
                               a4fun=poly(), **common)


@dataclass(frozen=True)
class ReductionReport:
    s_difference: float
    r_difference: float
    s_exact_error: float
    r_exact_error: float
    tolerance: float
    passed: bool


def reduction_check(ybar, z, amat, s0, r0, fmat=None, gmat=None, tau0=0.0, tau1=1.0, steps=1000,
                    tol=1e-9) -> ReductionReport:
    """Integrate the full S and R systems with ``D = -S A F`` and ``E = -G A R`` imposed.

    With canonical structure (B = C = J), constant ``ybar``, ``z`` and ``A``,
    the inhomogeneous terms cancel and the trajectories must coincide with
    those of ``S' = J Ybar S`` and ``R' = -R J Z``. D and E are evaluated on
    the exact reduced solutions ``expm(tau J Ybar) S0`` and
    ``R0 expm(-tau J Z)``. Differences are max-abs over the grid.
    """
    from scipy.linalg import expm

    from .phase_space import symplectic_matrix
    from .transport import integrate, r_riccati_rhs, s_rhs

    ym, zm, am, s0m, r0m = (dense(x) for x in (ybar, z, amat, s0, r0))
    dim = ym.shape[0]
    if dim % 2 or any(m.shape != (dim, dim) for m in (zm, am, s0m, r0m)):
        raise SizeError("reduction check needs square 2n x 2n matrices")
    j = symplectic_matrix(dim // 2)
    ff = _fn(fmat if fmat is not None else np.zeros((dim, dim)))
    gf = _fn(gmat if gmat is not None else np.zeros((dim, dim)))
    jy, jz = j @ ym, j @ zm

    def s_exact(tau):
        return expm(tau * jy) @ s0m

    def r_exact(tau):
        return r0m @ expm(-tau * jz)

    def full_s(s, tau):
        extra = {"dmat": -s_exact(tau) @ am @ ff(tau), "amat": am, "fmat": ff(tau)}
        return s_rhs(s, j, ym, extra)

    def full_r(r, tau):
        extra = {"emat": -gf(tau) @ am @ r_exact(tau), "gmat": gf(tau), "amat": am}
        return r_riccati_rhs(r, j, zm, extra)

    s_full = integrate(full_s, s0m, tau0, tau1, steps)
    s_red = integrate(lambda s, tau: s_rhs(s, j, ym), s0m, tau0, tau1, steps)
    r_full = integrate(full_r, r0m, tau0, tau1, steps)
    r_red = integrate(lambda r, tau: r_riccati_rhs(r, j, zm), r0m, tau0, tau1, steps)
    sd = float(np.max(np.abs(s_full.states - s_red.states)))
    rd = float(np.max(np.abs(r_full.states - r_red.states)))
    se = float(max(np.max(np.abs(st - s_exact(t))) for t, st in zip(s_red.taus, s_red.states)))
    re = float(max(np.max(np.abs(rt - r_exact(t))) for t, rt in zip(r_red.taus, r_red.states)))
    return ReductionReport(sd, rd, se, re, tol, bool(sd <= tol and rd <= tol))


def inverse_linear_solution(a0, kmat):
    """Exact nonsingular Riccati solution ``A(tau) = (A0^-1 - tau K)^-1``.

    It solves ``A' + A (F + G) A = 0`` with ``F + G = -K``, ``S = R = I`` and
    ``D = E = 0``; valid while ``A0^-1 - tau K`` stays invertible.
    """
    a0inv = _checked_inverse(np.asarray(a0, dtype=float), "A0", 0.0)
    km = np.asarray(kmat, dtype=float)
    if km.shape != a0inv.shape:
        raise SizeError("K must match A0")

    def amat(tau):
        return _checked_inverse(a0inv - tau * km, "A0^-1 - tau K", tau)

    return amat
