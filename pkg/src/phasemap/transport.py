"""Transport of the mapping matrix between two phase spaces.

With ``eta = T xi + r`` mapping the flow of a source Hamiltonian (structure
``C``, coefficient matrix ``Z``) onto a target one (structure ``B``,
coefficient ``Ybar``), the mapping matrix obeys

    dT/dtau = B Ybar T - T C Z.

The factorization ``T = S A R`` splits this into a left system for ``S``,
a right system for ``R`` and a Riccati equation for ``A``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import DivergenceError, SizeError, UsageError
from .phase_space import Reparameterization, structure_value


@dataclass(frozen=True)
class BlockMatrix:
    """2n x 2n matrix stored as its four n x n blocks ``[[b1, b2], [b3, b4]]``."""

    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray
    b4: np.ndarray

    def __post_init__(self):
        blocks = [np.array(getattr(self, k), dtype=float) for k in ("b1", "b2", "b3", "b4")]
        shape = blocks[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise SizeError(f"blocks must be square, got {shape}")
        for name, blk in zip(("b1", "b2", "b3", "b4"), blocks):
            if blk.shape != shape:
                raise SizeError(f"block {name} has shape {blk.shape}, expected {shape}")
            blk.setflags(write=False)
            object.__setattr__(self, name, blk)

    @property
    def n(self):
        return self.b1.shape[0]

    @classmethod
    def split(cls, dense):
        d = np.asarray(dense, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] % 2:
            raise SizeError(f"cannot split shape {d.shape} into 2x2 square blocks")
        n = d.shape[0] // 2
        return cls(d[:n, :n], d[:n, n:], d[n:, :n], d[n:, n:])

    @classmethod
    def zeros(cls, n):
        z = np.zeros((n, n))
        return cls(z, z, z, z)

    @classmethod
    def identity(cls, n):
        z = np.zeros((n, n))
        return cls(np.eye(n), z, z, np.eye(n))

    def assemble(self):
        n = self.n
        out = np.empty((2 * n, 2 * n), dtype=np.result_type(self.b1, self.b2, self.b3, self.b4))
        out[:n, :n], out[:n, n:], out[n:, :n], out[n:, n:] = self.b1, self.b2, self.b3, self.b4
        return out

    def blocks(self):
        return self.b1, self.b2, self.b3, self.b4


def dense(x):
    return x.assemble() if isinstance(x, BlockMatrix) else np.asarray(x, dtype=float)


def _square(*mats):
    size = None
    for m in mats:
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SizeError(f"expected a square matrix, got {m.shape}")
        if size is None:
            size = m.shape[0]
        elif m.shape[0] != size:
            raise SizeError(f"dimension mismatch: {m.shape[0]} vs {size}")
    return size


@dataclass(frozen=True)
class TransportState:
    tmat: BlockMatrix
    rvec: np.ndarray
    tau: float
    affine: bool = True

    def __post_init__(self):
        r = np.array(self.rvec, dtype=float).reshape(-1)
        if r.size != 2 * self.tmat.n:
            raise SizeError(f"r must have {2 * self.tmat.n} entries, got {r.size}")
        if not self.affine and np.any(r != 0.0):
            raise UsageError("a linear (non-affine) transport state must have r = 0")
        r.setflags(write=False)
        object.__setattr__(self, "rvec", r)


@dataclass(frozen=True)
class RiccatiSystemMatrices:
    """Inhomogeneous terms of the S and R systems as functions of tau."""

    dmat: Callable
    emat: Callable
    fmat: Callable
    gmat: Callable


def t_rhs(t, c, z, b, ybar) -> BlockMatrix:
    """Right-hand side ``B Ybar T - T C Z``."""
    tm, cm, zm, bm, ym = dense(t), structure_value(c), dense(z), structure_value(b), dense(ybar)
    _square(tm, cm, zm, bm, ym)
    return BlockMatrix.split(bm @ ym @ tm - tm @ cm @ zm)


def r_rhs(t, r, c, k, coeff, rep: Optional[Reparameterization] = None, tau=0.0) -> np.ndarray:
    """Right-hand side for the affine offset ``r``.

    ``K (Ybar r + dt/dtau Ebar) - T C Gbar``. ``coeff.ybar`` already carries
    the dt/dtau factor, so only the linear target term is scaled here.
    """
    tm, cm, km = dense(t), structure_value(c), structure_value(k)
    dim = _square(tm, cm, km)
    rv = np.asarray(r, dtype=float)
    ym = np.asarray(coeff.ybar, dtype=float)
    if rv.shape != (dim,) or ym.shape != (dim, dim):
        raise SizeError("r and ybar must match the 2n dimension of T")
    if np.shape(coeff.ebar) != (dim,) or np.shape(coeff.gbar) != (dim,):
        raise SizeError("ebar and gbar must be 2n vectors")
    rep = Reparameterization.identity() if rep is None else rep
    return km @ (ym @ rv + rep.dt_dtau(tau) * np.asarray(coeff.ebar)) - tm @ cm @ np.asarray(coeff.gbar)


def s_rhs(s, b, ybar, extra=None) -> BlockMatrix:
    """``B Ybar S`` plus ``D + S A F`` when ``extra`` carries dmat, amat, fmat."""
    sm, bm, ym = dense(s), structure_value(b), dense(ybar)
    _square(sm, bm, ym)
    out = bm @ ym @ sm
    if extra is not None:
        dm, am, fm = (dense(extra[key]) for key in ("dmat", "amat", "fmat"))
        _square(sm, dm, am, fm)
        out = out + dm + sm @ am @ fm
    return BlockMatrix.split(out)


def r_riccati_rhs(r, c, z, extra=None) -> BlockMatrix:
    """``-R C Z`` plus ``E + G A R`` when ``extra`` carries emat, gmat, amat."""
    rm, cm, zm = dense(r), structure_value(c), dense(z)
    _square(rm, cm, zm)
    out = -rm @ cm @ zm
    if extra is not None:
        em, gm, am = (dense(extra[key]) for key in ("emat", "gmat", "amat"))
        _square(rm, em, gm, am)
        out = out + em + gm @ am @ rm
    return BlockMatrix.split(out)


def compose_T(s, a, r) -> BlockMatrix:
    """``T = S A R``.

    In the letter notation ``A = [[a, d], [b, c]]``, so the first block of T
    reads ``(S1 a + S2 b) R1 + (S1 d + S2 c) R3``.
    """
    sm, am, rm = dense(s), dense(a), dense(r)
    _square(sm, am, rm)
    return BlockMatrix.split(sm @ am @ rm)


@dataclass(frozen=True)
class Trajectory:
    """Samples ``states[k]`` of a matrix (or vector) at ``taus[k]``."""

    taus: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if taus.ndim != 1 or states.shape[0] != taus.size:
            raise SizeError("taus and states disagree in length")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "states", states)

    def __len__(self):
        return self.taus.size

    @property
    def final(self):
        return self.states[-1]

    def to_csv(self, fh=None):
        """Write ``tau`` then the row-major entries, 17 significant digits.

        Returns the text when ``fh`` is None.
        """
        own = fh is None
        if own:
            fh = io.StringIO()
        flat = self.states.reshape(len(self), -1)
        writer = csv.writer(fh, lineterminator="\n")
        shape = self.states.shape[1:]
        header = ["tau"] + ["x" + "_".join(str(i) for i in idx) for idx in np.ndindex(*shape)]
        writer.writerow(header)
        for tau, row in zip(self.taus, flat):
            writer.writerow([format(tau, ".17g")] + [format(v, ".17g") for v in row])
        if own:
            return fh.getvalue()
        return None

    @classmethod
    def from_csv(cls, text, shape):
        rows = list(csv.reader(io.StringIO(text)))[1:]
        data = np.array([[float(v) for v in row] for row in rows])
        return cls(data[:, 0], data[:, 1:].reshape((len(rows),) + tuple(shape)))


def _grid(tau0, tau1, steps):
    steps = int(steps)
    if steps < 1:
        raise UsageError("steps must be >= 1")
    return np.linspace(tau0, tau1, steps + 1), (tau1 - tau0) / steps


def integrate(rhs, init, tau0, tau1, steps) -> Trajectory:
    """Classical fixed-step RK4 for ``dX/dtau = rhs(X, tau)``.

    ``rhs`` may return a BlockMatrix; the state is carried as a dense array.
    """
    taus, h = _grid(tau0, tau1, steps)
    x = np.array(dense(init), dtype=float)

    def f(y, tau):
        return dense(rhs(y, tau))

    out = np.empty((taus.size,) + x.shape)
    out[0] = x
    for k in range(taus.size - 1):
        tau = tau0 + k * h
        k1 = f(x, tau)
        k2 = f(x + 0.5 * h * k1, tau + 0.5 * h)
        k3 = f(x + 0.5 * h * k2, tau + 0.5 * h)
        k4 = f(x + h * k3, tau + h)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"non-finite state at tau={float(taus[k + 1]):.17g}", tau=taus[k + 1])
        out[k + 1] = x
    return Trajectory(taus, out)


def _half_step_weights(weight, tau0, h, steps):
    nodes = tau0 + 0.5 * h * np.arange(2 * steps + 1)
    if weight is None:
        return np.ones(nodes.size)
    return np.array([float(weight(t)) for t in nodes])


def integrate_linear(pmat, qmat, init, tau0, tau1, steps, p_weight=None, q_weight=None,
                     backend=None) -> Trajectory:
    """RK4 for ``dX/dtau = p(tau) P X + q(tau) X Q`` with constant ``P``, ``Q``.

    Runs on the compiled kernel when available and the state is small (see
    :func:`phasemap.kernels.select`). ``backend`` picks one explicitly
    (``"python"`` or ``"compiled"``).
    """
    taus, h = _grid(tau0, tau1, steps)
    x0 = np.ascontiguousarray(dense(init), dtype=float)
    pm = np.ascontiguousarray(dense(pmat), dtype=float)
    qm = np.ascontiguousarray(dense(qmat), dtype=float)
    if x0.ndim != 2 or pm.shape != (x0.shape[0],) * 2 or qm.shape != (x0.shape[1],) * 2:
        raise SizeError(f"incompatible shapes P{pm.shape} X{x0.shape} Q{qm.shape}")
    pw = _half_step_weights(p_weight, tau0, h, len(taus) - 1)
    qw = _half_step_weights(q_weight, tau0, h, len(taus) - 1)
    if backend is None:
        fn = kernels.select(max(x0.shape))
    else:
        available = kernels.backends()
        if backend not in available:
            raise UsageError(f"backend {backend!r} unavailable; have {sorted(available)}")
        fn = available[backend]
    traj, bad = fn(pm, qm, x0, pw, qw, float(h), len(taus) - 1)
    if bad >= 0:
        raise DivergenceError(f"non-finite state at tau={float(taus[bad]):.17g}", tau=taus[bad])
    return Trajectory(taus, np.asarray(traj))


def integrate_transport(t0, c, z, b, ybar, tau0, tau1, steps, ybar_weight=None,
                        backend=None) -> Trajectory:
    """Integrate ``dT/dtau = w(tau) B Ybar T - T C Z`` for constant Z, Ybar.

    ``ybar_weight`` is typically ``rep.dt_dtau`` when ``ybar`` holds the bare
    target matrix.
    """
    pm = structure_value(b) @ dense(ybar)
    qm = -structure_value(c) @ dense(z)
    return integrate_linear(pm, qm, t0, tau0, tau1, steps, p_weight=ybar_weight, backend=backend)


def integrate_affine(t0, r0, c, k, coeff, tau0, tau1, steps, rep=None) -> tuple:
    """Integrate ``T`` and ``r`` jointly.

    ``coeff`` is a CoefficientSet or a callable ``tau -> CoefficientSet``
    (state-independent coefficients only). Returns ``(T trajectory, r trajectory)``.
    """
    rep = Reparameterization.identity() if rep is None else rep
    coeff_at = coeff if callable(coeff) else (lambda tau: coeff)
    tm0 = dense(t0)
    dim = tm0.shape[0]
    cm, km = structure_value(c), structure_value(k)

    def rhs(state, tau):
        tm = state[:, :dim]
        cs = coeff_at(tau)
        dt = km @ np.asarray(cs.ybar) @ tm - tm @ cm @ np.asarray(cs.zmat)
        dr = r_rhs(tm, state[:, dim], cm, km, cs, rep, tau)
        return np.column_stack([dt, dr])

    init = np.column_stack([tm0, np.asarray(r0, dtype=float)])
    traj = integrate(rhs, init, tau0, tau1, steps)
    return (Trajectory(traj.taus, traj.states[:, :, :dim]),
            Trajectory(traj.taus, traj.states[:, :, dim]))


def central_difference(traj: Trajectory, order=4):
    """Central-difference derivative at interior samples of a uniform grid.

    Returns ``(indices, derivatives)``. ``order=4`` uses the five-point
    stencil when at least five samples exist, otherwise the three-point one.
    """
    n = len(traj)
    if n < 3:
        raise SizeError("need at least 3 samples for a central difference")
    steps = np.diff(traj.taus)
    h = steps[0]
    if not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        raise UsageError("central differences need a uniform grid")
    x = traj.states
    if order == 4 and n >= 5:
        idx = np.arange(2, n - 2)
        # paired differences keep a constant trajectory's derivative exactly zero
        d = (8.0 * (x[idx + 1] - x[idx - 1]) - (x[idx + 2] - x[idx - 2])) / (12.0 * h)
        return idx, d
    idx = np.arange(1, n - 1)
    return idx, (x[idx + 1] - x[idx - 1]) / (2 * h)


def _matrix_fn(m):
    if callable(m):
        return lambda tau: dense(m(tau))
    fixed = dense(m)
    return lambda tau: fixed


def transport_residual(traj: Trajectory, c, z, b, ybar) -> float:
    """Max-abs residual of ``dT/dtau + T C Z - B Ybar T`` over interior samples.

    ``z`` and ``ybar`` are matrices or callables of tau. The derivative uses
    the five-point stencil, so the residual of an RK4 trajectory drops ~16x
    per step halving.
    """
    if len(traj) < 3:
        raise SizeError("transport_residual needs at least 3 trajectory points")
    cm, bm = structure_value(c), structure_value(b)
    zf, yf = _matrix_fn(z), _matrix_fn(ybar)
    idx, deriv = central_difference(traj)
    worst = 0.0
    for i, dtm in zip(idx, deriv):
        tau = traj.taus[i]
        tm = traj.states[i]
        res = dtm + tm @ cm @ zf(tau) - bm @ yf(tau) @ tm
        worst = max(worst, float(np.max(np.abs(res))))
    return worst
