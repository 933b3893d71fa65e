"""Quadratic Hamiltonians on a 2n-dimensional phase space.

A generalized quadratic Hamiltonian is

    H(xi, tau) = 1/2 xi^T H(tau) xi + G(tau) . xi + D(tau)

with ``xi = (q_1..q_n, p_1..p_n)``. The flow is ``dxi/dtau = C grad H`` for a
structure matrix ``C`` (the canonical choice is the symplectic ``J``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CapabilityError, SizeError, UsageError
from .polynomials import MatrixPolynomial

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class PhaseVector:
    components: np.ndarray

    def __post_init__(self):
        c = np.array(self.components, dtype=float).reshape(-1)
        if c.size == 0 or c.size % 2:
            raise SizeError(f"phase vector needs 2n components, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @property
    def n(self):
        return self.components.size // 2

    @property
    def q(self):
        return self.components[: self.n]

    @property
    def p(self):
        return self.components[self.n :]


def _components(xi, n):
    vec = xi.components if isinstance(xi, PhaseVector) else np.asarray(xi, dtype=float)
    if vec.shape != (2 * n,):
        raise SizeError(f"phase vector of length {2 * n} expected, got shape {vec.shape}")
    return vec


def _constant_fn(value):
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    return lambda tau: arr


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """Coefficient functions of a generalized quadratic Hamiltonian.

    ``hmat``, ``gvec`` and ``dscal`` may be constants, :class:`MatrixPolynomial`
    instances or callables of ``tau``. When ``state_dependent`` is set,
    ``hmat`` is called as ``hmat(xi, tau)`` and ``dhmat(xi, tau)`` must return
    ``d[l, i, j] = dH_ij / dxi_l``; without it the coefficient matrices cannot
    be formed.

    Optional callbacks ``dgvec(xi, tau)[l, j] = dG_j/dxi_l`` and
    ``ddscal(xi, tau)[j] = dD/dxi_j`` cover linear and scalar terms that
    depend on the state.
    """

    n: int
    hmat: Callable
    gvec: Optional[Callable] = None
    dscal: Optional[Callable] = None
    state_dependent: bool = False
    dhmat: Optional[Callable] = None
    dgvec: Optional[Callable] = None
    ddscal: Optional[Callable] = None

    def __post_init__(self):
        if int(self.n) < 1:
            raise SizeError("n must be >= 1")
        hm = self.hmat
        if not callable(hm):
            hm = _constant_fn(hm)
            object.__setattr__(self, "hmat", hm)
        gv = self.gvec
        if gv is None:
            gv = _constant_fn(np.zeros(2 * self.n))
        elif isinstance(gv, MatrixPolynomial):
            poly = gv
            gv = lambda tau, _p=poly: _p(tau).reshape(-1)
        elif not callable(gv):
            gv = _constant_fn(gv)
        object.__setattr__(self, "gvec", gv)
        ds = self.dscal
        if ds is None:
            ds = lambda tau: 0.0
        elif not callable(ds):
            val = float(ds)
            ds = lambda tau, _v=val: _v
        elif isinstance(ds, MatrixPolynomial):
            poly = ds
            ds = lambda tau, _p=poly: float(_p(tau).reshape(-1)[0])
        object.__setattr__(self, "dscal", ds)
        self.check_symmetric([0.0])

    @property
    def dim(self):
        return 2 * self.n

    @property
    def constant_coefficient(self):
        """True when ``H_ij`` carries no state dependence."""
        return not self.state_dependent

    def matrix(self, xi, tau):
        if self.state_dependent:
            m = np.asarray(self.hmat(xi, tau), dtype=float)
        else:
            m = np.asarray(self.hmat(tau), dtype=float)
        if m.shape != (self.dim, self.dim):
            raise SizeError(f"hmat must be {self.dim}x{self.dim}, got {m.shape}")
        return m

    def check_symmetric(self, taus, xi=None):
        xi = np.zeros(self.dim) if xi is None else _components(xi, self.n)
        for tau in taus:
            m = self.matrix(xi, tau)
            scale = max(np.max(np.abs(m)), 1e-300)
            if np.max(np.abs(m - m.T)) > SYMMETRY_RTOL * scale:
                raise UsageError(f"hmat is not symmetric at tau={tau}")


def evaluate(h: QuadraticHamiltonian, xi, tau) -> float:
    x = _components(xi, h.n)
    hm = h.matrix(x, tau)
    g = np.asarray(h.gvec(tau), dtype=float)
    return float(0.5 * x @ hm @ x + g @ x + h.dscal(tau))


def gradient(h: QuadraticHamiltonian, xi, tau) -> np.ndarray:
    x = _components(xi, h.n)
    out = h.matrix(x, tau) @ x + np.asarray(h.gvec(tau), dtype=float)
    if h.state_dependent:
        if h.dhmat is None:
            raise CapabilityError("state-dependent hmat needs dhmat for its gradient")
        dh = np.asarray(h.dhmat(x, tau), dtype=float)
        out = out + 0.5 * np.einsum("lij,i,j->l", dh, x, x)
    return out


@dataclass(frozen=True)
class StructureMatrix:
    kind: str
    value: np.ndarray

    def __post_init__(self):
        if self.kind not in ("symplectic", "general"):
            raise UsageError(f"unknown structure kind {self.kind!r}")
        v = np.array(self.value, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
            raise SizeError(f"structure matrix must be 2n x 2n, got {v.shape}")
        if self.kind == "symplectic" and not np.array_equal(v, symplectic_matrix(v.shape[0] // 2)):
            raise UsageError("symplectic structure must equal [[0, I], [-I, 0]]")
        v.setflags(write=False)
        object.__setattr__(self, "value", v)

    @classmethod
    def symplectic(cls, n):
        return cls("symplectic", symplectic_matrix(n))

    @classmethod
    def general(cls, value):
        return cls("general", value)

    @property
    def n(self):
        return self.value.shape[0] // 2


def symplectic_matrix(n):
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -np.eye(n)
    return j


def structure_value(c):
    return c.value if isinstance(c, StructureMatrix) else np.asarray(c, dtype=float)


def flow_rhs(c, h: QuadraticHamiltonian, xi, tau) -> np.ndarray:
    cm = structure_value(c)
    if cm.shape != (h.dim, h.dim):
        raise SizeError(f"structure matrix {cm.shape} does not match 2n={h.dim}")
    return cm @ gradient(h, xi, tau)


@dataclass(frozen=True)
class Reparameterization:
    """Relation ``t = t(tau)`` between the two affine parameters."""

    t_of_tau: Callable[[float], float]
    dt_dtau: Callable[[float], float]

    @classmethod
    def identity(cls):
        return cls(lambda tau: tau, lambda tau: 1.0)

    @classmethod
    def polynomial(cls, coeffs):
        """``t(tau) = sum_k coeffs[k] tau**k``."""
        c = np.asarray(coeffs, dtype=float)
        dc = c[1:] * np.arange(1, c.size)
        return cls(
            lambda tau, _c=c: float(np.polynomial.polynomial.polyval(tau, _c)),
            lambda tau, _d=dc: float(np.polynomial.polynomial.polyval(tau, _d)) if _d.size else 0.0,
        )

    @classmethod
    def wobble(cls, amplitude, omega):
        """``t = tau + amplitude * sin(omega tau) / omega``; monotone for |amplitude| < 1."""
        return cls(
            lambda tau: tau + amplitude * np.sin(omega * tau) / omega,
            lambda tau: 1.0 + amplitude * np.cos(omega * tau),
        )

    def max_derivative_error(self, taus, step=1e-5):
        """Largest relative gap between ``dt_dtau`` and a central difference."""
        worst = 0.0
        for tau in taus:
            h = step * max(1.0, abs(tau))
            fd = (self.t_of_tau(tau + h) - self.t_of_tau(tau - h)) / (2 * h)
            ref = self.dt_dtau(tau)
            worst = max(worst, abs(fd - ref) / max(1.0, abs(ref)))
        return worst


@dataclass(frozen=True)
class CoefficientSet:
    """Matrices and vectors driving the transport of ``T`` and ``r``.

    ``zmat`` and ``gbar`` describe the source Hamiltonian, ``ybar`` (already
    multiplied by dt/dtau) and ``ebar`` the target one.
    """

    zmat: np.ndarray
    ybar: np.ndarray
    ebar: np.ndarray
    gbar: np.ndarray


def _coefficient_parts(h: QuadraticHamiltonian, x, tau):
    hm = h.matrix(x, tau)
    if h.state_dependent:
        if h.dhmat is None:
            raise CapabilityError(
                "state-dependent hmat needs its xi-derivative (dhmat) to form coefficient matrices"
            )
        dh = np.asarray(h.dhmat(x, tau), dtype=float)
        if dh.shape != (h.dim,) * 3:
            raise SizeError(f"dhmat must have shape {(h.dim,) * 3}, got {dh.shape}")
        xmat = hm + 0.5 * np.einsum("lij,i->lj", dh, x)
    else:
        xmat = hm.copy()
    if h.dgvec is not None:
        xmat = xmat + np.asarray(h.dgvec(x, tau), dtype=float)
    lin = np.asarray(h.gvec(tau), dtype=float).copy()
    if h.ddscal is not None:
        lin = lin + np.asarray(h.ddscal(x, tau), dtype=float)
    return xmat, lin


def coefficient_set(h: QuadraticHamiltonian, xi, tau, rep=None, side="source") -> CoefficientSet:
    """Coefficient matrices of ``h`` at ``(xi, tau)``.

    On the ``target`` side the quadratic part is multiplied by dt/dtau.
    Every field is filled from ``h``; use :func:`pair_coefficients` to merge a
    source set and a target set for the transport equations.
    """
    if side not in ("source", "target"):
        raise UsageError(f"side must be 'source' or 'target', got {side!r}")
    x = _components(xi, h.n)
    rep = Reparameterization.identity() if rep is None else rep
    xmat, lin = _coefficient_parts(h, x, tau)
    scale = rep.dt_dtau(tau) if side == "target" else 1.0
    return CoefficientSet(zmat=xmat, ybar=scale * xmat, ebar=lin, gbar=lin.copy())


def pair_coefficients(source: CoefficientSet, target: CoefficientSet) -> CoefficientSet:
    return CoefficientSet(
        zmat=source.zmat, ybar=target.ybar, ebar=target.ebar, gbar=source.gbar
    )
