"""Hessian (Calabi) metrics and their curvature.

A convex potential ``u`` defines ``G_ij = d^2 u / dx^i dx^j``; powers
``u**k`` of a Hamiltonian give further metrics of the same kind. Curvature
uses the convention

    R^a_{m s n} = d_n Gamma^a_{m s} - d_s Gamma^a_{m n}
                  + Gamma^e_{m s} Gamma^a_{e n} - Gamma^e_{m n} Gamma^a_{s e},
    R_{m n} = R^a_{m a n}.

All derivatives are central finite differences. Steps scale with
``max(1, |x|_inf)``: 1e-5 for first derivatives of a metric, 3e-4 for second
derivatives, 1e-3 for third and 1e-2 for fourth derivatives of a potential.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConditioningError, DomainError, SizeError

H1 = 1e-5
H2 = 3e-4
H3 = 1e-3
H4 = 1e-2
COND_LIMIT = 1e12


def _scale(x):
    return max(1.0, float(np.max(np.abs(x)))) if np.size(x) else 1.0


def _finite(val, what, x):
    if not np.all(np.isfinite(val)):
        raise DomainError(f"non-finite {what} at x={np.asarray(x).tolist()}")
    return val


def derivative_tensor(fn, x, order, step):
    """Fully symmetric tensor of ``order``-th partials of a scalar ``fn``.

    Each component is a nested central difference
    ``prod_j (shift(+h e_j) - shift(-h e_j)) / (2h)``; only sorted index tuples
    are evaluated and the rest are filled by symmetry. Exact (up to rounding)
    for polynomials of degree <= order + 1.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    h = step * _scale(x)
    cache = {}

    def at(offset):
        val = cache.get(offset)
        if val is None:
            val = float(fn(x + h * np.asarray(offset, dtype=float)))
            if not np.isfinite(val):
                raise DomainError(f"potential is not finite near x={x.tolist()}")
            cache[offset] = val
        return val

    out = np.empty((n,) * order)
    for combo in itertools.combinations_with_replacement(range(n), order):
        acc = 0.0
        for signs in itertools.product((1, -1), repeat=order):
            off = [0] * n
            for idx, s in zip(combo, signs):
                off[idx] += s
            acc += np.prod(signs) * at(tuple(off))
        val = acc / (2.0 * h) ** order
        for perm in set(itertools.permutations(combo)):
            out[perm] = val
    return out


@dataclass(frozen=True)
class ScalarPotential:
    dim: int
    eval: Callable
    kind: str = "polynomial"
    name: str = ""

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    def power(self, k):
        if int(k) < 1:
            raise SizeError("power must be a positive integer")
        if k == 1:
            return self
        base = self.eval
        return ScalarPotential(self.dim, lambda x: base(x) ** k, "power", f"({self.name})^{k}")


def potential_catalog(name, dim=2, **params) -> ScalarPotential:
    """Named smooth potentials.

    ``quadratic``: 1/2 |x|^2 (flat Hessian metric).
    ``quartic``: sum x_i^4.
    ``coupled_quartic``: 1/2 |x|^2 + eps x_1^2 x_2^2.
    ``coupled_cubic``: 1/2 |x|^2 + eps x_1 x_2^2 (convex near the origin).
    ``exp_coupled``: 1/2 |x|^2 + eps exp(x_1 x_2).
    """
    eps = float(params.get("eps", 0.1))
    if name == "quadratic":
        fn = lambda x: 0.5 * float(x @ x)
    elif name == "quartic":
        fn = lambda x: float(np.sum(x ** 4))
    elif name == "coupled_quartic":
        fn = lambda x: 0.5 * float(x @ x) + eps * x[0] ** 2 * x[1] ** 2
    elif name == "coupled_cubic":
        fn = lambda x: 0.5 * float(x @ x) + eps * x[0] * x[1] ** 2
    elif name == "exp_coupled":
        fn = lambda x: 0.5 * float(x @ x) + eps * np.exp(x[0] * x[1])
    else:
        raise KeyError(f"unknown potential {name!r}")
    if name != "quadratic" and name != "quartic" and dim < 2:
        raise SizeError(f"{name} needs dim >= 2")
    return ScalarPotential(dim, fn, "polynomial" if name != "exp_coupled" else "analytic", name)


@dataclass(frozen=True)
class MetricField:
    """Symmetric metric ``x -> G(x)``.

    ``d1(x)[k, i, j] = d_k G_ij`` and ``d2(x)[k, l, i, j] = d_k d_l G_ij`` may
    be supplied; otherwise they are taken by central differences of ``eval``.
    """

    dim: int
    eval: Callable
    d1: Optional[Callable] = None
    d2: Optional[Callable] = None

    def __call__(self, x):
        g = np.asarray(self.eval(np.asarray(x, dtype=float)), dtype=float)
        if g.shape != (self.dim, self.dim):
            raise SizeError(f"metric must be {self.dim}x{self.dim}, got {g.shape}")
        return _finite(g, "metric", x)

    def first_derivatives(self, x):
        if self.d1 is not None:
            return _finite(np.asarray(self.d1(x), dtype=float), "metric derivative", x)
        x = np.asarray(x, dtype=float)
        h = H1 * _scale(x)
        out = np.empty((self.dim, self.dim, self.dim))
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = h
            out[k] = (self(x + e) - self(x - e)) / (2 * h)
        return out

    def second_derivatives(self, x):
        if self.d2 is not None:
            return _finite(np.asarray(self.d2(x), dtype=float), "metric second derivative", x)
        x = np.asarray(x, dtype=float)
        h = H2 * _scale(x)
        n = self.dim
        g0 = self(x)
        out = np.empty((n, n, n, n))
        for k in range(n):
            ek = np.zeros(n)
            ek[k] = h
            out[k, k] = (self(x + ek) - 2 * g0 + self(x - ek)) / h ** 2
            for l in range(k + 1, n):
                el = np.zeros(n)
                el[l] = h
                mixed = (self(x + ek + el) - self(x + ek - el) - self(x - ek + el)
                         + self(x - ek - el)) / (4 * h ** 2)
                out[k, l] = mixed
                out[l, k] = mixed
        return out


def hessian_metric(u: ScalarPotential, power=1) -> MetricField:
    """Metric from the Hessian of ``u**power``.

    The metric and its derivatives come from symmetric nested stencils of the
    potential itself (second, third and fourth partials).
    """
    pot = u.power(power)

    def g(x):
        return derivative_tensor(pot, x, 2, H2)

    def d1(x):
        return derivative_tensor(pot, x, 3, H3)

    def d2(x):
        return derivative_tensor(pot, x, 4, H4)

    return MetricField(u.dim, g, d1, d2)


def _inverse(g, x):
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(f"metric not invertible at x={np.asarray(x).tolist()} (cond={cond:.3g})",
                                cond=cond)
    return np.linalg.inv(g)


def christoffel_first(g: MetricField, x) -> np.ndarray:
    """``Gamma_ijm = 1/2 (d_i G_jm + d_j G_im - d_m G_ij)``, indexed ``[i, j, m]``."""
    dg = g.first_derivatives(x)
    return 0.5 * (dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0))


def _christoffel_second(ginv, gam1):
    # Gamma^a_{ms} = G^{ab} Gamma_{msb}, indexed [a, m, s]
    return np.einsum("ab,msb->ams", ginv, gam1)


def riemann(g: MetricField, x):
    """Return ``(R[a, m, s, n], Ricci[m, n])`` at ``x``."""
    x = np.asarray(x, dtype=float)
    gm = g(x)
    ginv = _inverse(gm, x)
    dg = g.first_derivatives(x)
    ddg = g.second_derivatives(x)
    gam1 = christoffel_first(g, x)
    gam2 = _christoffel_second(ginv, gam1)
    # d_n Gamma_{msb} = 1/2 (d_n d_m G_sb + d_n d_s G_mb - d_n d_b G_ms), indexed [n, m, s, b]
    dgam1 = 0.5 * (ddg.transpose(0, 1, 2, 3) + ddg.transpose(0, 2, 1, 3) - ddg.transpose(0, 2, 3, 1))
    dginv = -np.einsum("ap,npq,qb->nab", ginv, dg, ginv)
    dgam2 = np.einsum("nab,msb->nams", dginv, gam1) + np.einsum("ab,nmsb->nams", ginv, dgam1)
    r = (dgam2.transpose(1, 2, 3, 0) - dgam2.transpose(1, 2, 0, 3)
         + np.einsum("ems,aen->amsn", gam2, gam2) - np.einsum("emn,ase->amsn", gam2, gam2))
    ricci = np.einsum("aman->mn", r)
    return r, ricci


def lowered_riemann(g: MetricField, x):
    r, _ = riemann(g, x)
    return np.einsum("ha,aijk->hijk", g(x), r)


def gaussian_curvature(g: MetricField, x) -> float:
    """Gaussian curvature of a 2-metric, positive on the round sphere."""
    if g.dim != 2:
        raise SizeError("gaussian_curvature needs a 2-dimensional metric")
    _, ricci = riemann(g, x)
    ginv = _inverse(g(x), x)
    # the curvature convention above makes the Ricci scalar negative on spheres
    return -0.5 * float(np.einsum("mn,mn->", ginv, ricci))


def hessian_identity_tensor(gm, gam1) -> np.ndarray:
    """``G^lm (Gamma_ijm Gamma_hkl - Gamma_ikm Gamma_hjl)`` indexed ``[h, i, j, k]``."""
    ginv = np.linalg.inv(gm)
    return (np.einsum("lm,ijm,hkl->hijk", ginv, gam1, gam1)
            - np.einsum("lm,ikm,hjl->hijk", ginv, gam1, gam1))


@dataclass(frozen=True)
class CurvatureReport:
    max_difference: float
    max_difference_opposite_sign: float
    sign: int
    tolerance: float
    passed: bool


def hessian_curvature_check(u: ScalarPotential, x, power=1, tol=1e-4) -> CurvatureReport:
    """Compare the lowered curvature tensor of a Hessian metric with the quadratic Christoffel form.

    Under the curvature convention of this module ``G_ha R^a_ijk`` equals
    ``-G^lm (Gamma_ijm Gamma_hkl - Gamma_ikm Gamma_hjl)``; ``sign`` is that
    factor. The difference with the opposite sign is reported as well so the
    convention is visibly pinned.
    """
    g = hessian_metric(u, power)
    x = np.asarray(x, dtype=float)
    gm = g(x)
    if np.linalg.eigvalsh(gm)[0] <= 0:
        raise ConditioningError(f"Hessian metric not positive definite at x={x.tolist()}")
    _inverse(gm, x)
    low = lowered_riemann(g, x)
    ident = hessian_identity_tensor(gm, christoffel_first(g, x))
    sign = -1
    diff = float(np.max(np.abs(low - sign * ident)))
    other = float(np.max(np.abs(low + sign * ident)))
    return CurvatureReport(diff, other, sign, tol, diff <= tol)


def calabi_lagrangian_hamiltonian(g, x, velocity):
    """``L = G_ij v^i v^j`` and ``H = G^ij p_i p_j`` with ``p = G v``; returns ``(L, H, L - H)``."""
    gm = g(x) if isinstance(g, MetricField) else np.asarray(g, dtype=float)
    v = np.asarray(velocity, dtype=float)
    if gm.shape != (v.size, v.size):
        raise SizeError("velocity does not match the metric dimension")
    cond = np.linalg.cond(gm)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(f"metric not invertible (cond={cond:.3g})", cond=cond)
    p = gm @ v
    lag = float(v @ gm @ v)
    ham = float(p @ np.linalg.solve(gm, p))
    return lag, ham, lag - ham
