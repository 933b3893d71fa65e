"""Conformally flat form of a curved line element and its null-cone embedding.

With a frame ``E`` (``G = E^T eta E``) and flat coordinates ``Zbar = E u``,
the curved line element along a curve equals ``exp(2 sigma) eta dZbar dZbar``
where ``exp(-2 sigma)`` is fixed by the frame's rate of change along the
curve. The points

    y = exp(sigma) * (E u, G u u - 1/4, G u u + 1/4)

lie on the null cone of ``diag(eta, +1, -1)`` and reproduce the same line
element. sigma is a functional of the curve, not a field on the manifold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConditioningError, SignatureError, SingularityError, SizeError
from .flat_mapping import EqualityReport, hamiltonian_equality_check

FRAME_COND_LIMIT = 1e10


def _signature(sig, n=None):
    arr = np.asarray(sig, dtype=float).ravel()
    if not np.all(np.abs(arr) == 1.0):
        raise SizeError("signature entries must be +1 or -1")
    if n is not None and arr.size != n:
        raise SizeError(f"signature must have {n} entries, got {arr.size}")
    return arr


def curve_derivative(values, s):
    """Second-order derivative of samples along ``s`` (first axis).

    Three-point stencils written in divided differences, so constant samples
    give exactly zero; endpoints use one-sided quadratic stencils.
    """
    f = np.asarray(values, dtype=float)
    s = np.asarray(s, dtype=float)
    if s.size < 3:
        raise SizeError("need at least 3 samples to differentiate")
    shape = (-1,) + (1,) * (f.ndim - 1)
    h = np.diff(s).reshape(shape)
    d = np.diff(f, axis=0) / h
    out = np.empty_like(f)
    hm, hp = h[:-1], h[1:]
    out[1:-1] = (hp * d[:-1] + hm * d[1:]) / (hm + hp)
    out[0] = d[0] - (d[1] - d[0]) * h[0] / (h[0] + h[1])
    out[-1] = d[-1] + (d[-1] - d[-2]) * h[-1] / (h[-2] + h[-1])
    return out


@dataclass(frozen=True)
class VielbeinField:
    """Frame ``u -> E(u)`` (rows are flat indices) with a flat signature."""

    dim: int
    frame: Callable
    flat_signature: tuple = None

    def __post_init__(self):
        sig = (1.0,) * self.dim if self.flat_signature is None else self.flat_signature
        object.__setattr__(self, "flat_signature", tuple(_signature(sig, self.dim)))

    @property
    def eta(self):
        return np.diag(self.flat_signature)

    def __call__(self, u):
        e = np.asarray(self.frame(np.asarray(u, dtype=float)), dtype=float)
        if e.shape != (self.dim, self.dim):
            raise SizeError(f"frame must be {self.dim}x{self.dim}, got {e.shape}")
        cond = np.linalg.cond(e)
        if not np.isfinite(cond) or cond > FRAME_COND_LIMIT:
            raise ConditioningError(f"frame ill-conditioned at u={np.asarray(u).tolist()} (cond={cond:.3g})",
                                    cond=cond)
        return e

    def metric(self, u):
        e = self(u)
        g = e.T @ self.eta @ e
        return 0.5 * (g + g.T)


def vielbein_catalog(name, dim=4, signature=None, **params) -> VielbeinField:
    """Built-in frames.

    ``identity``; ``diagonal_poly``: ``diag(1 + eps u^1, 1, ...)`` (or every
    axis perturbed with ``all_axes=True``); ``exp_conformal``: ``exp(k u^1) I``.
    """
    if name == "identity":
        fn = lambda u: np.eye(dim)
    elif name == "diagonal_poly":
        eps = float(params.get("eps", 0.1))
        every = bool(params.get("all_axes", False))

        def fn(u):
            d = np.ones(dim)
            if every:
                d = d + eps * u
            else:
                d[0] += eps * u[0]
            return np.diag(d)
    elif name == "exp_conformal":
        k = float(params.get("k", 0.2))
        fn = lambda u: np.exp(k * u[0]) * np.eye(dim)
    else:
        raise KeyError(f"unknown vielbein {name!r}")
    return VielbeinField(dim, fn, signature)


@dataclass(frozen=True)
class CurveSample:
    """Samples of a curve ``u(s)`` with tangents ``du/ds``."""

    s_values: np.ndarray
    u_points: np.ndarray
    du_ds: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s_values, dtype=float)
        u = np.asarray(self.u_points, dtype=float)
        du = np.asarray(self.du_ds, dtype=float)
        if s.ndim != 1 or s.size < 3:
            raise SizeError("a curve needs at least 3 samples")
        if np.any(np.diff(s) <= 0):
            raise SizeError("s_values must be strictly increasing")
        if u.ndim != 2 or u.shape[0] != s.size or du.shape != u.shape:
            raise SizeError("u_points and du_ds must be (samples, n)")
        object.__setattr__(self, "s_values", s)
        object.__setattr__(self, "u_points", u)
        object.__setattr__(self, "du_ds", du)

    @classmethod
    def from_function(cls, u_fn, s_values, du_fn=None):
        s = np.asarray(s_values, dtype=float)
        u = np.array([np.asarray(u_fn(si), dtype=float) for si in s])
        du = (np.array([np.asarray(du_fn(si), dtype=float) for si in s]) if du_fn is not None
              else curve_derivative(u, s))
        return cls(s, u, du)


def curve_catalog(name, dim=4, s0=0.0, s1=0.2, step=1e-3, **params) -> CurveSample:
    """``line``: ``u0 + s v``; ``arc``: ``u0 + sin(s) v + (1 - cos(s)) w``."""
    count = int(round((s1 - s0) / step)) + 1
    s = np.linspace(s0, s1, count)
    u0 = np.asarray(params.get("u0", np.full(dim, 0.3)), dtype=float)
    v = np.asarray(params.get("v", np.eye(dim)[0]), dtype=float)
    if name == "line":
        return CurveSample.from_function(lambda t: u0 + t * v, s, lambda t: v)
    if name == "arc":
        w = np.asarray(params.get("w", np.eye(dim)[1 % dim]), dtype=float)
        return CurveSample.from_function(lambda t: u0 + np.sin(t) * v + (1 - np.cos(t)) * w, s,
                                         lambda t: np.cos(t) * v + np.sin(t) * w)
    raise KeyError(f"unknown curve {name!r}")


@dataclass(frozen=True)
class ConformalData:
    sigma: np.ndarray
    bracket: np.ndarray
    flat_form_rel_err: float
    phi: Optional[np.ndarray] = None
    u_factor: Optional[np.ndarray] = None
    curvature_k: Optional[float] = None


def zbar(v: VielbeinField, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return v(u) @ u


def zbar_inverse(v: VielbeinField, u, z) -> np.ndarray:
    """``u = E^-1 Zbar`` with the frame taken at ``u``."""
    return np.linalg.solve(v(u), np.asarray(z, dtype=float))


def _along(v, curve):
    frames = np.array([v(u) for u in curve.u_points])
    dframes = curve_derivative(frames, curve.s_values)
    return frames, dframes


def sigma_along(v: VielbeinField, curve: CurveSample, k=None) -> ConformalData:
    """Conformal factor at each sample of ``curve``.

    With ``a = (E^-1)' Zbar`` and ``b = E^-1 Zbar'``::

        exp(-2 sigma) = 1 - (G a a + 2 G a b) / (G u' u')

    The division by ``G u' u'`` (1 for arclength) lets any curve parameter be
    used. ``E'`` comes from second-order differences along the curve. When
    ``k`` is given, ``U`` and ``Phi`` are filled in per sample as well.
    """
    if curve.u_points.shape[1] != v.dim:
        raise SizeError("curve dimension does not match the frame")
    frames, dframes = _along(v, curve)
    eta = v.eta
    sig = np.empty(curve.s_values.size)
    bracket = np.empty_like(sig)
    worst = 0.0
    for i, (s, u, du, e, de) in enumerate(zip(curve.s_values, curve.u_points, curve.du_ds, frames, dframes)):
        einv = np.linalg.inv(e)
        deinv = -einv @ de @ einv
        g = e.T @ eta @ e
        z = e @ u
        dz = de @ u + e @ du
        norm = du @ g @ du
        if not np.isfinite(norm) or abs(norm) <= 1e-300:
            raise SignatureError(f"null tangent at s={s:.17g}; sigma is undefined", s=s)
        a = deinv @ z
        b = einv @ dz
        val = 1.0 - (a @ g @ a + 2.0 * (a @ g @ b)) / norm
        if not val > 0.0:
            raise SignatureError(f"exp(-2 sigma) bracket is {val:.6g} <= 0 at s={s:.17g}", s=s)
        bracket[i] = val
        sig[i] = -0.5 * np.log(val)
        flat = np.exp(2.0 * sig[i]) * (dz @ eta @ dz)
        worst = max(worst, abs(norm - flat) / abs(norm))
    if k is None:
        return ConformalData(sig, bracket, worst)
    factors = [constant_curvature_factor(f @ u, v.flat_signature, k) for f, u in zip(frames, curve.u_points)]
    return ConformalData(sig, bracket, worst, np.array([c["phi"] for c in factors]),
                         np.array([c["U"] for c in factors]), float(k))


def constant_curvature_factor(z, signature, k):
    """``U = 1 + K/4 eta Zbar Zbar`` and ``Phi`` with ``exp(2 Phi) = U^-2``."""
    z = np.asarray(z, dtype=float)
    sig = _signature(signature, z.size)
    u = 1.0 + 0.25 * float(k) * float(z @ (sig * z))
    if u == 0.0:
        raise SingularityError("U vanishes; the constant-curvature factor is singular")
    return {"U": u, "phi": -float(np.log(abs(u)))}


@dataclass(frozen=True)
class CurvatureFormReport:
    max_rel_err_literal: float
    max_rel_err_scaled: float
    max_u_deviation: float
    tolerance: float
    passed: bool


def conformal_curvature_check(v: VielbeinField, curve: CurveSample, k, tol=1e-6) -> CurvatureFormReport:
    """Two sides of ``exp(2 Phi) eta dZ dZ`` vs ``exp(-2 sigma) G du du`` along a curve.

    They coincide only where ``U^2 = 1``; in general the left side is
    ``U^-2`` times the right side. ``max_rel_err_literal`` compares them as
    written and ``max_rel_err_scaled`` compares the left side with
    ``U^-2`` times the right one, which is the relation that holds. The
    check passes on the scaled relation.
    """
    data = sigma_along(v, curve)
    frames, dframes = _along(v, curve)
    eta = v.eta
    lit = scaled = udev = 0.0
    for i, (u, du, e, de) in enumerate(zip(curve.u_points, curve.du_ds, frames, dframes)):
        z = e @ u
        dz = de @ u + e @ du
        cc = constant_curvature_factor(z, v.flat_signature, k)
        lhs = np.exp(2.0 * cc["phi"]) * (dz @ eta @ dz)
        rhs = np.exp(-2.0 * data.sigma[i]) * (du @ e.T @ eta @ e @ du)
        den = max(abs(rhs), 1e-300)
        lit = max(lit, abs(lhs - rhs) / den)
        scaled = max(scaled, abs(lhs - rhs / cc["U"] ** 2) / den)
        udev = max(udev, abs(cc["U"] ** 2 - 1.0))
    return CurvatureFormReport(lit, scaled, udev, tol, scaled <= tol)


def embed(v: VielbeinField, u, sigma) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    e = v(u)
    guu = float(u @ e.T @ v.eta @ e @ u)
    scale = np.exp(float(sigma))
    return scale * np.concatenate([e @ u, [guu - 0.25, guu + 0.25]])


def big_signature(signature):
    return np.concatenate([_signature(signature), [1.0, -1.0]])


def null_invariant(y, signature) -> float:
    y = np.asarray(y, dtype=float)
    # exact summation so mirrored terms cancel to zero
    return math.fsum(big_signature(signature) * y * y)


@dataclass(frozen=True)
class ChainReport:
    max_rel_err_flatform: float
    max_rel_err_embedding: float


def line_element_chain(v: VielbeinField, curve: CurveSample, sigma=None) -> ChainReport:
    """Compare ``G du du``, ``exp(2 sigma) eta dZ dZ`` and ``eta_big dy dy`` at interior samples.

    All three differentials come from central differences of the sampled
    ``u``, ``Zbar`` and ``y``. ``sigma`` overrides the computed factor.
    """
    if sigma is None:
        sigma = sigma_along(v, curve).sigma
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != curve.s_values.shape:
        raise SizeError("sigma must have one value per sample")
    eta = v.eta
    big = big_signature(v.flat_signature)
    s = curve.s_values
    us = curve.u_points
    zs = np.array([zbar(v, u) for u in us])
    ys = np.array([embed(v, u, sg) for u, sg in zip(us, sigma)])
    flat = emb = 0.0
    for i in range(1, s.size - 1):
        ds = s[i + 1] - s[i - 1]
        du = (us[i + 1] - us[i - 1]) / ds
        dz = (zs[i + 1] - zs[i - 1]) / ds
        dy = (ys[i + 1] - ys[i - 1]) / ds
        curved = du @ v.metric(us[i]) @ du
        den = max(abs(curved), 1e-300)
        flat = max(flat, abs(np.exp(2.0 * sigma[i]) * (dz @ eta @ dz) - curved) / den)
        emb = max(emb, abs(dy @ (big * dy) - curved) / den)
    return ChainReport(flat, emb)


def consistent_momenta(v: VielbeinField, u, sigma, p, extra=0.0):
    """Momenta of one state in the curved, conformally flat and embedding coordinates.

    Returns ``(p, e^-sigma E^-T p, (E^-T p, a, a))`` with ``a = extra``; the
    two added components are null and do not change the Hamiltonian.
    """
    p = np.asarray(p, dtype=float)
    flat = np.linalg.solve(v(u).T, p)
    return p, np.exp(-float(sigma)) * flat, np.concatenate([flat, [extra, extra]])


def three_hamiltonians(g, sigma, signature, p_curved, p_flat, p_big):
    """``Q = 1/2 G^-1 p p``, ``Hhat = 1/2 exp(2 sigma) eta P P``, ``H = 1/2 eta_big P P``."""
    g = np.asarray(g, dtype=float)
    sig = _signature(signature)
    n = sig.size
    p_curved, p_flat, p_big = (np.asarray(x, dtype=float) for x in (p_curved, p_flat, p_big))
    if g.shape != (n, n) or p_curved.shape != (n,) or p_flat.shape != (n,) or p_big.shape != (n + 2,):
        raise SizeError("momenta and metric sizes do not match the signature")
    q = 0.5 * float(p_curved @ np.linalg.solve(g, p_curved))
    hhat = 0.5 * np.exp(2.0 * float(sigma)) * float(p_flat @ (sig * p_flat))
    h = 0.5 * float(p_big @ (big_signature(sig) * p_big))
    return {"Q": q, "Hhat": hhat, "H": h}


def three_hamiltonians_equal(values: dict, rtol=None) -> EqualityReport:
    kw = {} if rtol is None else {"rtol": rtol}
    return hamiltonian_equality_check(values["Q"], values["Hhat"], values["H"], **kw)
