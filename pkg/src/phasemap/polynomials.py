"""Matrix-valued polynomials in a scalar parameter.

Arbitrary matrix functions in the Riccati family and polynomial Hamiltonian
coefficients are stored as coefficient stacks so that derivatives and
integrals are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeError

MAX_DEGREE = 8


@dataclass(frozen=True)
class MatrixPolynomial:
    """``P(tau) = sum_k coeffs[k] * tau**k``.

    ``coeffs`` has shape ``(degree + 1, rows, cols)``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim == 2:
            c = c[None]
        if c.ndim != 3 or c.shape[0] == 0:
            raise SizeError(f"coefficient stack must be (deg+1, r, c), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def constant(cls, mat):
        return cls(np.asarray(mat, dtype=float)[None])

    @classmethod
    def zeros(cls, rows, cols=None):
        cols = rows if cols is None else cols
        return cls(np.zeros((1, rows, cols)))

    @property
    def degree(self):
        return self.coeffs.shape[0] - 1

    @property
    def shape(self):
        return self.coeffs.shape[1:]

    def __call__(self, tau):
        # Horner keeps the evaluation stable for degree <= 8
        out = self.coeffs[-1].copy()
        for c in self.coeffs[-2::-1]:
            out = out * tau + c
        return out

    def derivative(self):
        if self.degree == 0:
            return MatrixPolynomial(np.zeros_like(self.coeffs))
        k = np.arange(1, self.degree + 1, dtype=float)
        return MatrixPolynomial(self.coeffs[1:] * k[:, None, None])

    def antiderivative(self, lower=0.0):
        """Return ``Q`` with ``Q' = P`` and ``Q(lower) = 0``."""
        k = np.arange(1, self.degree + 2, dtype=float)
        shifted = np.concatenate(
            [np.zeros((1,) + self.shape), self.coeffs / k[:, None, None]]
        )
        q = MatrixPolynomial(shifted)
        base = q(lower)
        shifted = shifted.copy()
        shifted[0] -= base
        return MatrixPolynomial(shifted)

    def integral(self, a, b):
        """Definite integral over ``[a, b]`` as a constant matrix."""
        q = self.antiderivative(0.0)
        return q(b) - q(a)

    def __add__(self, other):
        if not isinstance(other, MatrixPolynomial):
            return NotImplemented
        if other.shape != self.shape:
            raise SizeError(f"shape mismatch {self.shape} vs {other.shape}")
        d = max(self.degree, other.degree) + 1
        out = np.zeros((d,) + self.shape)
        out[: self.degree + 1] += self.coeffs
        out[: other.degree + 1] += other.coeffs
        return MatrixPolynomial(out)

    def __neg__(self):
        return MatrixPolynomial(-self.coeffs)

    def scale(self, factor):
        return MatrixPolynomial(self.coeffs * factor)

    def lmul(self, mat):
        """``mat @ P(tau)``."""
        return MatrixPolynomial(np.einsum("ij,kjl->kil", np.asarray(mat, dtype=float), self.coeffs))

    def rmul(self, mat):
        """``P(tau) @ mat``."""
        return MatrixPolynomial(np.einsum("kij,jl->kil", self.coeffs, np.asarray(mat, dtype=float)))

    def padded(self, degree):
        if degree < self.degree:
            raise SizeError("cannot pad to a lower degree")
        out = np.zeros((degree + 1,) + self.shape)
        out[: self.degree + 1] = self.coeffs
        return out

    @classmethod
    def block(cls, rows):
        """Assemble a block polynomial from a nested list of polynomials."""
        deg = max(p.degree for row in rows for p in row)
        stacked = [[p.padded(deg) for p in row] for row in rows]
        return cls(np.concatenate([np.concatenate(r, axis=2) for r in stacked], axis=1))


def as_matrix_function(obj, shape=None):
    """Coerce a constant array, a polynomial or a callable to ``tau -> array``."""
    if isinstance(obj, MatrixPolynomial):
        fn = obj
    elif callable(obj):
        fn = obj
    else:
        mat = np.asarray(obj, dtype=float)
        if shape is not None and mat.shape != tuple(shape):
            raise SizeError(f"expected shape {tuple(shape)}, got {mat.shape}")
        mat.setflags(write=False)
        return lambda tau, _m=mat: _m
    if shape is not None:
        probe = np.asarray(fn(0.0))
        if probe.shape != tuple(shape):
            raise SizeError(f"expected shape {tuple(shape)}, got {probe.shape}")
    return fn
