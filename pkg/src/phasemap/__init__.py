"""Linear and affine maps between phase spaces of quadratic Hamiltonians.

Submodules:

- ``phase_space``: Hamiltonians, structure matrices, reparameterizations.
- ``transport``: the transport equation for T (and r), RK4 integration, residuals.
- ``riccati``: the T = S A R factorization and its exact solution family.
- ``flat_mapping``: closed-form maps between flat Hamiltonians and coordinate maps.
- ``conformal_embed``: conformally flat form of a metric and its null-cone embedding.
- ``calabi``: Hessian metrics and curvature.
- ``cli``: the scenario runner.
"""

from .errors import (CapabilityError, ConditioningError, ConfigError, DivergenceError, DomainError,
                     PhasemapError, SignatureError, SingularityError, SizeError, UsageError)
from .kernels import BACKEND
from .polynomials import MatrixPolynomial
from .rng import SplitMix64

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CapabilityError", "ConditioningError", "ConfigError", "DivergenceError", "DomainError",
    "MatrixPolynomial", "PhasemapError", "SignatureError", "SingularityError", "SizeError",
    "SplitMix64", "UsageError", "__version__",
]
