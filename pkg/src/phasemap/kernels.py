"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback takes over. Set ``PHASEMAP_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
rk4_linear = _fallback.rk4_linear

if os.environ.get("PHASEMAP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        rk4_linear = _kernels.rk4_linear
        BACKEND = "compiled"


# above this matrix size numpy's BLAS products beat the compiled loops
COMPILED_MAX_SIZE = 16


def select(size):
    """Kernel for a ``size x size`` state when no backend is requested."""
    if BACKEND == "compiled" and size <= COMPILED_MAX_SIZE:
        return rk4_linear
    return _fallback.rk4_linear


def backends():
    """Map of available backend name to ``rk4_linear`` implementation."""
    out = {"python": _fallback.rk4_linear}
    try:
        from . import _kernels
    except ImportError:
        return out
    out["compiled"] = _kernels.rk4_linear
    return out
