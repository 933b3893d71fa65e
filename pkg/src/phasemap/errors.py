"""Exception hierarchy shared by every module."""


class PhasemapError(Exception):
    """Base class for all library errors."""


class SizeError(PhasemapError, ValueError):
    """Operands have incompatible shapes."""


class ConditioningError(PhasemapError, ArithmeticError):
    """A matrix that must be inverted is singular or too ill-conditioned.

    ``tau`` carries the sample point when the failure is located on a grid.
    """

    def __init__(self, message, tau=None, cond=None):
        super().__init__(message)
        self.tau = tau
        self.cond = cond


class DivergenceError(PhasemapError, ArithmeticError):
    """Integration produced a non-finite value."""

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau


class CapabilityError(PhasemapError):
    """An input lacks a callback needed for the requested computation."""


class SignatureError(PhasemapError, ValueError):
    """A quantity that must be positive (a squared conformal factor) is not."""

    def __init__(self, message, s=None):
        super().__init__(message)
        self.s = s


class SingularityError(PhasemapError, ArithmeticError):
    """A scalar factor vanished where it must be inverted."""


class DomainError(PhasemapError, ValueError):
    """A function evaluation left its domain (non-finite output)."""


class UsageError(PhasemapError, ValueError):
    """Arguments are individually valid but inconsistent with each other."""


class ConfigError(PhasemapError, ValueError):
    """Scenario configuration could not be parsed or validated."""
