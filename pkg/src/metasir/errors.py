"""Exception and warning types shared across the package."""


class MetaSirError(Exception):
    """Base class for all package errors."""


class EmptyRealization(MetaSirError):
    """A realization has no interferers, so the rate-control threshold is unbounded."""


class InsufficientInterferers(MetaSirError):
    """Fewer interferers than the requested nearest-k count."""


class ZeroInterference(MetaSirError):
    """Interference is zero where a positive value is required."""


class PoleError(MetaSirError, ValueError):
    """Argument sits on a pole of the gamma function."""


class UnsupportedExponent(MetaSirError, ValueError):
    """A closed form was requested for a path-loss exponent it does not cover."""


class QuadratureFailure(MetaSirError):
    """Numerical integration did not reach the required accuracy."""


class CancellationError(MetaSirError):
    """An alternating sum lost too many digits to be trusted."""


class AccuracyLossWarning(UserWarning):
    """Result is returned but may carry reduced precision."""


class CancellationFallbackWarning(UserWarning):
    """A closed form was skipped in favour of quadrature because of cancellation."""


class AsymptoticRegimeWarning(UserWarning):
    """An asymptotic formula is used outside the regime where it is accurate."""
