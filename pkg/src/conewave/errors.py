"""Exception and warning types raised across the package."""


class ConewaveError(Exception):
    """Base class for all package errors."""


class PoleError(ConewaveError, ValueError):
    """Argument sits on a pole of a meromorphic function."""


class SingularQuadratureError(ConewaveError, ArithmeticError):
    """An endpoint-singular integral failed to reach its tolerance."""


class DivergentTailError(ConewaveError, ValueError):
    """The defining integral of a second-kind function does not converge."""


class RegimeBoundaryError(ConewaveError, ValueError):
    """The point lies on a light-cone boundary where the kernel is singular."""


class UnsupportedCrossSection(ConewaveError, ValueError):
    """The cross-section kind is not available for the requested operation."""


class TruncationError(ConewaveError, ArithmeticError):
    """A spectral sum cannot be truncated within tolerance."""


class TruncationWarning(UserWarning):
    """A spectral sum was truncated with a tail above the requested tolerance."""


class BoundaryError(ConewaveError, ValueError):
    """A parameter touches the edge of its admissible range."""


class OscillatoryQuadratureError(ConewaveError, ArithmeticError):
    """The oscillatory Bessel-product integral failed to converge."""


class ResolutionError(ConewaveError, ValueError):
    """A discretisation cannot resolve the requested scale."""


class PowerIterationStall(ConewaveError, ArithmeticError):
    """Power iteration did not settle within the iteration budget."""


class ChartError(ConewaveError, ValueError):
    """A point lies outside the normal-coordinate chart."""


class DerivativeNoiseError(ConewaveError, ArithmeticError):
    """Finite-difference derivatives disagree across step sizes."""


class DistributionActionError(ConewaveError, ValueError):
    """A distributional profile was asked for a pointwise value."""


class ConfigError(ConewaveError, ValueError):
    """Malformed configuration or input file."""
