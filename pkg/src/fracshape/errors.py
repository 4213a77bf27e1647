"""Exception types shared across the package."""


class FracshapeError(Exception):
    """Base class for package-specific failures."""


class DomainError(FracshapeError, ValueError):
    """Input outside the mathematical domain of an operation."""


class SingularityError(FracshapeError, ValueError):
    """Evaluation requested exactly at a non-removable singularity."""


class ExtrapolationError(FracshapeError, RuntimeError):
    """A Richardson/limit sequence failed its convergence diagnostic."""


class QuadratureError(FracshapeError, RuntimeError):
    """A quadrature rule cannot be built or trusted for the request."""


class ConfigError(FracshapeError, ValueError):
    """Malformed or inconsistent scenario configuration."""
