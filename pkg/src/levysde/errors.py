"""Exception types shared across the package."""


class LevySdeError(Exception):
    """Base class for all package-specific errors."""


class QuadratureError(LevySdeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the residual estimate of the last attempt in ``residual``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EllipticityError(LevySdeError):
    """A symbol is not elliptic where ellipticity was required.

    ``point`` holds the offending (x-index, xi-index) lattice location
    when one is known.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ContractionError(LevySdeError):
    """A fixed-point iteration failed to contract."""

    def __init__(self, message, contraction_estimate=None):
        super().__init__(message)
        self.contraction_estimate = contraction_estimate


class SpectralDistanceError(LevySdeError):
    """A resolvent shift is too close to the symbol range.

    ``point`` holds the lattice location where the distance is attained.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ConfigError(LevySdeError):
    """An experiment configuration failed validation.

    ``field`` names the offending configuration key when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
