"""Exception types raised by starmetric."""


class StarMetricError(Exception):
    """Base class for all library errors."""


class DomainError(StarMetricError, ValueError):
    """Negative, NaN or infinite value passed where a finite non-negative real is required."""


class NoRadiusError(StarMetricError):
    """Bisection could not find a positive radius for a definer."""


class SizeError(StarMetricError):
    """A finite operation was asked to work on too many points."""


class ConfigurationError(StarMetricError, ValueError):
    """Incompatible inputs, e.g. product factors with different definers."""


class BoundError(StarMetricError):
    """A union part has a distance above 1."""

    def __init__(self, message, part=None, pair=None, value=None):
        super().__init__(message)
        self.part = part
        self.pair = pair
        self.value = value


class PreconditionError(StarMetricError):
    """The input violates a documented precondition (e.g. a space failing its axioms)."""


class InsufficientDataError(StarMetricError):
    """A sequence prefix is too short for the requested schedule."""


class InvalidFamilyError(StarMetricError):
    """A nested family of closed sets is not actually nested."""


class DensityViolationError(StarMetricError):
    """A supposedly dense set has no member in a required ball."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class InputError(StarMetricError, ValueError):
    """Malformed input file or spec; the message names the line or field."""
