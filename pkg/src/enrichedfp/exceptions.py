"""Exception types raised by the toolkit."""


class EnrichedFPError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(EnrichedFPError, ValueError):
    """Operands have incompatible dimensions."""


class OutOfDomainError(EnrichedFPError, ValueError):
    """A point lies outside a mapping's declared domain."""


class DomainEscapeError(EnrichedFPError, RuntimeError):
    """The iteration produced a point outside the mapping's domain.

    Carries the offending iterate and its index so the failure can be
    reported precisely.
    """

    def __init__(self, message, point=None, iteration=None):
        super().__init__(message)
        self.point = point
        self.iteration = iteration


class InvalidConstantError(EnrichedFPError, ValueError):
    """A contraction/enrichment constant is outside its admissible range."""


class DegenerateSampleError(EnrichedFPError, ValueError):
    """Every sample pair has zero displacement; no rate can be estimated."""


class AutoLambdaError(EnrichedFPError, ValueError):
    """Automatic step-size selection was requested but no feasible

    certificate is available; an explicit relaxation factor is required.
    """


class GammaRangeError(EnrichedFPError, ValueError):
    """The projection step length is outside the admissible interval."""


class ConfigError(EnrichedFPError, ValueError):
    """A run configuration or input file is malformed.

    ``context`` names the file/field that failed validation.
    """

    def __init__(self, message, context=None):
        if context:
            message = f"{context}: {message}"
        super().__init__(message)
        self.context = context
