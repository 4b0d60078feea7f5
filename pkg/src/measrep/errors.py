"""Exception types shared across the package."""


class MeasrepError(Exception):
    """Base class for all errors raised by measrep."""


class DimensionTooLarge(MeasrepError):
    """A tensor-product dimension exceeded the configured cap."""


class ShapeMismatch(MeasrepError):
    """Matrix/vector dimensions are inconsistent with the declared factors."""


class NotHermitian(MeasrepError):
    """Input to a Hermitian-only routine was not Hermitian within tolerance."""


class InvalidBounds(MeasrepError):
    """Eigenvalue bounds or noise parameters outside their admissible range."""


class Infeasible(MeasrepError):
    """Quadratic-program constraints admit no feasible point."""


class Unachievable(MeasrepError):
    """Requested expectation values cannot be realised by any state."""


class SearchSpaceTooLarge(MeasrepError):
    """Exhaustive enumeration was requested beyond its size cap."""


class ZeroProbabilityOutcome(MeasrepError):
    """Conditioning on an outcome whose probability vanishes."""


class TrivialMeasurement(MeasrepError):
    """All POVM elements are proportional to the identity."""


class NotNormalized(MeasrepError):
    """Kraus operators do not sum to a trace-preserving map."""


class Undecodable(MeasrepError):
    """Every hypothesis was eliminated by a zero-likelihood symbol."""


class TooFewSamples(MeasrepError):
    """Monte Carlo sample count below the supported minimum."""


class NotConverged(MeasrepError):
    """Iteration hit its cap before reaching the requested gap.

    Carries the best two-sided bounds computed so far.
    """

    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class TooLarge(MeasrepError):
    """Codebook or enumeration size beyond the supported cap."""


class MalformedFile(MeasrepError):
    """Measurement file failed to parse against the JSON schema."""


class InvalidMeasurement(MeasrepError):
    """Parsed measurement failed validation; carries the violation report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
