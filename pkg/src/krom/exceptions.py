"""Exception hierarchy for the simulation engine."""


class KromError(Exception):
    """Base class for all engine errors."""


class DimensionError(KromError, ValueError):
    pass


class SingularCovariance(KromError, ValueError):
    pass


class NotPositiveDefinite(KromError, ValueError):
    pass


class SingularFactor(KromError, ValueError):
    pass


class InvalidLMatrix(KromError, ValueError):
    """A matrix expected to be a scaled L matrix violates its constraints."""


class NotAdmissible(KromError, ValueError):
    """Raised when a solve is requested for values that fail the admissibility check."""


class AssumptionViolated(KromError, ValueError):
    pass


class AdmissibilityExhausted(KromError, RuntimeError):
    """No admissible draw was found for a column within the attempt budget."""

    def __init__(self, column, attempts, block=None):
        self.column = column
        self.attempts = attempts
        self.block = block
        where = f"column {column}" if block is None else f"column {column} of block {block}"
        super().__init__(f"no admissible arbitrary values for {where} after {attempts} attempts")


class SourceTooNarrow(KromError, ValueError):
    pass


class DegenerateValues(KromError, ValueError):
    pass


class SkewnessOutOfRange(KromError, ValueError):
    pass


class RootSearchFailed(KromError, RuntimeError):
    pass


class DomainError(KromError, ValueError):
    pass


class WindowTooLarge(KromError, ValueError):
    pass


class ScaleTooLarge(KromError, ValueError):
    pass


class TrialsExhausted(KromError, RuntimeError):
    pass


class ParseError(KromError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        super().__init__(message)


class RaggedRows(ParseError):
    pass


class NonFinite(ParseError):
    pass
