"""Exception hierarchy for ddmap."""


class DDMapError(ValueError):
    """Base class for all errors raised by this package."""


class ResonanceError(DDMapError):
    """The kick strength is undefined because sin(pi * omega) vanishes."""


class ParameterOverflowError(DDMapError, OverflowError):
    """A closed-form parameter does not fit in double precision."""


class DomainError(DDMapError):
    """An input lies outside the domain of a map or curve."""


class DivergenceError(DDMapError):
    """An orbit left the admissible region.

    Attributes
    ----------
    index : int
        Iteration index of the offending value.
    value : float
        The offending value.
    """

    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"orbit diverged at iterate {index} (value={value!r})")


class WindowTooShortError(DDMapError):
    """The retained orbit is too short for the requested period search."""


class ParseError(DDMapError):
    """Malformed impact CSV input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RecordValidationError(ParseError):
    """Impact records violate an invariant (ordering or sign)."""


class RankDeficiencyError(DDMapError):
    """A least-squares fit has no unique solution."""
