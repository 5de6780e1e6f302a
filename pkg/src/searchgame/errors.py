"""Exception types raised across the package."""


class SearchGameError(Exception):
    """Base class for all errors raised by searchgame."""


class SpecError(SearchGameError, ValueError):
    """A game spec violates a structural constraint.

    ``location`` is a short human-readable pointer to the offending data
    (for example ``"matrices[0] row 1"``); it is ``None`` when the error is
    not tied to one place.
    """

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location


class NegativeEntry(SpecError):
    pass


class RowSumNotOne(SpecError):
    pass


class BeliefSumNotOne(SpecError):
    pass


class DimensionMismatch(SpecError):
    pass


class EmptySchedule(SpecError):
    pass


class SpecParseError(SpecError):
    """A game spec document could not be parsed; carries line/column when known."""

    def __init__(self, message, line=None, column=None):
        loc = None if line is None else f"line {line}, column {column}"
        super().__init__(message, loc)
        self.line = line
        self.column = column


class ParameterOutOfRange(SpecError):
    pass


class SpecMismatch(SpecError):
    """A strategy was bound to a chain of the wrong shape."""


class ConditioningOnCertainty(SearchGameError, ValueError):
    """Conditioning on a miss at a state that holds (almost) all the mass."""


class NotIrreducible(SearchGameError, ValueError):
    pass


class HorizonTooLarge(SearchGameError):
    """The backward-induction tree would exceed the node budget."""


class UnknownStrategy(SearchGameError, ValueError):
    pass


class UnsupportedDimension(SearchGameError, ValueError):
    pass
