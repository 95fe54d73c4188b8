"""Exception taxonomy.

UserInputError subclasses cover problems a caller can fix (bad files, bad
parameters, undersized data); everything else signals an internal failure.
The CLI maps UserInputError to exit code 2 and any other error to 1.
"""


class WflabError(Exception):
    """Base class for all library errors."""


class UserInputError(WflabError):
    """A problem with user-supplied data, parameters, or configuration."""


class ParseError(UserInputError):
    """A file could not be parsed; the message names the file and line."""


class DataError(UserInputError):
    """Parsed data violates a structural invariant (duplicates, bad candle)."""


class DomainError(UserInputError):
    """A numeric precondition fails (zero price, zero variance)."""


class CoverageError(UserInputError):
    """An exogenous series does not cover the requested period."""


class InsufficientDataError(UserInputError):
    """Too few observations for the requested computation."""


class ParameterError(UserInputError):
    """An operation parameter violates its precondition."""


class SizingError(UserInputError):
    """A requested window layout does not fit the available rows."""


class AlignmentError(UserInputError):
    """Window segments are not contiguous in time."""


class ConfigError(UserInputError):
    """A run configuration file is missing, malformed, or inconsistent."""


class SearchError(UserInputError):
    """A hyperparameter search cannot produce a result."""


class CheckpointError(UserInputError):
    """A model checkpoint is missing or malformed."""


class ShapeError(WflabError):
    """Array shapes are incompatible; the message names both shapes."""


class DivergenceError(WflabError):
    """Training produced a non-finite loss; diagnostics in the message."""
