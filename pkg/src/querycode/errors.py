"""Exception hierarchy shared by every module."""


class QueryCodeError(Exception):
    """Base class for all package errors."""


class DomainError(QueryCodeError, ValueError):
    """An argument lies outside the domain of a function."""


class ValidationError(QueryCodeError, ValueError):
    """A structured value (graph, config, answers) is malformed."""


class DecodeFailure(QueryCodeError):
    """A decoder found no admissible output."""


class ParseError(QueryCodeError, ValueError):
    """A CSV or config file could not be parsed."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
