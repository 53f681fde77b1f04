"""Exception types raised across the package."""


class TacticHMMError(Exception):
    """Base class for all package errors."""


class EncodingError(TacticHMMError, ValueError):
    """An observation or action name is not covered by the alphabet."""


class LogFormatError(TacticHMMError, ValueError):
    """A session log row is malformed.  ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelValidationError(TacticHMMError, ValueError):
    """Model parameters violate the stochasticity invariants."""


class DegenerateSequenceError(TacticHMMError):
    """Every hidden path has zero probability for the given sequence."""
