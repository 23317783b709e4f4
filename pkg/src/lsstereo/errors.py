"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when arguments violate an operation's preconditions."""


class FormatError(ValueError):
    """Raised when a file cannot be parsed.

    ``offset`` is the byte position where parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class NumericalInstabilityError(RuntimeError):
    """Raised when an update produces non-finite values."""
