"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ConfigError(ValueError):
    """A run configuration could not be resolved."""


class RecordParseError(ValueError):
    """A record CSV row failed validation."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class InvariantError(RuntimeError):
    """A result violated an internal consistency check."""
