"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A component was configured inconsistently."""


class DataError(ValueError):
    """Input data cannot satisfy an operation's preconditions."""


class FormatError(DataError):
    """A file does not match its documented schema."""
