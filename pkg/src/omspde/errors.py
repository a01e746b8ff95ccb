"""Exception hierarchy shared by every module."""


class OMError(Exception):
    """Base class for library errors."""


class InvalidArgument(OMError, ValueError):
    """An argument is malformed or outside its admissible range."""


class PreconditionViolation(OMError):
    """A standing hypothesis required by an operation does not hold."""


class ConfigError(OMError):
    """A run configuration could not be parsed or validated."""
