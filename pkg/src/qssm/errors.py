"""Exception hierarchy shared by all modules."""


class QSSMError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(QSSMError, ValueError):
    """An argument is out of range or has the wrong shape."""


class CapacityError(QSSMError, ValueError):
    """The requested object would exceed the supported register count."""


class EncodingError(QSSMError, ValueError):
    """Data cannot be turned into a normalized state."""


class ParseError(QSSMError, ValueError):
    """A state or configuration file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedGateError(QSSMError, TypeError):
    """The gate kind does not admit a parameter-shift derivative."""


class NumericalError(QSSMError, ArithmeticError):
    """An iterative numerical routine failed to converge."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)


class ConfigError(QSSMError, ValueError):
    """Configuration validation failed; ``errors`` lists every violated field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{e['field']}: {e['message']}" for e in self.errors))
