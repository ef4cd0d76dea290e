"""Exception types shared across the simulator."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ConfigError(ValueError):
    """A configuration is inconsistent (e.g. core shapes vs. layer sizes)."""


class FormatError(ValueError):
    """An input file does not follow its documented format."""


class TraceParseError(FormatError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
