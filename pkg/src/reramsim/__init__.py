"""Device, crossbar, performance and training models for analog ReRAM
neural-network accelerators."""

from .errors import ConfigError, DomainError, FormatError, TraceParseError

__version__ = "0.1.0"

__all__ = ["ConfigError", "DomainError", "FormatError", "TraceParseError", "__version__"]
