"""Exception types shared across the package."""

from __future__ import annotations


class OntoclassError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(OntoclassError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class OntologyError(OntoclassError):
    """Inconsistent or unusable ontology content."""


class ConfigError(OntoclassError):
    """Invalid experiment configuration; names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ExperimentError(OntoclassError):
    """Failure while running an experiment; carries fold context."""
