"""Shared exception types."""

from __future__ import annotations


class StreamTwinError(Exception):
    """Base class for all package errors."""


class ConfigurationError(StreamTwinError, ValueError):
    """A parameter or config combination that cannot be acted on."""


class SchemaError(StreamTwinError, ValueError):
    """Persisted or incoming data does not match the expected shape."""


class DroppableSession(StreamTwinError):
    """A session that cannot yield an engagement label and must be removed."""
