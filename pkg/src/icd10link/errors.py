"""Exception hierarchy shared across the package."""

from __future__ import annotations


class Icd10LinkError(Exception):
    """Base class for all package errors."""


class ConfigError(Icd10LinkError, ValueError):
    """Invalid configuration or missing pipeline component."""


class DataError(Icd10LinkError):
    """Problem with input data (dictionary sources, corpora, predictions)."""


class MalformedCode(DataError, ValueError):
    """A string that does not follow the ICD-10 code grammar."""

    def __init__(self, raw: str, reason: str, location: str | None = None):
        self.raw = raw
        self.reason = reason
        self.location = location
        where = f"{location}: " if location else ""
        super().__init__(f"{where}malformed ICD-10 code {raw!r}: {reason}")

    def at(self, location: str) -> MalformedCode:
        return MalformedCode(self.raw, self.reason, location)


class SourceIoError(DataError, OSError):
    pass


class MalformedLine(DataError, ValueError):
    def __init__(self, path: str, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {reason}")


class MissingDocument(DataError):
    pass


class SpanOutOfBounds(DataError):
    pass


class SurfaceMismatch(DataError):
    pass


class OverlapConflict(DataError):
    pass


class MissingGold(DataError):
    pass


# LLM stage


class PromptError(ConfigError):
    pass


class MissingPlaceholder(PromptError):
    pass


class MissingExample(PromptError):
    pass


class NoJsonFound(DataError):
    """The model response contains no decodable JSON array."""


class ProviderError(Icd10LinkError):
    """An LLM provider call failed."""


class AuthError(ProviderError):
    """Credential missing or rejected. Never retried."""


class ProviderExhausted(ProviderError):
    """Transient failures persisted through every retry attempt."""
