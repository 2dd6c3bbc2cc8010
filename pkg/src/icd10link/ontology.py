"""ICD-10 code values, parsing, and level-based comparison.

Codes are treated as grammar-valid strings: a three character category
(letter + two digits) and an optional alphanumeric extension of up to four
characters. Nothing here checks a code against the official code list.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import MalformedCode

_CATEGORY_RE = re.compile(r"[A-Z][0-9]{2}")
_EXTENSION_RE = re.compile(r"[A-Z0-9]{0,4}")
_QUOTES = "\"'`“”‘’"
MAX_EXTENSION = 4


class CodeLevel(str, Enum):
    CATEGORY = "category"
    SUBCATEGORY = "subcategory"
    FULL = "full"

    @property
    def extension_chars(self) -> int | None:
        """Number of extension characters kept, ``None`` meaning all."""
        return {CodeLevel.CATEGORY: 0, CodeLevel.SUBCATEGORY: 1, CodeLevel.FULL: None}[self]

    @classmethod
    def parse(cls, value: str | CodeLevel) -> CodeLevel:
        if isinstance(value, CodeLevel):
            return value
        try:
            return cls(value.strip().lower())
        except ValueError:
            choices = ", ".join(level.value for level in cls)
            raise ValueError(f"unknown code level {value!r} (expected one of: {choices})") from None


@dataclass(frozen=True, order=True)
class Icd10Code:
    category: str
    extension: str = ""

    def __post_init__(self) -> None:
        if not _CATEGORY_RE.fullmatch(self.category):
            raise MalformedCode(self.category, "category must be an uppercase letter followed by two digits")
        if not _EXTENSION_RE.fullmatch(self.extension):
            raise MalformedCode(
                self.extension, f"extension must be 0-{MAX_EXTENSION} uppercase alphanumerics"
            )

    def __str__(self) -> str:
        return f"{self.category}.{self.extension}" if self.extension else self.category

    def render(self) -> str:
        return str(self)

    def truncate(self, level: CodeLevel) -> Icd10Code:
        return truncate(self, level)


def parse_code(raw: str) -> Icd10Code:
    """Parse a dotted or undotted ICD-10 code, case-insensitively.

    >>> str(parse_code(" b6799 "))
    'B67.99'
    """
    if not isinstance(raw, str):
        raise MalformedCode(repr(raw), "not a string")
    text = raw.strip().strip(_QUOTES).strip().upper()
    if not text:
        raise MalformedCode(raw, "empty code")
    if not text[0].isascii() or not text[0].isalpha():
        raise MalformedCode(raw, "first character must be a letter")

    if "." in text:
        category, _, extension = text.partition(".")
        if "." in extension:
            raise MalformedCode(raw, "more than one dot")
    else:
        category, extension = text[:3], text[3:]

    if not _CATEGORY_RE.fullmatch(category):
        raise MalformedCode(raw, "category must be a letter followed by two digits")
    if not (extension.isascii() and (extension == "" or extension.isalnum())):
        raise MalformedCode(raw, "extension must be alphanumeric")
    if len(extension) > MAX_EXTENSION:
        raise MalformedCode(raw, f"extension longer than {MAX_EXTENSION} characters")
    return Icd10Code(category, extension)


def truncate(code: Icd10Code, level: CodeLevel) -> Icd10Code:
    keep = CodeLevel.parse(level).extension_chars
    if keep is None or len(code.extension) <= keep:
        return code
    return Icd10Code(code.category, code.extension[:keep])


def codes_match(a: Icd10Code, b: Icd10Code, level: CodeLevel) -> bool:
    return str(truncate(a, level)) == str(truncate(b, level))
