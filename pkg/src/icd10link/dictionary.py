"""Unambiguous term -> ICD-10 dictionary.

Sources are UTF-8 TSV files of ``term<TAB>code`` pairs (official
classification term lists, training-set annotations). After normalizing each
term and truncating each code to the configured level, a term enters the
dictionary only when all of its codes collapse to a single value. Terms with
several distinct codes are kept aside as ambiguous and never returned by
:func:`lookup`.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import ConfigError, MalformedCode, MalformedLine, SourceIoError
from .ontology import CodeLevel, Icd10Code, parse_code, truncate

logger = logging.getLogger(__name__)

_WHITESPACE_RE = re.compile(r"\s+")


class SourceKind(str, Enum):
    SPECIFICATION = "specification"
    TRAIN_SET = "train_set"


@dataclass(frozen=True)
class DictionarySource:
    path: Path
    kind: SourceKind
    language: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "path", Path(self.path))
        object.__setattr__(self, "kind", SourceKind(self.kind))


@dataclass(frozen=True)
class DictionaryStats:
    raw_pair_count: int = 0
    distinct_term_count: int = 0
    unambiguous_count: int = 0
    ambiguous_count: int = 0

    def to_dict(self) -> dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class Dictionary:
    language: str
    level: CodeLevel
    entries: Mapping[str, Icd10Code]
    ambiguous_terms: frozenset[str]
    stats: DictionaryStats = field(default_factory=DictionaryStats)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", MappingProxyType(dict(sorted(self.entries.items()))))
        object.__setattr__(self, "ambiguous_terms", frozenset(self.ambiguous_terms))
        if not self.ambiguous_terms.isdisjoint(self.entries):
            raise ValueError("a term cannot be both unambiguous and ambiguous")
        for term, code in self.entries.items():
            if truncate(code, self.level) != code:
                raise ValueError(f"code {code} for {term!r} is finer than level {self.level.value}")

    @property
    def entry_count(self) -> int:
        return len(self.entries)

    def lookup(self, surface: str) -> Icd10Code | None:
        return lookup(self, surface)


def _is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_term(surface: str) -> str:
    """Normalize a term for exact matching.

    NFC composition, case folding, whitespace collapsing, trimming, then
    stripping punctuation (including ``*`` markers) from both ends.
    Diacritics are kept.
    """
    text = unicodedata.normalize("NFC", surface)
    # casefold may decompose (e.g. U+0130), so recompose afterwards
    text = unicodedata.normalize("NFC", text.casefold())
    text = _WHITESPACE_RE.sub(" ", text).strip()
    start, end = 0, len(text)
    while start < end and (_is_punctuation(text[start]) or text[start] == " "):
        start += 1
    while end > start and (_is_punctuation(text[end - 1]) or text[end - 1] == " "):
        end -= 1
    return text[start:end]


def read_pairs(source: DictionarySource) -> Iterable[tuple[str, Icd10Code, int]]:
    """Yield ``(raw_term, code, line_no)`` for every data line of a source file."""
    path = str(source.path)
    try:
        with open(source.path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise SourceIoError(f"cannot read dictionary source {path}: {exc}") from exc

    for line_no, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedLine(path, line_no, f"expected 'term<TAB>code', got {len(parts)} field(s)")
        term, raw_code = parts
        if not normalize_term(term):
            raise MalformedLine(path, line_no, "empty term")
        try:
            code = parse_code(raw_code)
        except MalformedCode as exc:
            raise exc.at(f"{path}:{line_no}") from None
        yield term, code, line_no


def build_dictionary(
    sources: Iterable[DictionarySource], level: CodeLevel | str = CodeLevel.CATEGORY
) -> tuple[Dictionary, DictionaryStats]:
    level = CodeLevel.parse(level)
    sources = list(sources)
    languages = {src.language for src in sources}
    if len(languages) > 1:
        raise ConfigError(f"dictionary sources mix languages: {sorted(languages)}")
    language = languages.pop() if languages else ""

    codes_by_term: dict[str, set[Icd10Code]] = defaultdict(set)
    raw_pairs = 0
    for source in sources:
        for term, code, _ in read_pairs(source):
            raw_pairs += 1
            codes_by_term[normalize_term(term)].add(truncate(code, level))

    entries = {t: next(iter(c)) for t, c in codes_by_term.items() if len(c) == 1}
    ambiguous = frozenset(t for t, c in codes_by_term.items() if len(c) > 1)
    stats = DictionaryStats(
        raw_pair_count=raw_pairs,
        distinct_term_count=len(codes_by_term),
        unambiguous_count=len(entries),
        ambiguous_count=len(ambiguous),
    )
    logger.info(
        "built %s dictionary at %s level: %d unambiguous, %d ambiguous terms",
        language or "?", level.value, stats.unambiguous_count, stats.ambiguous_count,
    )
    return Dictionary(language, level, entries, ambiguous, stats), stats


def lookup(dictionary: Dictionary, surface: str) -> Icd10Code | None:
    return dictionary.entries.get(normalize_term(surface))


def dictionary_stats(dictionary: Dictionary) -> DictionaryStats:
    return dictionary.stats


# Compiled form: "#! key=value" header lines, "#? term" lines for ambiguous
# terms, then sorted "term<TAB>code" data lines.

_HEADER = "#! "
_AMBIGUOUS = "#? "


def save_dictionary(dictionary: Dictionary, path: str | Path) -> None:
    lines = [
        f"{_HEADER}language={dictionary.language}",
        f"{_HEADER}level={dictionary.level.value}",
    ]
    lines += [f"{_HEADER}{k}={v}" for k, v in dictionary.stats.to_dict().items()]
    lines += [f"{_AMBIGUOUS}{term}" for term in sorted(dictionary.ambiguous_terms)]
    lines += [f"{term}\t{code}" for term, code in sorted(dictionary.entries.items())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_dictionary(path: str | Path) -> Dictionary:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise SourceIoError(f"cannot read compiled dictionary {path}: {exc}") from exc

    header: dict[str, str] = {}
    ambiguous: set[str] = set()
    entries: dict[str, Icd10Code] = {}
    for line_no, line in enumerate(lines, start=1):
        if line.startswith(_HEADER):
            key, _, value = line[len(_HEADER):].partition("=")
            header[key] = value
        elif line.startswith(_AMBIGUOUS):
            ambiguous.add(line[len(_AMBIGUOUS):])
        elif not line.strip() or line.startswith("#"):
            continue
        else:
            term, sep, raw_code = line.partition("\t")
            if not sep:
                raise MalformedLine(str(path), line_no, "expected 'term<TAB>code'")
            try:
                entries[term] = parse_code(raw_code)
            except MalformedCode as exc:
                raise exc.at(f"{path}:{line_no}") from None

    if "level" not in header:
        raise MalformedLine(str(path), 1, "missing level header; not a compiled dictionary")
    try:
        stats = DictionaryStats(**{k: int(header[k]) for k in DictionaryStats.__dataclass_fields__})
    except (KeyError, ValueError) as exc:
        raise MalformedLine(str(path), 1, f"bad stats header: {exc}") from None
    return Dictionary(header.get("language", ""), CodeLevel.parse(header["level"]), entries, ambiguous, stats)
