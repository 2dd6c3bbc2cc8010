"""Annotated discharge-summary corpora and asterisk-marked rendering.

On disk a corpus is a directory of ``<doc_id>.txt`` files plus one
annotations TSV with columns ``doc_id, start, end, surface, gold_code``.
Offsets count Unicode code points, end exclusive. ``gold_code`` may be empty
for inference-only corpora.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import (
    DataError,
    MalformedCode,
    MalformedLine,
    MissingDocument,
    OverlapConflict,
    SourceIoError,
    SpanOutOfBounds,
    SurfaceMismatch,
)
from .ontology import Icd10Code, parse_code

logger = logging.getLogger(__name__)

MARKER = "*"
ANNOTATION_COLUMNS = ("doc_id", "start", "end", "surface", "gold_code")


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    language: str = ""

    def __post_init__(self) -> None:
        if not self.text:
            raise DataError(f"document {self.doc_id!r} has empty text")


@dataclass(frozen=True)
class Mention:
    doc_id: str
    start: int
    end: int
    surface: str
    gold_code: Icd10Code | None = None

    def overlaps(self, other: Mention) -> bool:
        return self.doc_id == other.doc_id and self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class MarkedDocument:
    doc_id: str
    marked_text: str
    mention_order: tuple[int, ...]
    """Indices (into the mentions passed to :func:`render_marked_text`) of
    the marked mentions, left to right."""
    marker_positions: tuple[int, ...]
    """Positions of the inserted ``*`` characters within ``marked_text``."""

    def unmark(self) -> str:
        drop = set(self.marker_positions)
        return "".join(ch for i, ch in enumerate(self.marked_text) if i not in drop)


def _read_lines(path: Path) -> list[str]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return [line.rstrip("\r\n") for line in fh]
    except (OSError, UnicodeDecodeError) as exc:
        raise SourceIoError(f"cannot read {path}: {exc}") from exc


def read_annotations(annotations_path: str | Path) -> list[Mention]:
    """Parse an annotations TSV without checking spans against any text.

    Blank lines and lines starting with ``#`` are skipped, as is a header row
    naming the columns.
    """
    path = Path(annotations_path)
    mentions = []
    for line_no, line in enumerate(_read_lines(path), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if line_no == 1 and tuple(fields[:3]) == ANNOTATION_COLUMNS[:3]:
            continue
        if len(fields) == 4:
            fields.append("")
        if len(fields) != 5:
            raise MalformedLine(str(path), line_no, f"expected 5 tab-separated fields, got {len(fields)}")
        doc_id, start, end, surface, raw_code = fields
        try:
            start_i, end_i = int(start), int(end)
        except ValueError:
            raise MalformedLine(str(path), line_no, f"non-integer offsets {start!r}, {end!r}") from None
        gold = None
        if raw_code.strip():
            try:
                gold = parse_code(raw_code)
            except MalformedCode as exc:
                raise exc.at(f"{path}:{line_no}") from None
        mentions.append(Mention(doc_id, start_i, end_i, surface, gold))
    return mentions


def load_corpus(
    text_dir: str | Path, annotations_path: str | Path, language: str = ""
) -> tuple[list[Document], list[Mention]]:
    text_dir = Path(text_dir)
    if not text_dir.is_dir():
        raise SourceIoError(f"corpus text directory not found: {text_dir}")
    documents = {}
    for path in sorted(text_dir.glob("*.txt")):
        documents[path.stem] = Document(path.stem, _read_text(path), language)

    mentions = read_annotations(annotations_path)
    for m in mentions:
        doc = documents.get(m.doc_id)
        if doc is None:
            raise MissingDocument(f"annotation references missing document {m.doc_id!r} ({text_dir})")
        validate_mention(doc, m)
    mentions.sort(key=lambda m: (m.doc_id, m.start, m.end))
    return [documents[k] for k in sorted(documents)], mentions


def _read_text(path: Path) -> str:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise SourceIoError(f"cannot read {path}: {exc}") from exc


def validate_mention(doc: Document, mention: Mention) -> None:
    if not 0 <= mention.start < mention.end <= len(doc.text):
        raise SpanOutOfBounds(
            f"{mention.doc_id}: span [{mention.start}, {mention.end}) outside text of length {len(doc.text)}"
        )
    actual = doc.text[mention.start:mention.end]
    if actual != mention.surface:
        raise SurfaceMismatch(
            f"{mention.doc_id}: span [{mention.start}, {mention.end}) is {actual!r}, annotation says {mention.surface!r}"
        )


def select_non_overlapping(mentions: Sequence[Mention], policy: str = "longest") -> list[int]:
    """Return indices of the mentions to mark, in ascending start order.

    With ``policy="longest"`` overlaps are resolved by keeping the longer
    span (earlier start, then input order, break ties); ``"strict"`` raises
    :class:`OverlapConflict` instead.
    """
    if policy not in ("longest", "strict"):
        raise ValueError(f"unknown overlap policy {policy!r}")
    ranked = sorted(range(len(mentions)), key=lambda i: (-(mentions[i].end - mentions[i].start), mentions[i].start, i))
    kept: list[int] = []
    for i in ranked:
        clash = next((k for k in kept if mentions[k].overlaps(mentions[i])), None)
        if clash is None:
            kept.append(i)
            continue
        if policy == "strict":
            raise OverlapConflict(f"{mentions[i].doc_id}: mentions {mentions[clash]} and {mentions[i]} overlap")
        logger.warning("%s: dropping mention %r overlapping %r", mentions[i].doc_id, mentions[i].surface, mentions[clash].surface)
    return sorted(kept, key=lambda i: (mentions[i].start, i))


def render_marked_text(doc: Document, mentions: Sequence[Mention], policy: str = "longest") -> MarkedDocument:
    for m in mentions:
        if m.doc_id != doc.doc_id:
            raise DataError(f"mention {m} does not belong to document {doc.doc_id!r}")
        validate_mention(doc, m)
    order = select_non_overlapping(mentions, policy)

    text = doc.text
    for i in reversed(order):
        m = mentions[i]
        text = f"{text[:m.start]}{MARKER}{text[m.start:m.end]}{MARKER}{text[m.end:]}"
    positions = []
    for rank, i in enumerate(order):
        m = mentions[i]
        # each earlier mention shifted the text right by two markers
        positions += [m.start + 2 * rank, m.end + 2 * rank + 1]
    return MarkedDocument(doc.doc_id, text, tuple(order), tuple(positions))
