"""Two-stage ICD-10 entity linking: unambiguous dictionary match, then
in-context LLM prediction over the whole document, with micro P/R/F1
evaluation at category and subcategory level."""

from .corpus import Document, MarkedDocument, Mention, load_corpus, render_marked_text
from .dictionary import (
    Dictionary,
    DictionarySource,
    DictionaryStats,
    SourceKind,
    build_dictionary,
    dictionary_stats,
    load_dictionary,
    lookup,
    normalize_term,
    save_dictionary,
)
from .evaluation import EvalResult, error_report, evaluate
from .ontology import CodeLevel, Icd10Code, codes_match, parse_code, truncate
from .pipeline import CorpusResult, DocumentResult, LinkedMention, LlmStage, RunMode, Source, link_corpus, link_document

__version__ = "0.1.0"

__all__ = [
    "CodeLevel",
    "CorpusResult",
    "Dictionary",
    "DictionarySource",
    "DictionaryStats",
    "Document",
    "DocumentResult",
    "EvalResult",
    "Icd10Code",
    "LinkedMention",
    "LlmStage",
    "MarkedDocument",
    "Mention",
    "RunMode",
    "Source",
    "SourceKind",
    "build_dictionary",
    "codes_match",
    "dictionary_stats",
    "error_report",
    "evaluate",
    "link_corpus",
    "link_document",
    "load_corpus",
    "load_dictionary",
    "lookup",
    "normalize_term",
    "parse_code",
    "render_marked_text",
    "save_dictionary",
    "truncate",
]
