"""Per-document linking flow: dictionary stage, LLM stage, combination.

The dictionary is consulted first for each mention. The LLM is prompted once
per document over all mentions, and its answer only fills mentions the
dictionary left open. LLM-stage failures are confined to the document they
happen in.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

from .corpus import Document, Mention, render_marked_text
from .dictionary import Dictionary, lookup
from .errors import ConfigError, DataError, Icd10LinkError
from .llm.alignment import align_predictions
from .llm.parsing import parse_response_with_issues
from .llm.prompt import PromptConfig, Shots, build_prompt
from .llm.providers import DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE, LlmProvider, LlmRequest
from .ontology import Icd10Code, parse_code

logger = logging.getLogger(__name__)

DICT_EXPLANATION = "dictionary exact match"
DEFAULT_MODEL = "gpt-4.1"
DEFAULT_PARALLELISM = 4


class RunMode(str, Enum):
    DICT_ONLY = "dict-only"
    LLM_ZERO_SHOT = "llm-zero-shot"
    LLM_ONE_SHOT = "llm-one-shot"
    DICT_PLUS_LLM_ZERO_SHOT = "dict+llm-zero-shot"
    DICT_PLUS_LLM_ONE_SHOT = "dict+llm-one-shot"

    @property
    def uses_dictionary(self) -> bool:
        return self.value.startswith("dict")

    @property
    def uses_llm(self) -> bool:
        return "llm" in self.value

    @property
    def shots(self) -> Shots | None:
        if not self.uses_llm:
            return None
        return Shots.ONE if self.value.endswith("one-shot") else Shots.ZERO

    @classmethod
    def parse(cls, value: str | RunMode) -> RunMode:
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ConfigError(f"unknown run mode {value!r} (expected one of: {choices})") from None


class Source(str, Enum):
    DICT = "dict"
    LLM = "llm"
    NONE = "none"


@dataclass(frozen=True)
class LinkedMention:
    doc_id: str
    start: int
    end: int
    surface: str
    predicted_code: Icd10Code | None
    all_codes: tuple[Icd10Code, ...]
    source: Source
    explanation: str = ""
    gold_code: Icd10Code | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "all_codes", tuple(self.all_codes))
        object.__setattr__(self, "source", Source(self.source))
        if self.source is Source.NONE and self.predicted_code is not None:
            raise ValueError("unlinked mention cannot carry a predicted code")
        if self.source is not Source.NONE and self.predicted_code is None:
            raise ValueError(f"{self.source.value}-sourced mention needs a predicted code")
        if self.source is Source.DICT and self.explanation != DICT_EXPLANATION:
            raise ValueError("dictionary-sourced mentions use the fixed explanation")

    @classmethod
    def unlinked(cls, mention: Mention) -> LinkedMention:
        return cls(mention.doc_id, mention.start, mention.end, mention.surface, None, (), Source.NONE, "", mention.gold_code)

    def to_json(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "start": self.start,
            "end": self.end,
            "surface": self.surface,
            "predicted_code": str(self.predicted_code) if self.predicted_code else None,
            "all_codes": [str(c) for c in self.all_codes],
            "source": self.source.value,
            "explanation": self.explanation,
            "gold_code": str(self.gold_code) if self.gold_code else None,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> LinkedMention:
        code = lambda v: parse_code(v) if v else None  # noqa: E731
        return cls(
            doc_id=data["doc_id"],
            start=int(data["start"]),
            end=int(data["end"]),
            surface=data["surface"],
            predicted_code=code(data.get("predicted_code")),
            all_codes=tuple(parse_code(c) for c in data.get("all_codes") or ()),
            source=Source(data.get("source", "none")),
            explanation=data.get("explanation") or "",
            gold_code=code(data.get("gold_code")),
        )


@dataclass(frozen=True)
class LlmStage:
    """Everything the LLM stage needs besides the document itself."""

    provider: LlmProvider
    prompt: PromptConfig
    model_name: str = DEFAULT_MODEL
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS
    overlap_policy: str = "longest"


@dataclass
class DocumentResult:
    doc_id: str
    mentions: list[LinkedMention]
    error: str | None = None
    warnings: list[str] = field(default_factory=list)


def check_components(mode: RunMode, dictionary: Dictionary | None, llm: LlmStage | None) -> None:
    if mode.uses_dictionary and dictionary is None:
        raise ConfigError(f"mode {mode.value} needs a dictionary")
    if mode.uses_llm and llm is None:
        raise ConfigError(f"mode {mode.value} needs an LLM provider and prompt config")
    if mode.shots is Shots.ONE and llm is not None:
        llm.prompt.with_shots(Shots.ONE)  # raises MissingExample


def _run_llm_stage(
    doc: Document, mentions: Sequence[Mention], mode: RunMode, llm: LlmStage, result: DocumentResult
) -> dict[int, Any]:
    marked = render_marked_text(doc, mentions, llm.overlap_policy)
    if len(marked.mention_order) < len(mentions):
        result.warnings.append(f"{len(mentions) - len(marked.mention_order)} overlapping mention(s) not marked")
    prompt = build_prompt(llm.prompt.with_shots(mode.shots), marked)
    request = LlmRequest(llm.model_name, prompt, llm.temperature, llm.max_tokens, doc_id=doc.doc_id)
    completion = llm.provider.complete(request)
    if completion.truncated:
        result.warnings.append("response truncated at max_tokens")
    predictions, issues = parse_response_with_issues(completion.text)
    result.warnings.extend(issues)

    marked_mentions = [mentions[i] for i in marked.mention_order]
    aligned = align_predictions(marked_mentions, predictions)
    used = sum(p is not None for p in aligned.values())
    if used < len(predictions):
        result.warnings.append(f"{len(predictions) - used} prediction(s) matched no mention")
    return {marked.mention_order[k]: pred for k, pred in aligned.items() if pred is not None}


def link_document(
    doc: Document,
    mentions: Sequence[Mention],
    mode: RunMode | str,
    dictionary: Dictionary | None = None,
    llm: LlmStage | None = None,
) -> DocumentResult:
    mode = RunMode.parse(mode)
    check_components(mode, dictionary, llm)
    for m in mentions:
        if m.doc_id != doc.doc_id:
            raise DataError(f"mention {m} does not belong to document {doc.doc_id!r}")
    result = DocumentResult(doc.doc_id, [])

    dict_hits: dict[int, Icd10Code] = {}
    if mode.uses_dictionary:
        for i, m in enumerate(mentions):
            code = lookup(dictionary, m.surface)
            if code is not None:
                dict_hits[i] = code

    llm_hits: dict[int, Any] = {}
    if mode.uses_llm and mentions:
        try:
            llm_hits = _run_llm_stage(doc, mentions, mode, llm, result)
        except Icd10LinkError as exc:
            result.error = f"{type(exc).__name__}: {exc}"
            logger.error("%s: LLM stage failed: %s", doc.doc_id, result.error)

    for i, m in enumerate(mentions):
        if i in dict_hits:
            code = dict_hits[i]
            linked = LinkedMention(m.doc_id, m.start, m.end, m.surface, code, (code,), Source.DICT, DICT_EXPLANATION, m.gold_code)
        elif i in llm_hits:
            pred = llm_hits[i]
            linked = LinkedMention(
                m.doc_id, m.start, m.end, m.surface, pred.primary_code, pred.codes, Source.LLM, pred.explanation, m.gold_code
            )
        else:
            linked = LinkedMention.unlinked(m)
        result.mentions.append(linked)
    return result


@dataclass
class CorpusResult:
    mode: RunMode
    documents: list[DocumentResult]

    @property
    def linked(self) -> list[LinkedMention]:
        out = [lm for d in self.documents for lm in d.mentions]
        out.sort(key=lambda lm: (lm.doc_id, lm.start, lm.end))
        return out

    @property
    def report(self) -> dict[str, Any]:
        by_source = Counter(lm.source.value for d in self.documents for lm in d.mentions)
        failed = sorted((d for d in self.documents if d.error), key=lambda d: d.doc_id)
        warned = sorted((d for d in self.documents if d.warnings), key=lambda d: d.doc_id)
        return {
            "mode": self.mode.value,
            "documents": len(self.documents),
            "documents_ok": len(self.documents) - len(failed),
            "documents_failed": len(failed),
            "mentions": sum(len(d.mentions) for d in self.documents),
            "by_source": {s.value: by_source.get(s.value, 0) for s in Source},
            "errors": {d.doc_id: d.error for d in failed},
            "warnings": {d.doc_id: list(d.warnings) for d in warned},
        }

    @property
    def all_failed(self) -> bool:
        return bool(self.documents) and all(d.error for d in self.documents)


def link_corpus(
    documents: Iterable[Document],
    mentions: Iterable[Mention],
    mode: RunMode | str,
    dictionary: Dictionary | None = None,
    llm: LlmStage | None = None,
    parallelism: int = DEFAULT_PARALLELISM,
) -> CorpusResult:
    mode = RunMode.parse(mode)
    if parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    check_components(mode, dictionary, llm)
    documents = sorted(documents, key=lambda d: d.doc_id)
    by_doc: dict[str, list[Mention]] = defaultdict(list)
    for m in mentions:
        by_doc[m.doc_id].append(m)
    unknown = set(by_doc) - {d.doc_id for d in documents}
    if unknown:
        raise DataError(f"mentions reference unknown documents: {sorted(unknown)}")

    def work(doc: Document) -> DocumentResult:
        doc_mentions = sorted(by_doc.get(doc.doc_id, []), key=lambda m: (m.start, m.end))
        return link_document(doc, doc_mentions, mode, dictionary, llm)

    if parallelism == 1:
        results = [work(d) for d in documents]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(work, documents))
    return CorpusResult(mode, results)


def write_jsonl(linked: Iterable[LinkedMention], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for lm in linked:
            fh.write(json.dumps(lm.to_json(), ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[LinkedMention]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(LinkedMention.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{line_no}: bad prediction record: {exc}") from None
    return out


def write_report(report: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
