"""Parse the model's JSON-array answer into term predictions."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Any

from ..errors import MalformedCode, NoJsonFound
from ..ontology import Icd10Code, parse_code

logger = logging.getLogger(__name__)

TERM_KEY_PREFIX = "medical_term"
CODE_KEY = "icd10_code"
EXPLANATION_KEY = "explanation"

_decoder = json.JSONDecoder()


@dataclass(frozen=True)
class TermPrediction:
    term: str
    codes: tuple[Icd10Code, ...]
    explanation: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "codes", tuple(self.codes))
        if not self.term:
            raise ValueError("term must be non-empty")
        if not self.codes:
            raise ValueError("a prediction needs at least one code")

    @property
    def primary_code(self) -> Icd10Code:
        return self.codes[0]


def _strip_trailing_commas(text: str) -> str:
    """Remove commas that directly precede ``]`` or ``}`` outside strings."""
    out: list[str] = []
    in_string = escaped = False
    pending_comma: int | None = None
    for ch in text:
        if in_string:
            out.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch in "]}" and pending_comma is not None:
            del out[pending_comma]
        if ch == ",":
            pending_comma = len(out)
        elif not ch.isspace():
            pending_comma = None
        if ch == '"':
            in_string = True
        out.append(ch)
    return "".join(out)


def _decode_array_at(text: str, idx: int) -> list | None:
    try:
        value, _ = _decoder.raw_decode(text, idx)
    except json.JSONDecodeError:
        return None
    return value if isinstance(value, list) else None


def extract_json_array(raw: str) -> list:
    """Return the first JSON array in ``raw`` that is empty or holds objects.

    Surrounding prose and markdown fences are skipped. Trailing commas, a
    common imitation of hand-written JSON examples, are tolerated.
    """
    for text in (raw, _strip_trailing_commas(raw)):
        idx = text.find("[")
        while idx != -1:
            value = _decode_array_at(text, idx)
            if value is not None and (not value or any(isinstance(v, dict) for v in value)):
                return value
            idx = text.find("[", idx + 1)
    raise NoJsonFound(f"no JSON array found in model response: {raw[:120]!r}")


def _clean_term(value: str) -> str:
    return value.strip().strip("*").strip()


def _parse_codes(value: Any) -> list[Icd10Code]:
    if isinstance(value, str):
        pieces = value.split(",")
    elif isinstance(value, list) and all(isinstance(v, str) for v in value):
        pieces = [p for v in value for p in v.split(",")]
    else:
        raise MalformedCode(repr(value), "icd10_code must be a string or list of strings")
    return [parse_code(p) for p in pieces if p.strip()]


def parse_element(element: Any) -> TermPrediction:
    """Parse one array element; raises ``ValueError`` describing why it is unusable."""
    if not isinstance(element, dict):
        raise ValueError(f"element is {type(element).__name__}, not an object")
    term = next(
        (v for k, v in element.items() if k.startswith(TERM_KEY_PREFIX) and isinstance(v, str)),
        None,
    )
    if term is None or not _clean_term(term):
        raise ValueError("missing medical term")
    if CODE_KEY not in element:
        raise ValueError(f"missing {CODE_KEY!r}")
    codes = _parse_codes(element[CODE_KEY])
    if not codes:
        raise ValueError(f"empty {CODE_KEY!r}")
    explanation = element.get(EXPLANATION_KEY) or ""
    if not isinstance(explanation, str):
        explanation = json.dumps(explanation, ensure_ascii=False)
    return TermPrediction(_clean_term(term), tuple(codes), explanation.strip())


def parse_response_with_issues(raw: str) -> tuple[list[TermPrediction], list[str]]:
    """Like :func:`parse_response`, also returning one message per dropped element."""
    predictions, issues = [], []
    for i, element in enumerate(extract_json_array(raw)):
        try:
            predictions.append(parse_element(element))
        except ValueError as exc:
            issues.append(f"element {i} dropped: {exc}")
    for issue in issues:
        logger.warning(issue)
    return predictions, issues


def parse_response(raw: str) -> list[TermPrediction]:
    return parse_response_with_issues(raw)[0]
