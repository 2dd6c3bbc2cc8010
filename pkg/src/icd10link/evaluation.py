"""Micro-averaged precision / recall / F1 at a chosen ICD-10 code level.

Every mention counts towards recall. Only mentions that received a code count
towards precision, so a system that abstains loses recall but not precision.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

from .errors import MissingGold
from .ontology import CodeLevel, codes_match
from .pipeline import LinkedMention, Source


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def f1_score(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


@dataclass(frozen=True)
class Counts:
    gold_count: int = 0
    predicted_count: int = 0
    correct_count: int = 0

    def __add__(self, other: Counts) -> Counts:
        return Counts(
            self.gold_count + other.gold_count,
            self.predicted_count + other.predicted_count,
            self.correct_count + other.correct_count,
        )


@dataclass(frozen=True)
class EvalResult:
    level: CodeLevel
    gold_count: int
    predicted_count: int
    correct_count: int
    precision: float
    recall: float
    f1: float
    per_source: dict[str, Counts] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, level: CodeLevel, counts: Counts, per_source: dict[str, Counts] | None = None) -> EvalResult:
        p = _ratio(counts.correct_count, counts.predicted_count)
        r = _ratio(counts.correct_count, counts.gold_count)
        # 2c/(pred+gold) equals 2PR/(P+R) but rounds once, so P == R gives F1 == P exactly
        f1 = _ratio(2 * counts.correct_count, counts.predicted_count + counts.gold_count)
        return cls(
            level, counts.gold_count, counts.predicted_count, counts.correct_count,
            p, r, f1, per_source or {},
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "level": self.level.value,
            "gold_count": self.gold_count,
            "predicted_count": self.predicted_count,
            "correct_count": self.correct_count,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "per_source": {k: asdict(v) for k, v in self.per_source.items()},
        }


def _require_gold(linked: Iterable[LinkedMention]) -> list[LinkedMention]:
    linked = list(linked)
    missing = [lm for lm in linked if lm.gold_code is None]
    if missing:
        first = missing[0]
        raise MissingGold(
            f"{len(missing)} mention(s) lack a gold code, e.g. {first.doc_id}:{first.start}-{first.end} {first.surface!r}"
        )
    return linked


def _is_correct(lm: LinkedMention, level: CodeLevel) -> bool:
    return lm.predicted_code is not None and codes_match(lm.predicted_code, lm.gold_code, level)


def evaluate(linked: Iterable[LinkedMention], level: CodeLevel | str = CodeLevel.CATEGORY) -> EvalResult:
    level = CodeLevel.parse(level)
    linked = _require_gold(linked)
    per_source = {s.value: Counts() for s in (Source.DICT, Source.LLM)}
    total = Counts()
    for lm in linked:
        predicted = lm.predicted_code is not None
        c = Counts(1, int(predicted), int(_is_correct(lm, level)))
        total += c
        if lm.source.value in per_source:
            per_source[lm.source.value] += c
    return EvalResult.from_counts(level, total, per_source)


REPORT_COLUMNS = ("doc_id", "start", "end", "surface", "gold", "predicted", "source", "match")


def error_report(linked: Iterable[LinkedMention], level: CodeLevel | str = CodeLevel.CATEGORY) -> str:
    """Per-mention TSV comparing gold and predicted codes at ``level``."""
    level = CodeLevel.parse(level)
    rows = sorted(_require_gold(linked), key=lambda lm: (lm.doc_id, lm.start, lm.end))
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(REPORT_COLUMNS)
    for lm in rows:
        writer.writerow([
            lm.doc_id, lm.start, lm.end, lm.surface, str(lm.gold_code),
            str(lm.predicted_code) if lm.predicted_code else "",
            lm.source.value, "true" if _is_correct(lm, level) else "false",
        ])
    return buf.getvalue()
