import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from icd10link.errors import MissingGold
from icd10link.evaluation import REPORT_COLUMNS, error_report, evaluate
from icd10link.ontology import CodeLevel, parse_code
from icd10link.pipeline import DICT_EXPLANATION, LinkedMention, Source


def lm(gold, pred=None, source=None, doc="d", start=0, surface="t"):
    code = parse_code(pred) if pred else None
    src = source or (Source.LLM if code else Source.NONE)
    expl = DICT_EXPLANATION if src is Source.DICT else ""
    return LinkedMention(doc, start, start + 1, surface, code, (code,) if code else (), src, expl,
                         parse_code(gold) if gold else None)


MIXED_LEVEL = [
    lm("b67.99", "B67.4", start=0, surface="quiste hidatídico renal"),
    lm("C64.9", "C64.9", start=5, surface="nefroma"),
]


def test_hand_computed_example():
    rows = [lm("R51", "R51", start=0), lm("I10", "I10", start=1), lm("C64.9", "N28.1", start=2), lm("E11", start=3)]
    r = evaluate(rows, CodeLevel.CATEGORY)
    assert (r.gold_count, r.predicted_count, r.correct_count) == (4, 3, 2)
    assert r.precision == pytest.approx(0.6667, abs=5e-5)
    assert r.recall == 0.5
    assert r.f1 == pytest.approx(0.5714, abs=5e-5)
    assert r.f1 == pytest.approx(4 / 7, abs=1e-15)


def test_all_correct():
    r = evaluate([lm("R51", "R51"), lm("I10", "I10", start=3)])
    assert r.precision == r.recall == r.f1 == 1.0


def test_mixed_level_levels():
    cat = evaluate(MIXED_LEVEL, CodeLevel.CATEGORY)
    sub = evaluate(MIXED_LEVEL, CodeLevel.SUBCATEGORY)
    assert cat.correct_count == 2 and cat.precision == cat.recall == cat.f1 == 1.0
    assert sub.correct_count == 1 and sub.precision == sub.recall == sub.f1 == 0.5


def test_no_predictions():
    r = evaluate([lm("R51"), lm("I10", start=2)])
    assert r.precision == r.recall == r.f1 == 0.0


def test_empty_input():
    r = evaluate([])
    assert (r.gold_count, r.precision, r.recall, r.f1) == (0, 0.0, 0.0, 0.0)


def test_missing_gold():
    with pytest.raises(MissingGold):
        evaluate([lm(None, "R51")])
    with pytest.raises(MissingGold):
        error_report([lm(None, "R51")])


def test_per_source():
    rows = [lm("R51", "R51", Source.DICT), lm("I10", "I15", Source.LLM, start=1), lm("E11", start=2)]
    r = evaluate(rows)
    assert r.per_source["dict"].correct_count == 1 and r.per_source["llm"].correct_count == 0
    assert r.per_source["llm"].predicted_count == 1


def test_error_report_mixed_level():
    tsv = error_report(MIXED_LEVEL, CodeLevel.SUBCATEGORY)
    lines = tsv.splitlines()
    assert lines[0].split("\t") == list(REPORT_COLUMNS)
    rows = [ln.split("\t") for ln in lines[1:]]
    assert [(r[4], r[5], r[7]) for r in rows] == [("B67.99", "B67.4", "false"), ("C64.9", "C64.9", "true")]
    assert len(rows) == evaluate(MIXED_LEVEL).gold_count


def test_error_report_empty():
    assert error_report([]) == "\t".join(REPORT_COLUMNS) + "\n"


def test_error_report_sorted():
    rows = [lm("R51", "R51", doc="b"), lm("I10", doc="a", start=4), lm("E11", doc="a", start=1)]
    ids = [ln.split("\t")[:2] for ln in error_report(rows).splitlines()[1:]]
    assert ids == [["a", "1"], ["a", "4"], ["b", "0"]]


def brute_force(rows, level):
    """Independent recount using exact fractions and plain string prefixes."""
    keep = {CodeLevel.CATEGORY: 3, CodeLevel.SUBCATEGORY: 5, CodeLevel.FULL: None}[level]
    cut = lambda code: str(code)[:keep] if keep else str(code)  # noqa: E731
    gold = len(rows)
    predicted = sum(1 for r in rows if r.predicted_code is not None)
    correct = sum(1 for r in rows if r.predicted_code is not None and cut(r.predicted_code) == cut(r.gold_code))
    p = Fraction(correct, predicted) if predicted else Fraction(0)
    r = Fraction(correct, gold) if gold else Fraction(0)
    f = 2 * p * r / (p + r) if p + r else Fraction(0)
    return gold, predicted, correct, float(p), float(r), float(f)


def random_rows(rng, n):
    cats = ["A00", "B67", "C64", "R51"]
    exts = ["", "0", "9", "4", "99", "01"]
    rows = []
    for i in range(n):
        gold = rng.choice(cats) + ("." + e if (e := rng.choice(exts)) else "")
        roll = rng.random()
        if roll < 0.2:
            pred = None
        elif roll < 0.5:
            pred = gold
        else:
            pred = rng.choice(cats) + ("." + e if (e := rng.choice(exts)) else "")
        rows.append(lm(gold, pred, start=i))
    return rows


@pytest.mark.parametrize("seed", range(20))
def test_matches_brute_force(seed):
    rng = random.Random(seed)
    rows = random_rows(rng, rng.randint(0, 100))
    for level in CodeLevel:
        r = evaluate(rows, level)
        g, pc, c, p, rec, f = brute_force(rows, level)
        assert (r.gold_count, r.predicted_count, r.correct_count) == (g, pc, c)
        assert abs(r.precision - p) <= 1e-12 and abs(r.recall - rec) <= 1e-12 and abs(r.f1 - f) <= 1e-12


@given(st.randoms(use_true_random=False), st.integers(0, 60))
def test_metric_properties(rng, n):
    rows = random_rows(rng, n)
    cat, sub = evaluate(rows, CodeLevel.CATEGORY), evaluate(rows, CodeLevel.SUBCATEGORY)
    assert cat.correct_count >= sub.correct_count
    for r in (cat, sub):
        if r.precision + r.recall > 0:
            assert min(r.precision, r.recall) - 1e-15 <= r.f1 <= max(r.precision, r.recall) + 1e-15
        if r.predicted_count == r.gold_count:
            assert r.precision == r.recall == r.f1
    shuffled = rows[:]
    rng.shuffle(shuffled)
    assert evaluate(shuffled, CodeLevel.SUBCATEGORY) == sub
