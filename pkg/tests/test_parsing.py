import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from icd10link.errors import NoJsonFound
from icd10link.llm.parsing import TermPrediction, extract_json_array, parse_response, parse_response_with_issues
from icd10link.ontology import parse_code


def test_schema_element():
    raw = '[{"medical_term_greek":"*κεφαλαλγία*","icd10_code":"R51","explanation":"common symptom"}]'
    assert parse_response(raw) == [TermPrediction("κεφαλαλγία", (parse_code("R51"),), "common symptom")]


def test_comma_separated_codes_keep_order():
    raw = '[{"medical_term_spanish":"*x*","icd10_code":"B67.4, N28.1"}]'
    (pred,) = parse_response(raw)
    assert [str(c) for c in pred.codes] == ["B67.4", "N28.1"]
    assert str(pred.primary_code) == "B67.4"


def test_no_json():
    with pytest.raises(NoJsonFound):
        parse_response("I cannot help with that.")


def test_empty_array_is_valid():
    assert parse_response("[]") == []


def test_issues_reported(caplog):
    raw = '[{"medical_term":"*a*","icd10_code":"??"},{"medical_term":"*b*","icd10_code":"R51"}]'
    preds, issues = parse_response_with_issues(raw)
    assert [p.term for p in preds] == ["b"]
    assert len(issues) == 1 and "element 0" in issues[0]
    assert "dropped" in caplog.text


def test_first_matching_term_key_wins():
    raw = '[{"medical_term_greek":"*α*","medical_term_english":"*a*","icd10_code":"R51"}]'
    assert parse_response(raw)[0].term == "α"


def test_prediction_invariants():
    with pytest.raises(ValueError):
        TermPrediction("", (parse_code("R51"),))
    with pytest.raises(ValueError):
        TermPrediction("x", ())


json_text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=20)
elements = st.lists(
    st.fixed_dictionaries(
        {
            "medical_term_spanish": json_text.filter(lambda s: s.strip().strip("*").strip()).map(lambda s: f"*{s}*"),
            "icd10_code": st.from_regex(r"[A-Z][0-9]{2}(\.[0-9]{1,2})?", fullmatch=True),
            "explanation": json_text,
        }
    ),
    max_size=5,
)


@given(elements, st.sampled_from(["```json\n{}\n```", "```\n{}\n```", "Here you go:\n{}\nThanks.", "{}"]))
def test_fence_tolerance(array, wrapper):
    raw = json.dumps(array, ensure_ascii=False)
    assert parse_response(wrapper.replace("{}", raw)) == parse_response(raw)


@given(elements)
def test_trailing_commas_tolerated(array):
    raw = json.dumps(array, ensure_ascii=False, indent=2)
    with_commas = raw.replace("\n  }", ",\n  }").replace("}\n]", "},\n]")
    assert parse_response(with_commas) == parse_response(raw)


@given(st.text(max_size=200))
def test_never_crashes(raw):
    try:
        parse_response(raw)
    except NoJsonFound:
        pass


def test_extract_prefers_object_arrays():
    assert extract_json_array('[1, 2] then [{"a": 1}]') == [{"a": 1}]
