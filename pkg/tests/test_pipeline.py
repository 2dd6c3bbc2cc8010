import json

import pytest

from icd10link.corpus import Document, Mention, load_corpus
from icd10link.dictionary import DictionarySource, SourceKind, build_dictionary
from icd10link.errors import ConfigError, DataError, MissingExample
from icd10link.llm.prompt import PromptConfig, Shots
from icd10link.llm.providers import Completion, LlmRequest, MockProvider
from icd10link.ontology import CodeLevel, parse_code
from icd10link.pipeline import (
    DICT_EXPLANATION,
    LinkedMention,
    LlmStage,
    RunMode,
    Source,
    link_corpus,
    link_document,
    read_jsonl,
    write_jsonl,
)

TEXT = "Refiere cefalea y nefroma."
DOC = Document("d1", TEXT)
MENTIONS = [Mention("d1", 8, 15, "cefalea", parse_code("R51")), Mention("d1", 18, 25, "nefroma", parse_code("C64.9"))]


class ScriptedProvider:
    """Returns a fixed text (or raises) and records the requests it saw."""

    def __init__(self, text=None, error=None, truncated=False):
        self.text, self.error, self.truncated = text, error, truncated
        self.requests: list[LlmRequest] = []

    def complete(self, request):
        self.requests.append(request)
        if self.error:
            raise self.error
        return Completion(self.text, self.truncated)


@pytest.fixture
def dictionary(write_tsv):
    d, _ = build_dictionary([DictionarySource(write_tsv("d.tsv", [("cefalea", "R51")]), SourceKind.SPECIFICATION, "es")])
    return d


def llm_with(provider, shots=Shots.ZERO):
    prompt = PromptConfig("Spanish", shots, "ej *x*", '[{"medical_term_spanish": "*x*", "icd10_code": "R51"}]')
    return LlmStage(provider, prompt)


BOTH = json.dumps([
    {"medical_term_spanish": "*cefalea*", "icd10_code": "G43.9", "explanation": "migraña"},
    {"medical_term_spanish": "*nefroma*", "icd10_code": "C64.9, N28.1", "explanation": "neoplasia"},
])


def test_run_mode_properties():
    assert RunMode.DICT_ONLY.uses_dictionary and not RunMode.DICT_ONLY.uses_llm
    assert RunMode.LLM_ONE_SHOT.shots is Shots.ONE and not RunMode.LLM_ONE_SHOT.uses_dictionary
    assert RunMode.DICT_PLUS_LLM_ZERO_SHOT.shots is Shots.ZERO
    assert len(RunMode) == 5
    with pytest.raises(ConfigError):
        RunMode.parse("gpt-only")


def test_dict_only(dictionary):
    result = link_document(DOC, MENTIONS, RunMode.DICT_ONLY, dictionary)
    assert [(str(m.predicted_code) if m.predicted_code else None, m.source) for m in result.mentions] == [
        ("R51", Source.DICT),
        (None, Source.NONE),
    ]
    assert result.mentions[0].explanation == DICT_EXPLANATION
    assert result.error is None


def test_dict_wins_over_llm(dictionary):
    provider = ScriptedProvider(BOTH)
    result = link_document(DOC, MENTIONS, RunMode.DICT_PLUS_LLM_ZERO_SHOT, dictionary, llm_with(provider))
    cef, nef = result.mentions
    assert (str(cef.predicted_code), cef.source) == ("R51", Source.DICT)
    assert (str(nef.predicted_code), nef.source) == ("C64.9", Source.LLM)
    assert [str(c) for c in nef.all_codes] == ["C64.9", "N28.1"]
    assert nef.explanation == "neoplasia"
    # one call for the whole document, all mentions marked
    assert len(provider.requests) == 1
    assert "Refiere *cefalea* y *nefroma*." in provider.requests[0].prompt_text
    assert provider.requests[0].doc_id == "d1"


def test_llm_only(dictionary):
    result = link_document(DOC, MENTIONS, RunMode.LLM_ZERO_SHOT, llm=llm_with(ScriptedProvider(BOTH)))
    assert [str(m.predicted_code) for m in result.mentions] == ["G43.9", "C64.9"]
    assert all(m.source is Source.LLM for m in result.mentions)


def test_no_json_marks_llm_mentions_none(dictionary):
    provider = ScriptedProvider("I cannot help with that.")
    result = link_document(DOC, MENTIONS, RunMode.LLM_ZERO_SHOT, llm=llm_with(provider))
    assert [m.source for m in result.mentions] == [Source.NONE, Source.NONE]
    assert result.error.startswith("NoJsonFound")


def test_provider_error_keeps_dict_hits(dictionary):
    from icd10link.errors import ProviderExhausted

    provider = ScriptedProvider(error=ProviderExhausted("gave up"))
    result = link_document(DOC, MENTIONS, RunMode.DICT_PLUS_LLM_ONE_SHOT, dictionary, llm_with(provider, Shots.ONE))
    assert [m.source for m in result.mentions] == [Source.DICT, Source.NONE]
    assert "ProviderExhausted" in result.error


def test_one_shot_prompt_contains_example(dictionary):
    provider = ScriptedProvider("[]")
    link_document(DOC, MENTIONS, RunMode.LLM_ONE_SHOT, llm=llm_with(provider, Shots.ZERO))
    assert "ej *x*" in provider.requests[0].prompt_text


def test_zero_shot_prompt_has_no_example(dictionary):
    provider = ScriptedProvider("[]")
    link_document(DOC, MENTIONS, RunMode.LLM_ZERO_SHOT, llm=llm_with(provider, Shots.ONE))
    assert "ej *x*" not in provider.requests[0].prompt_text


def test_truncation_warning():
    result = link_document(DOC, MENTIONS, RunMode.LLM_ZERO_SHOT, llm=llm_with(ScriptedProvider("[]", truncated=True)))
    assert any("truncated" in w for w in result.warnings)


def test_missing_components(dictionary):
    with pytest.raises(ConfigError):
        link_document(DOC, MENTIONS, RunMode.DICT_ONLY)
    with pytest.raises(ConfigError):
        link_document(DOC, MENTIONS, RunMode.DICT_PLUS_LLM_ZERO_SHOT, dictionary)
    with pytest.raises(MissingExample):
        link_document(DOC, MENTIONS, RunMode.LLM_ONE_SHOT, llm=LlmStage(ScriptedProvider("[]"), PromptConfig("Spanish")))


def test_no_llm_call_without_mentions():
    provider = ScriptedProvider("[]")
    result = link_document(DOC, [], RunMode.LLM_ZERO_SHOT, llm=llm_with(provider))
    assert result.mentions == [] and provider.requests == []


def test_output_preserves_mention_order(dictionary):
    result = link_document(DOC, MENTIONS[::-1], RunMode.DICT_ONLY, dictionary)
    assert [m.surface for m in result.mentions] == ["nefroma", "cefalea"]


def test_foreign_mention_rejected(dictionary):
    with pytest.raises(DataError):
        link_document(DOC, [Mention("d2", 0, 1, "R")], RunMode.DICT_ONLY, dictionary)


def test_linked_mention_invariants():
    with pytest.raises(ValueError):
        LinkedMention("d", 0, 1, "x", parse_code("R51"), (), Source.NONE)
    with pytest.raises(ValueError):
        LinkedMention("d", 0, 1, "x", None, (), Source.LLM)
    with pytest.raises(ValueError):
        LinkedMention("d", 0, 1, "x", parse_code("R51"), (), Source.DICT, "something else")


def test_jsonl_roundtrip(tmp_path, dictionary):
    result = link_document(DOC, MENTIONS, RunMode.DICT_PLUS_LLM_ZERO_SHOT, dictionary, llm_with(ScriptedProvider(BOTH)))
    write_jsonl(result.mentions, tmp_path / "p.jsonl")
    assert read_jsonl(tmp_path / "p.jsonl") == result.mentions
    first = json.loads((tmp_path / "p.jsonl").read_text().splitlines()[0])
    assert list(first) == ["doc_id", "start", "end", "surface", "predicted_code", "all_codes", "source", "explanation", "gold_code"]


# corpus level


@pytest.fixture
def golden(golden_dir):
    docs, mentions = load_corpus(golden_dir / "texts", golden_dir / "annotations.tsv", "es")
    sources = [
        DictionarySource(golden_dir / "dictionary" / "cie10_spec.tsv", SourceKind.SPECIFICATION, "es"),
        DictionarySource(golden_dir / "dictionary" / "train_terms.tsv", SourceKind.TRAIN_SET, "es"),
    ]
    dictionary, _ = build_dictionary(sources, CodeLevel.SUBCATEGORY)
    return docs, mentions, dictionary


def test_empty_corpus():
    result = link_corpus([], [], RunMode.DICT_ONLY, build_dictionary([])[0])
    assert result.linked == []
    assert result.report["documents"] == 0 and result.report["by_source"] == {"dict": 0, "llm": 0, "none": 0}


def test_parallelism_does_not_change_output(golden, golden_dir):
    docs, mentions, dictionary = golden
    llm = llm_with(MockProvider(golden_dir / "mock"))
    one = link_corpus(docs, mentions, RunMode.DICT_PLUS_LLM_ZERO_SHOT, dictionary, llm, parallelism=1)
    many = link_corpus(docs, mentions, RunMode.DICT_PLUS_LLM_ZERO_SHOT, dictionary, llm, parallelism=8)
    assert one.linked == many.linked and one.report == many.report


def test_one_failed_document(golden, golden_dir, tmp_path):
    import shutil

    docs, mentions, dictionary = golden
    mock = tmp_path / "mock"
    shutil.copytree(golden_dir / "mock", mock)
    (mock / "d2.response.txt").write_text("Lo siento, no puedo ayudar.", encoding="utf-8")
    result = link_corpus(docs, mentions, RunMode.LLM_ZERO_SHOT, None, llm_with(MockProvider(mock)), parallelism=2)
    report = result.report
    assert report["documents_failed"] == 1 and list(report["errors"]) == ["d2"]
    d2 = [m for m in result.linked if m.doc_id == "d2"]
    assert all(m.source is Source.NONE for m in d2)
    assert not result.all_failed


def test_unknown_document_in_mentions(golden):
    docs, mentions, dictionary = golden
    with pytest.raises(DataError):
        link_corpus(docs[:1], mentions, RunMode.DICT_ONLY, dictionary)


def test_invalid_parallelism(golden):
    docs, mentions, dictionary = golden
    with pytest.raises(ConfigError):
        link_corpus(docs, mentions, RunMode.DICT_ONLY, dictionary, parallelism=0)
