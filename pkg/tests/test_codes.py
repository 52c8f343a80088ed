import pytest

from concept_activation import ConceptID, Namespace, extract_codes
from concept_activation.text import normalize_text, split_clauses, tokenize


@pytest.mark.parametrize(
    "text, ns, code",
    [
        ("ORPHA:558", Namespace.ORPHA, "558"),
        ("orphanet:558", Namespace.ORPHA, "558"),
        ("OMIM:154700", Namespace.OMIM, "154700"),
        ("MIM:154700", Namespace.OMIM, "154700"),
        ("HP:0001250", Namespace.HPO, "HP:0001250"),
        ("ICD10:e75.2", Namespace.ICD10, "E75.2"),
        ("GENE:gla", Namespace.GENE, "GLA"),
    ],
)
def test_parse_accepts_prefixed_forms(text, ns, code):
    cid = ConceptID.parse(text)
    assert (cid.namespace, cid.code) == (ns, code)


@pytest.mark.parametrize("bad", ["OMIM:12345", "HP:12", "ORPHA:abc", "NOPE:1", ""])
def test_parse_rejects_bad_syntax(bad):
    with pytest.raises(ValueError):
        ConceptID.parse(bad)


def test_hpo_renders_bare_prefix():
    assert str(ConceptID.parse("HP:0001250")) == "HP:0001250"
    assert str(ConceptID.parse("ORPHA:558")) == "ORPHA:558"


def test_ids_are_hashable_and_ordered():
    a, b = ConceptID.parse("ORPHA:1"), ConceptID.parse("ORPHA:2")
    assert a < b and len({a, ConceptID.parse("orpha:1")}) == 1


def test_extract_mixed_codes_in_order():
    found = extract_codes("HP:0001250 and OMIM 154700")
    assert [str(c) for c in found] == ["HP:0001250", "OMIM:154700"]


def test_extract_gene_cue():
    assert [str(c) for c in extract_codes("variant in GLA gene")] == ["GENE:GLA"]


def test_extract_deduplicates():
    assert len(extract_codes("ORPHA:558 orpha 558")) == 1


def test_plain_prose_has_no_codes():
    assert extract_codes("recurrent seizures since childhood") == []


def test_normalize_keeps_inner_hyphen_only():
    assert normalize_text("Anderson-Fabry  Disease!") == "anderson-fabry disease"
    assert tokenize("- fever -") == ["fever"]


def test_clause_split_ignores_code_punctuation():
    clauses = split_clauses("E75.2 noted; seizures and ataxia", ("and",))
    assert len(clauses) == 3
