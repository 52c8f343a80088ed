import json

import pytest
from hypothesis import given, settings, strategies as st

from concept_activation import ConceptID, GraphError, KnowledgeGraph, load_graph
from concept_activation.kg_store import dump_graph
from concept_activation.text import tokenize

from conftest import concept


def cid(text):
    return ConceptID.parse(text)


def test_layer_counts(mini_graph):
    assert mini_graph.layer_counts() == {"concepts": 3, "taxonomy": 3, "clinical": 3, "instance": 3}


def test_lookup_by_primary_and_cross_ref(mini_graph):
    assert mini_graph.lookup_by_code(cid("ORPHA:558")).standard_name == "Marfan syndrome"
    assert mini_graph.lookup_by_code(cid("OMIM:154700")).primary_id == cid("ORPHA:558")
    assert mini_graph.lookup_by_code(cid("ORPHA:999999")) is None


def test_shared_cross_ref_has_every_owner(mini_graph):
    owners = mini_graph.owners_of(cid("ICD10:E75.2"))
    assert set(owners) == {cid("ORPHA:324"), cid("ORPHA:355")}


def test_family_and_taxonomy(mini_graph):
    assert mini_graph.family_of(cid("ORPHA:324")) == {cid("ORPHA:355")}
    with pytest.raises(KeyError):
        mini_graph.family_of(cid("ORPHA:1"))
    path = [n.node_id for n in mini_graph.taxonomy_path("T-LSD")]
    assert path == ["T-IEM", "T-LSD"]


def test_candidates_prefer_codes_then_token_overlap(mini_graph):
    got = mini_graph.candidates_for_query(tuple(tokenize("marfan disease")), cap=10, codes=(cid("ORPHA:355"),))
    assert got[0] == cid("ORPHA:355")
    assert cid("ORPHA:558") in got


def test_candidate_cap(mini_graph):
    assert len(mini_graph.candidates_for_query(("disease",), cap=1)) == 1


def test_round_trip(mini_graph, tmp_path):
    out = tmp_path / "copy.jsonl"
    dump_graph(mini_graph, out)
    again = load_graph(out)
    assert again.to_records() == mini_graph.to_records()


def test_load_is_deterministic(fixtures_dir):
    a = load_graph(fixtures_dir / "synthetic_kg.jsonl")
    b = load_graph(fixtures_dir / "synthetic_kg.jsonl")
    assert json.dumps(a.to_records()) == json.dumps(b.to_records())


def test_synthetic_graph_populates_three_layers(synthetic_graph):
    counts = synthetic_graph.layer_counts()
    assert counts["concepts"] == 50
    assert counts["taxonomy"] > 0 and counts["clinical"] == 50 and counts["instance"] >= 50


# -- load errors ----------------------------------------------------------------------


def test_empty_file(write_kg):
    with pytest.raises(GraphError, match="empty graph"):
        load_graph(write_kg([]))


def test_bad_omim_syntax_names_line_and_field(write_kg):
    path = write_kg([concept("ORPHA:1", "Alpha"), concept("ORPHA:2", "Beta", cross_refs=["OMIM:12345"])])
    with pytest.raises(GraphError) as info:
        load_graph(path)
    assert info.value.line == 2 and info.value.field == "cross_refs"


def test_malformed_json_line(write_kg):
    with pytest.raises(GraphError, match="line 2: malformed JSON"):
        load_graph(write_kg([concept("ORPHA:1", "Alpha"), "{not json"]))


def test_duplicate_primary_id(write_kg):
    with pytest.raises(GraphError, match="duplicate primary_id"):
        load_graph(write_kg([concept("ORPHA:1", "Alpha"), concept("ORPHA:1", "Beta")]))


def test_unknown_field_rejected(write_kg):
    with pytest.raises(GraphError, match="unknown field"):
        load_graph(write_kg([concept("ORPHA:1", "Alpha", colour="red")]))


def test_dangling_reference_names_both_ids(write_kg):
    recs = [
        concept("ORPHA:1", "Alpha"),
        {"layer": "clinical", "id": "CP1", "concept": "ORPHA:2", "phenotypes": [], "features": [], "criteria": []},
    ]
    with pytest.raises(GraphError, match="CP1.*ORPHA:2"):
        load_graph(write_kg(recs))


def test_alias_weight_out_of_range(write_kg):
    rec = concept("ORPHA:1", "Alpha", aliases=[{"text": "A", "language": "en", "weight": 1.5}])
    with pytest.raises(GraphError, match="outside"):
        load_graph(write_kg([rec]))


def test_non_hpo_phenotype(write_kg):
    recs = [
        concept("ORPHA:1", "Alpha"),
        {"layer": "clinical", "id": "CP1", "concept": "ORPHA:1", "phenotypes": ["ORPHA:2"], "features": [],
         "criteria": []},
    ]
    with pytest.raises(GraphError, match="not an HPO id"):
        load_graph(write_kg(recs))


def test_taxonomy_cycle(write_kg):
    recs = [
        concept("ORPHA:1", "Alpha"),
        {"layer": "taxonomy", "id": "A", "label": "a", "parent": "B", "family": "f", "members": []},
        {"layer": "taxonomy", "id": "B", "label": "b", "parent": "A", "family": "f", "members": []},
    ]
    with pytest.raises(GraphError, match="cycle"):
        load_graph(write_kg(recs))


def test_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        load_graph(tmp_path / "absent.jsonl")


# -- index soundness ------------------------------------------------------------------

_names = st.lists(
    st.text(alphabet="abcdefgh ", min_size=1, max_size=12).filter(lambda s: s.strip()),
    min_size=1, max_size=8, unique_by=lambda s: " ".join(s.split()),
)


@settings(max_examples=60, deadline=None)
@given(_names, st.text(alphabet="abcdefgh ", max_size=15))
def test_candidates_match_brute_force_token_overlap(names, query):
    records = [concept(f"ORPHA:{i + 1}", n) for i, n in enumerate(names)]
    graph = KnowledgeGraph.from_records(records)
    tokens = tuple(tokenize(query))
    got = set(graph.candidates_for_query(tokens, cap=1000))
    want = {
        c.primary_id for c in graph.concepts.values()
        if set(tokens) & {t for name in c.names for t in tokenize(name)}
    }
    assert got == want
