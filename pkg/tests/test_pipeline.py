import json

import pytest

from concept_activation import (
    ComponentSwitches,
    ConceptID,
    ConfigError,
    Engine,
    EngineConfig,
    EvidenceSnippet,
    FileEvidenceProvider,
    SessionHistory,
    combine_scores,
    load_config,
)
from concept_activation.matchers import Method
from concept_activation.pipeline import query_key

P = ConceptID.parse


def test_combine_is_weighted_max():
    raw = {Method.CODE: 0.0, Method.TERM: 0.5, Method.VARIANT: 0.9, Method.MULTILINGUAL: 0.2}
    assert combine_scores(raw, EngineConfig()) == pytest.approx(0.765, abs=1e-12)


def test_combine_ignores_disabled_methods():
    raw = {Method.CODE: 1.0, Method.TERM: 0.5, Method.VARIANT: 0.0, Method.MULTILINGUAL: 0.0}
    cfg = EngineConfig(switches=ComponentSwitches(code=False))
    assert combine_scores(raw, cfg) == pytest.approx(0.45, abs=1e-12)


def test_all_matchers_off_is_config_error():
    with pytest.raises(ConfigError):
        EngineConfig(switches=ComponentSwitches(False, False, False, False))


def test_code_query_activates_concept(mini_graph):
    res = Engine(mini_graph).activate("ORPHA:558")
    assert res.entries[0].concept == P("ORPHA:558")
    assert res.entries[0].combined == 1.0
    assert res.fallback is None


def test_entries_respect_budget_and_threshold(synthetic_graph):
    engine = Engine(synthetic_graph)
    for text in ["syndrome", "dystrophy disease anomaly", "ORPHA:90001 OMIM 600020"]:
        res = engine.activate(text)
        assert len(res.entries) <= res.k_used
        if res.fallback is None:
            assert all(e.adjusted >= engine.config.threshold for e in res.entries)
        keys = [(-e.adjusted, str(e.concept)) for e in res.entries]
        assert keys == sorted(keys)


def test_penalty_applied_once_per_run(mini_graph):
    engine = Engine(mini_graph, EngineConfig(lambda_rd=0.5))
    session = engine.new_session()
    first = engine.activate("Marfan syndrome", session=session)
    second = engine.activate("Marfan syndrome", session=session)
    a = {e.concept: e.adjusted for e in first.entries}
    b = {e.concept: (e.combined, e.adjusted) for e in second.entries}
    for cid, (combined, adjusted) in b.items():
        assert combined == a[cid]
        assert adjusted == 0.5 * combined


def test_diversity_switch_off_skips_penalty(mini_graph):
    engine = Engine(mini_graph, EngineConfig(switches=ComponentSwitches(diversity=False)))
    session = engine.new_session()
    engine.activate("Marfan syndrome", session=session)
    res = engine.activate("Marfan syndrome", session=session)
    assert all(e.adjusted == e.combined for e in res.entries)


def test_fallback_switch_off_returns_nothing(mini_graph):
    engine = Engine(mini_graph, EngineConfig(switches=ComponentSwitches(fallback=False)))
    res = engine.activate("zzzz qqqq")
    assert res.entries == () and res.fallback is None and res.diversity is None


def test_fallback_entries_are_tagged(mini_graph):
    res = Engine(mini_graph).activate("zzzz qqqq")
    assert res.fallback is not None
    assert {e.origin for e in res.entries} == {"L5_BasicKnowledge"}


def test_context_contains_every_layer(mini_graph):
    res = Engine(mini_graph).activate("ORPHA:324")
    titles = [s.title for s in res.context.sections]
    assert "Taxonomy: Fabry disease" in titles
    assert "Clinical features: Fabry disease" in titles
    assert "Instance cases: Fabry disease" in titles


class _Broken:
    def fetch(self, query_text):
        raise RuntimeError("service down")


def test_evidence_failure_is_isolated(mini_graph):
    res = Engine(mini_graph, evidence_provider=_Broken()).activate("ORPHA:324")
    assert res.entries[0].concept == P("ORPHA:324")
    ev = [s for s in res.context.sections if s.title == "External evidence"]
    assert ev and "evidence unavailable: service down" in ev[0].body


def test_file_evidence_provider(mini_graph, tmp_path):
    path = tmp_path / "evidence.json"
    snippet = {"title": "Review", "body": "Enzyme replacement therapy.", "source_uri": "file://review"}
    path.write_text(json.dumps({query_key("ORPHA:324"): [snippet]}))
    res = Engine(mini_graph, evidence_provider=FileEvidenceProvider(path)).activate("ORPHA:324")
    assert "Enzyme replacement therapy." in res.context.render()


def test_snippet_requires_body():
    with pytest.raises(ValueError):
        EvidenceSnippet("t", "")


def test_activation_is_deterministic(synthetic_graph):
    a = Engine(synthetic_graph).activate("Nalpramik dystrophy with seizures").to_json()
    b = Engine(synthetic_graph).activate("Nalpramik dystrophy with seizures").to_json()
    assert a == b


def test_explain_does_not_record(mini_graph):
    engine = Engine(mini_graph)
    session = engine.new_session()
    info = engine.explain("Marfan syndrome", P("ORPHA:558"), session=session)
    assert session.used_concepts == set()
    assert info["raw"]["Code"]["value"] == 0.8
    assert info["combined"] == pytest.approx(0.9, abs=1e-12)


def test_explain_unknown_concept(mini_graph):
    with pytest.raises(KeyError):
        Engine(mini_graph).explain("x", P("ORPHA:1"))


def test_config_round_trip_and_relative_resources(tmp_path):
    (tmp_path / "terms.txt").write_text("lysosomal storage\n")
    cfg = EngineConfig(threshold=0.3, lambda_rd=0.5).to_dict()
    cfg["resources"]["lexicon"] = "terms.txt"
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    loaded = load_config(path)
    assert loaded.threshold == 0.3 and loaded.lambda_rd == 0.5
    assert loaded.lexicon_path == str(tmp_path / "terms.txt")


def test_unknown_config_key(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{"thresold": 0.1}')
    with pytest.raises(ConfigError, match="thresold"):
        load_config(path)


def test_session_argument_is_updated(mini_graph):
    session = SessionHistory()
    Engine(mini_graph).activate("ORPHA:558", session=session)
    assert P("ORPHA:558") in session
