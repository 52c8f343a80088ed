import math
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from concept_activation import ConceptID, KnowledgeGraph
from concept_activation.matchers import (
    Method,
    QueryTerm,
    Segmenter,
    SemanticUnit,
    abbr_similarity,
    char_similarity,
    code_match,
    combine_similarities,
    concept_term_match,
    levenshtein,
    multilingual_match,
    partial_similarity,
    phonetic_key,
    segment,
    semantic_similarity,
    term_match,
    translit_similarity,
    unit_similarity,
    variant_match,
)

from conftest import concept


def q(text, graph=None):
    seg = Segmenter(graph.lexicon) if graph is not None else Segmenter()
    return QueryTerm.from_text(text, segmenter=seg)


def _oracle_levenshtein(a, b):
    # plain recursive definition, memoised
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0 or j == 0:
            return i + j
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


def _oracle_trigram_cosine(a, b):
    va = Counter(f" {a} "[i:i + 3] for i in range(len(a)))
    vb = Counter(f" {b} "[i:i + 3] for i in range(len(b)))
    keys = sorted(set(va) | set(vb))
    x = [va[k] for k in keys]
    y = [vb[k] for k in keys]
    dot = sum(p * r for p, r in zip(x, y))
    return dot / (math.sqrt(sum(p * p for p in x)) * math.sqrt(sum(r * r for r in y)))


# -- code matching -----------------------------------------------------------------


def test_code_branch_exact(mini_graph):
    marfan = mini_graph[ConceptID.parse("ORPHA:558")]
    assert code_match(q("ORPHA:558"), marfan).value == 1.0
    assert code_match(q("OMIM:154700"), marfan).value == 1.0


def test_standard_name_branch(mini_graph):
    assert code_match(q("Marfan syndrome"), mini_graph[ConceptID.parse("ORPHA:558")]).value == 0.8


def test_alias_branch_uses_authority_weight(mini_graph):
    fabry = mini_graph[ConceptID.parse("ORPHA:324")]
    assert code_match(q("Anderson-Fabry disease"), fabry).value == pytest.approx(0.9, abs=1e-12)


def test_alias_weights_sum_and_clamp():
    aliases = [
        {"text": "Morbus Alpha", "language": "de", "weight": 0.5},
        {"text": "morbus alpha", "language": "en", "weight": 0.4},
        {"text": "Big Alpha", "language": "en", "weight": 0.8},
        {"text": "big alpha", "language": "fr", "weight": 0.7},
    ]
    g = KnowledgeGraph.from_records([concept("ORPHA:1", "Alpha", aliases=aliases)])
    c = g[ConceptID.parse("ORPHA:1")]
    assert code_match(q("Morbus Alpha"), c).value == pytest.approx(0.9, abs=1e-12)
    assert code_match(q("big alpha"), c).value == 1.0
    assert code_match(q("unrelated"), c).value == 0.0


# -- compound term matching ------------------------------------------------------------


def test_bigram_dice_hand_value():
    # night: ni ig gh ht / nacht: na ac ch ht -> one shared of eight
    assert unit_similarity("night", "nacht") == pytest.approx(0.25, abs=1e-12)
    assert unit_similarity("fever", "Fever") == 1.0
    assert unit_similarity("a", "ab") == 0.0


def test_term_quotient_two_by_two():
    src = [SemanticUnit("night", 1.0), SemanticUnit("fever", 0.5)]
    tgt = [SemanticUnit("nacht", 1.0), SemanticUnit("fever", 0.5)]
    # (0.25*1*1 + 1*0.5*0.5) / (1.5 * 1.5)
    assert term_match(src, tgt).value == pytest.approx(2 / 9, abs=1e-12)


def test_term_quotient_with_stub_similarity():
    src = [SemanticUnit("a", 1.0), SemanticUnit("b", 0.1)]
    tgt = [SemanticUnit("c", 0.5), SemanticUnit("d", 0.5)]
    table = {("a", "c"): 0.4, ("a", "d"): 0.2, ("b", "c"): 1.0, ("b", "d"): 0.0}
    got = term_match(src, tgt, lambda s, t: table[(s.text, t.text)]).value
    want = (0.4 * 0.5 + 0.2 * 0.5 + 1.0 * 0.1 * 0.5) / (1.1 * 1.0)
    assert got == pytest.approx(want, abs=1e-12)


def test_term_identity_is_one(mini_graph):
    fabry = mini_graph[ConceptID.parse("ORPHA:324")]
    seg = Segmenter(mini_graph.lexicon)
    assert concept_term_match(q("Fabry disease", mini_graph), fabry, seg).value == 1.0


def test_unsegmentable_term_raises():
    with pytest.raises(ValueError, match="unsegmentable"):
        term_match([], [SemanticUnit("x")])


def test_segmentation_weights():
    units = segment("fabry disease of the kidney", lexicon=["fabry disease"], stopwords={"of", "the"})
    assert [(u.text, u.weight) for u in units] == [
        ("fabry disease", 1.0), ("of", 0.1), ("the", 0.1), ("kidney", 0.5)
    ]


def test_segmentation_prefers_longest_hit():
    units = segment("a b c", lexicon=["a", "a b", "b c"], stopwords=())
    assert [u.text for u in units] == ["a b", "c"]


# -- variant matching -------------------------------------------------------------------


def test_abbreviation_branches():
    assert abbr_similarity("MFS", "marfan fibrillin syndrome") == 1.0
    assert abbr_similarity("MF", "marfan fibrillin syndrome") == 0.8
    assert abbr_similarity("MX", "marfan fibrillin syndrome") == 0.0
    assert abbr_similarity("M", "marfan syndrome") == 0.0


def test_partial_overlap():
    assert partial_similarity("fabry disease", "anderson fabry disease") == 1.0
    assert partial_similarity("fabry kidney", "fabry disease") == 0.5


def test_semantic_against_independent_cosine():
    for a, b in [("fabry", "fabri"), ("marfan syndrome", "marfans syndrom"), ("abc", "xyz")]:
        assert semantic_similarity(a, b) == pytest.approx(_oracle_trigram_cosine(a, b), abs=1e-12)


def test_variant_is_max_of_independent_components(mini_graph):
    for text in ["MFS", "marfans syndrom", "fabry", "gaucher disease type 1", "anderson fabry"]:
        query = q(text)
        for c in mini_graph.concepts.values():
            want = max(
                max(abbr_similarity(query.text, n), partial_similarity(query.text, n),
                    _oracle_trigram_cosine(query.text, " ".join(n.lower().split())))
                if query.text != " ".join(n.lower().split()) else 1.0
                for n in c.names
            )
            assert variant_match(query, c).value == pytest.approx(want, abs=1e-9), (text, c.primary_id)


# -- multilingual matching -----------------------------------------------------------------


def test_levenshtein_against_recursive_oracle():
    for a, b in [("fabry", "fabri"), ("kitten", "sitting"), ("", "abc"), ("marfan", "morphan")]:
        assert levenshtein(a, b) == _oracle_levenshtein(a, b)


def test_char_similarity_hand_value():
    assert char_similarity("fabry", "fabri") == pytest.approx(0.8, abs=1e-12)


def test_transliteration_across_scripts():
    assert phonetic_key("Fabry") == phonetic_key("Фабри")
    assert translit_similarity("Fabry", "Фабри") == 1.0


def test_convex_combination():
    assert combine_similarities(0.6, 0.9, 0.3) == pytest.approx(0.6, abs=1e-12)
    assert combine_similarities(1.0, 0.0, 0.0, (2, 1, 1)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        combine_similarities(0.1, 0.1, 0.1, (1, -1, 1))


def test_multilingual_picks_best_name(mini_graph):
    fabry = mini_graph[ConceptID.parse("ORPHA:324")]
    score = multilingual_match(q("Morbus Fabri"), fabry)
    assert score.method is Method.MULTILINGUAL
    name = "Morbus Fabry"
    want = combine_similarities(
        translit_similarity("morbus fabri", name), char_similarity("morbus fabri", name),
        semantic_similarity("morbus fabri", name),
    )
    assert score.value == pytest.approx(want, abs=1e-12)


# -- properties ---------------------------------------------------------------------------

_text = st.text(alphabet=st.sampled_from(list("abcdeéfxyz- 1Фаб")), max_size=14)
SYMMETRIC = [unit_similarity, partial_similarity, semantic_similarity, abbr_similarity, char_similarity,
             translit_similarity]


@settings(max_examples=150, deadline=None)
@given(_text, _text)
def test_primitives_in_range_and_symmetric(a, b):
    for fn in SYMMETRIC:
        x, y = fn(a, b), fn(b, a)
        assert 0.0 <= x <= 1.0
        assert x == pytest.approx(y, abs=1e-12), fn.__name__


@settings(max_examples=80, deadline=None)
@given(st.text(alphabet="abcdefg", min_size=2, max_size=10))
def test_identity_scores_one(s):
    for fn in SYMMETRIC[:3] + [char_similarity, translit_similarity]:
        assert fn(s, s) == 1.0
