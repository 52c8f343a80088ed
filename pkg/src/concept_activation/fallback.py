"""Five-level fallback for queries that activate no concept.

Levels are tried in order and the first one producing candidates wins:

1. family -- taxonomy relatives of sub-threshold matches
2. phenotype -- HPO overlap between query and clinical profiles
3. clinical features -- weighted feature-text overlap
4. genotype -- gene symbols shared with instance records
5. basic knowledge -- representative concepts of the largest taxonomy roots
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .codes import ConceptID, Namespace
from .kg_store import KnowledgeGraph
from .matchers import QueryTerm, Segmenter
from .text import load_phenotype_lexicon, load_stopwords, tokenize

__all__ = [
    "FallbackLevel",
    "FallbackResult",
    "resolve",
    "family_candidates",
    "phenotype_candidates",
    "feature_candidates",
    "genotype_candidates",
    "basic_candidates",
    "query_phenotypes",
    "FAMILY_DISCOUNT",
    "BASIC_SCORE",
]

FAMILY_DISCOUNT = 0.9
BASIC_SCORE = 0.05

Candidates = List[Tuple[ConceptID, float]]


class FallbackLevel(IntEnum):
    L1_FamilyRelated = 1
    L2_PhenotypeDriven = 2
    L3_ClinicalFeatureCombination = 3
    L4_GenotypeAssociation = 4
    L5_BasicKnowledge = 5


@dataclass(frozen=True)
class FallbackResult:
    level: FallbackLevel
    candidates: Tuple[Tuple[ConceptID, float], ...]
    rationale: str

    def __post_init__(self):
        if not self.candidates and self.level is not FallbackLevel.L5_BasicKnowledge:
            raise ValueError(f"{self.level.name} produced no candidates")

    def to_dict(self) -> dict:
        return {
            "level": self.level.name,
            "candidates": [{"concept": str(c), "score": s} for c, s in self.candidates],
            "rationale": self.rationale,
        }


def _ranked(scores: Mapping[ConceptID, float]) -> Candidates:
    return sorted(((c, min(1.0, s)) for c, s in scores.items() if s > 0), key=lambda p: (-p[1], str(p[0])))


def family_candidates(graph: KnowledgeGraph, weak_matches: Sequence[Tuple[ConceptID, float]]) -> Candidates:
    """Family members of each weak match, scored 0.9 x the weak score."""
    scores: Dict[ConceptID, float] = {}
    for cid, weak in weak_matches:
        if cid not in graph:
            continue
        for rel in graph.family_of(cid):
            scores[rel] = max(scores.get(rel, 0.0), FAMILY_DISCOUNT * weak)
    return _ranked(scores)


def query_phenotypes(
    query: QueryTerm, phenotype_lexicon: Optional[Mapping[Tuple[str, ...], str]] = None
) -> Set[ConceptID]:
    """HPO ids written in the query plus those named by lexicon labels."""
    lexicon = load_phenotype_lexicon() if phenotype_lexicon is None else phenotype_lexicon
    found = {c for c in query.extracted_codes if c.namespace is Namespace.HPO}
    seg = Segmenter(lexicon.keys(), stopwords=())
    for start, end, hit in seg.spans(query.tokens):
        if hit:
            found.add(ConceptID.parse(lexicon[tuple(query.tokens[start:end])]))
    return found


def phenotype_candidates(graph: KnowledgeGraph, phenotypes: Set[ConceptID]) -> Candidates:
    """Jaccard overlap between query phenotypes and each clinical profile."""
    if not phenotypes:
        return []
    scores: Dict[ConceptID, float] = {}
    for profile in graph.clinical.values():
        union = phenotypes | profile.phenotypes
        inter = phenotypes & profile.phenotypes
        if inter:
            scores[profile.concept] = max(scores.get(profile.concept, 0.0), len(inter) / len(union))
    return _ranked(scores)


def feature_candidates(graph: KnowledgeGraph, tokens: Iterable[str], stopwords=None) -> Candidates:
    """Share of each profile's feature weight whose text overlaps the query."""
    stop = load_stopwords() if stopwords is None else stopwords
    content = {t for t in tokens if t not in stop}
    if not content:
        return []
    scores: Dict[ConceptID, float] = {}
    for profile in graph.clinical.values():
        total = profile.total_feature_weight
        if total <= 0:
            continue
        hit = sum(w for text, w in profile.features if content & set(tokenize(text)))
        if hit > 0:
            scores[profile.concept] = max(scores.get(profile.concept, 0.0), hit / total)
    return _ranked(scores)


def genotype_candidates(graph: KnowledgeGraph, genes: Set[ConceptID]) -> Candidates:
    """Concepts whose instance records link a queried gene.

    Score is the fraction of queried genes the concept covers.
    """
    if not genes:
        return []
    linked: Dict[ConceptID, Set[ConceptID]] = {}
    for record in graph.instances.values():
        linked.setdefault(record.concept, set()).update(record.gene_links & genes)
    return _ranked({c: len(g) / len(genes) for c, g in linked.items()})


def basic_candidates(graph: KnowledgeGraph, limit: int) -> Candidates:
    """Up to ``limit`` representative concepts, all scored 0.05.

    Taxonomy roots are visited largest subtree first and contribute one
    member at a time in turn; concepts outside the taxonomy fill any
    remaining slots in id order.
    """
    roots = sorted(graph.roots(), key=lambda n: n.node_id)
    pools = [sorted(graph.subtree_members(n.node_id), key=str) for n in roots]
    order = sorted(range(len(roots)), key=lambda i: (-len(pools[i]), roots[i].node_id))
    chosen: List[ConceptID] = []
    depth = 0
    while len(chosen) < limit and any(depth < len(pools[i]) for i in order):
        for i in order:
            if depth < len(pools[i]) and len(chosen) < limit and pools[i][depth] not in chosen:
                chosen.append(pools[i][depth])
        depth += 1
    for cid in graph.concepts:
        if len(chosen) >= limit:
            break
        if cid not in chosen:
            chosen.append(cid)
    return sorted(((c, BASIC_SCORE) for c in chosen), key=lambda p: str(p[0]))


def resolve(
    query: QueryTerm,
    graph: KnowledgeGraph,
    weak_matches: Sequence[Tuple[ConceptID, float]] = (),
    k_min: int = 3,
    phenotype_lexicon: Optional[Mapping[Tuple[str, ...], str]] = None,
    stopwords=None,
) -> FallbackResult:
    """Return the first non-empty fallback level for ``query``."""
    if graph is None or len(graph) == 0:
        raise ValueError("empty graph")

    cands = family_candidates(graph, weak_matches)
    if cands:
        sources = ", ".join(sorted(str(c) for c, _ in weak_matches))
        return FallbackResult(FallbackLevel.L1_FamilyRelated, tuple(cands), f"family of weak matches {sources}")

    phenos = query_phenotypes(query, phenotype_lexicon)
    cands = phenotype_candidates(graph, phenos)
    if cands:
        listed = ", ".join(sorted(str(p) for p in phenos))
        return FallbackResult(FallbackLevel.L2_PhenotypeDriven, tuple(cands), f"phenotype overlap on {listed}")

    cands = feature_candidates(graph, query.tokens, stopwords)
    if cands:
        return FallbackResult(FallbackLevel.L3_ClinicalFeatureCombination, tuple(cands), "clinical feature overlap")

    genes = {c for c in query.extracted_codes if c.namespace is Namespace.GENE}
    cands = genotype_candidates(graph, genes)
    if cands:
        listed = ", ".join(sorted(str(g) for g in genes))
        return FallbackResult(FallbackLevel.L4_GenotypeAssociation, tuple(cands), f"gene association via {listed}")

    return FallbackResult(
        FallbackLevel.L5_BasicKnowledge, tuple(basic_candidates(graph, k_min)), "basic knowledge fallback"
    )
