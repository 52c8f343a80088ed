"""scikit-learn style front end for the activation engine."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, List, Optional

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .codes import ConceptID
from .diversity import SessionHistory
from .kg_store import KnowledgeGraph, load_graph
from .matchers import Method
from .pipeline import ActivationResult, ComponentSwitches, Engine, EngineConfig
from .sparsity import ComplexityWeights, SparsityConfig

__all__ = ["ConceptActivator", "check_queries", "check_graph"]


def check_queries(X) -> List[str]:
    """Coerce a single query or a 1-d collection of queries to ``list[str]``."""
    if isinstance(X, str):
        return [X]
    if hasattr(X, "to_numpy"):
        X = X.to_numpy()
    arr = np.asarray(X, dtype=object)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d collection of query strings, got shape {arr.shape}")
    bad = [type(q).__name__ for q in arr if not isinstance(q, str)]
    if bad:
        raise TypeError(f"queries must be strings, found {bad[0]}")
    return [str(q) for q in arr]


def check_graph(X) -> KnowledgeGraph:
    """Accept a graph, a path to a graph file, or an iterable of layer records."""
    if isinstance(X, KnowledgeGraph):
        return X
    if isinstance(X, (str, Path)):
        return load_graph(X)
    if isinstance(X, Iterable):
        return KnowledgeGraph.from_records(list(X))
    raise TypeError(f"cannot build a knowledge graph from {type(X).__name__}")


class ConceptActivator(BaseEstimator):
    """Sparse concept activation over a rare-disease knowledge graph.

    ``fit`` binds the estimator to a knowledge graph; ``predict`` returns
    the top-ranked concept id per query and ``transform`` the full
    concept-score matrix. Both treat every query as a fresh session.
    :meth:`activate` instead carries the estimator's own session history
    from call to call.

    Parameters
    ----------
    code_weight, term_weight, variant_weight, multilingual_weight : float
        Per-method weights for the weighted-max score combination.
    threshold : float
        Minimum adjusted score for a concept to activate.
    k_min, k_max, alpha : int, int, float
        Bounds and base rate of the adaptive activation budget.
    complexity_weights : tuple of 4 floats
        Weights of the length, term-density, semantic and multi-system
        complexity factors; normalized to sum to one.
    lambda_rd : float
        Multiplier applied to concepts already activated in the session.
    use_code, use_term, use_variant, use_multilingual : bool
        Matcher switches.
    use_diversity, use_fallback : bool
        Repeat-penalty and fallback switches.
    candidate_cap : int
        Maximum candidates scored per query.
    combine_weights : tuple of 3 floats
        Transliteration, character and embedding weights of the
        multilingual matcher.
    language : str
        Default language tag for queries.
    evidence_provider : object or None
        Anything with ``fetch(query_text) -> list[EvidenceSnippet]``.
    """

    def __init__(
        self,
        code_weight=1.0,
        term_weight=0.9,
        variant_weight=0.85,
        multilingual_weight=0.8,
        threshold=0.2,
        k_min=3,
        k_max=20,
        alpha=0.002,
        complexity_weights=(0.25, 0.25, 0.25, 0.25),
        lambda_rd=0.7,
        use_code=True,
        use_term=True,
        use_variant=True,
        use_multilingual=True,
        use_diversity=True,
        use_fallback=True,
        candidate_cap=200,
        combine_weights=(1 / 3, 1 / 3, 1 / 3),
        language="und",
        evidence_provider=None,
    ):
        self.code_weight = code_weight
        self.term_weight = term_weight
        self.variant_weight = variant_weight
        self.multilingual_weight = multilingual_weight
        self.threshold = threshold
        self.k_min = k_min
        self.k_max = k_max
        self.alpha = alpha
        self.complexity_weights = complexity_weights
        self.lambda_rd = lambda_rd
        self.use_code = use_code
        self.use_term = use_term
        self.use_variant = use_variant
        self.use_multilingual = use_multilingual
        self.use_diversity = use_diversity
        self.use_fallback = use_fallback
        self.candidate_cap = candidate_cap
        self.combine_weights = combine_weights
        self.language = language
        self.evidence_provider = evidence_provider

    def get_config(self) -> EngineConfig:
        return EngineConfig(
            method_weights={
                Method.CODE: self.code_weight,
                Method.TERM: self.term_weight,
                Method.VARIANT: self.variant_weight,
                Method.MULTILINGUAL: self.multilingual_weight,
            },
            threshold=self.threshold,
            sparsity=SparsityConfig(self.k_min, self.k_max, self.alpha),
            complexity_weights=ComplexityWeights(tuple(self.complexity_weights)),
            lambda_rd=self.lambda_rd,
            switches=ComponentSwitches(
                code=self.use_code,
                term=self.use_term,
                variant=self.use_variant,
                multilingual=self.use_multilingual,
                diversity=self.use_diversity,
                fallback=self.use_fallback,
            ),
            candidate_cap=self.candidate_cap,
            combine_weights=tuple(self.combine_weights),
        )

    @classmethod
    def from_config(cls, config: EngineConfig, **kwargs) -> "ConceptActivator":
        w = config.method_weights
        sw = config.switches
        return cls(
            code_weight=w[Method.CODE],
            term_weight=w[Method.TERM],
            variant_weight=w[Method.VARIANT],
            multilingual_weight=w[Method.MULTILINGUAL],
            threshold=config.threshold,
            k_min=config.sparsity.k_min,
            k_max=config.sparsity.k_max,
            alpha=config.sparsity.alpha,
            complexity_weights=tuple(config.complexity_weights.beta),
            lambda_rd=config.lambda_rd,
            use_code=sw.code,
            use_term=sw.term,
            use_variant=sw.variant,
            use_multilingual=sw.multilingual,
            use_diversity=sw.diversity,
            use_fallback=sw.fallback,
            candidate_cap=config.candidate_cap,
            combine_weights=tuple(config.combine_weights),
            **kwargs,
        )

    def fit(self, X, y=None):
        """Bind to a knowledge graph (object, file path, or layer records)."""
        self.graph_ = check_graph(X)
        self.engine_ = Engine(self.graph_, self.get_config(), self.evidence_provider)
        self.concepts_ = np.array([str(c) for c in self.graph_.concepts], dtype=object)
        self._column = {c: i for i, c in enumerate(self.graph_.concepts)}
        self.n_concepts_ = len(self.concepts_)
        self.history_ = self.engine_.new_session()
        return self

    def new_session(self, session_id: str = "default") -> SessionHistory:
        check_is_fitted(self, "engine_")
        return self.engine_.new_session(session_id)

    def activate(self, query: str, language: Optional[str] = None, session: Optional[SessionHistory] = None) -> ActivationResult:
        check_is_fitted(self, "engine_")
        session = self.history_ if session is None else session
        return self.engine_.activate(query, language or self.language, session)

    def _results(self, X) -> List[ActivationResult]:
        check_is_fitted(self, "engine_")
        return [self.engine_.activate(q, self.language, self.engine_.new_session()) for q in check_queries(X)]

    def predict(self, X) -> np.ndarray:
        """Top-ranked concept id per query (``""`` when nothing activates)."""
        return np.array([str(r.entries[0].concept) if r.entries else "" for r in self._results(X)], dtype=object)

    def rank(self, X) -> List[List[str]]:
        """Activated concept ids per query, best first."""
        return [[str(c) for c in r.concepts] for r in self._results(X)]

    def transform(self, X) -> sparse.csr_matrix:
        """Adjusted activation scores, shape ``(n_queries, n_concepts_)``.

        Columns follow ``concepts_``.
        """
        results = self._results(X)
        rows, cols, vals = [], [], []
        for i, r in enumerate(results):
            for e in r.entries:
                rows.append(i)
                cols.append(self._column[e.concept])
                vals.append(e.adjusted)
        return sparse.csr_matrix((vals, (rows, cols)), shape=(len(results), self.n_concepts_))

    def score(self, X, y) -> float:
        """Top-1 accuracy; each ``y`` item is a concept id or a collection of ids."""
        pred = self.predict(X)
        if len(y) != len(pred):
            raise ValueError(f"X has {len(pred)} queries but y has {len(y)} labels")
        hits = 0
        for p, gold in zip(pred, y):
            golds = [gold] if isinstance(gold, (str, ConceptID)) else list(gold)
            golds = {ConceptID.parse(g) for g in golds}
            hits += bool(p) and ConceptID.parse(p) in golds
        return hits / len(pred) if len(pred) else 0.0
