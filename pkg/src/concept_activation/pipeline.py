"""End-to-end concept activation.

Flow per query: build the query term, pre-filter candidates from the
token index, run the enabled matchers, combine to one score per concept,
apply the repeat penalty, pick an adaptive number of concepts above the
threshold, fall back when nothing qualifies, then assemble a context
document from the three graph layers and any external evidence.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Protocol, Sequence, Tuple

from .codes import ConceptID
from .diversity import DEFAULT_LAMBDA, DiversityReport, SessionHistory, adjust_score, diversity
from .fallback import FallbackResult, resolve
from .kg_store import DEFAULT_CANDIDATE_CAP, KnowledgeGraph
from .matchers import (
    DEFAULT_COMBINE_WEIGHTS,
    MatchScore,
    Method,
    QueryTerm,
    Segmenter,
    code_match,
    concept_term_match,
    multilingual_match,
    semantic_similarity,
    variant_match,
)
from .sparsity import ComplexityBreakdown, ComplexityWeights, SparsityConfig, adaptive_k, complexity
from .text import (
    load_organ_systems,
    load_phenotype_lexicon,
    load_phonetic_table,
    load_stopwords,
    load_term_file,
    normalize_text,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "ComponentSwitches",
    "EngineConfig",
    "ActivationScoreEntry",
    "select_top_k",
    "ActivationResult",
    "ContextSection",
    "ContextDocument",
    "EvidenceSnippet",
    "EvidenceProvider",
    "NullEvidenceProvider",
    "FileEvidenceProvider",
    "query_key",
    "combine_scores",
    "load_config",
    "Engine",
]

DEFAULT_METHOD_WEIGHTS = {
    Method.CODE: 1.0,
    Method.TERM: 0.9,
    Method.VARIANT: 0.85,
    Method.MULTILINGUAL: 0.8,
}
DEFAULT_THRESHOLD = 0.2
MAX_CONTEXT_INSTANCES = 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ComponentSwitches:
    """Per-component on/off flags, one per ablatable part of the engine."""

    code: bool = True
    term: bool = True
    variant: bool = True
    multilingual: bool = True
    diversity: bool = True
    fallback: bool = True

    def enabled_methods(self) -> Tuple[Method, ...]:
        flags = {
            Method.CODE: self.code,
            Method.TERM: self.term,
            Method.VARIANT: self.variant,
            Method.MULTILINGUAL: self.multilingual,
        }
        return tuple(m for m, on in flags.items() if on)


@dataclass(frozen=True)
class EngineConfig:
    method_weights: Mapping[Method, float] = field(default_factory=lambda: dict(DEFAULT_METHOD_WEIGHTS))
    threshold: float = DEFAULT_THRESHOLD
    sparsity: SparsityConfig = SparsityConfig()
    complexity_weights: ComplexityWeights = ComplexityWeights()
    lambda_rd: float = DEFAULT_LAMBDA
    switches: ComponentSwitches = ComponentSwitches()
    candidate_cap: int = DEFAULT_CANDIDATE_CAP
    combine_weights: Tuple[float, float, float] = DEFAULT_COMBINE_WEIGHTS
    lexicon_path: Optional[str] = None
    stopwords_path: Optional[str] = None
    phonetic_table_path: Optional[str] = None
    organ_systems_path: Optional[str] = None
    phenotype_lexicon_path: Optional[str] = None

    def __post_init__(self):
        weights = {Method(k): float(v) for k, v in dict(self.method_weights).items()}
        for m in Method:
            weights.setdefault(m, DEFAULT_METHOD_WEIGHTS[m])
        if any(not 0.0 <= w <= 1.0 for w in weights.values()):
            raise ConfigError("method weights must lie in [0, 1]")
        object.__setattr__(self, "method_weights", {m: weights[m] for m in Method})
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]")
        if not 0.0 <= self.lambda_rd <= 1.0:
            raise ConfigError("lambda_rd must lie in [0, 1]")
        if not self.switches.enabled_methods():
            raise ConfigError("at least one matcher must be enabled")
        if self.candidate_cap < 1:
            raise ConfigError("candidate_cap must be >= 1")
        cw = tuple(float(w) for w in self.combine_weights)
        if len(cw) != 3 or any(w < 0 for w in cw) or sum(cw) <= 0:
            raise ConfigError("combine_weights must be three non-negative numbers with positive sum")
        object.__setattr__(self, "combine_weights", cw)

    def to_dict(self) -> dict:
        return {
            "method_weights": {m.value: w for m, w in self.method_weights.items()},
            "threshold": self.threshold,
            "sparsity": {"k_min": self.sparsity.k_min, "k_max": self.sparsity.k_max, "alpha": self.sparsity.alpha},
            "complexity_weights": list(self.complexity_weights.beta),
            "lambda_rd": self.lambda_rd,
            "switches": {f.name: getattr(self.switches, f.name) for f in fields(ComponentSwitches)},
            "candidate_cap": self.candidate_cap,
            "combine_weights": list(self.combine_weights),
            "resources": {
                "lexicon": self.lexicon_path,
                "stopwords": self.stopwords_path,
                "phonetic_table": self.phonetic_table_path,
                "organ_systems": self.organ_systems_path,
                "phenotype_lexicon": self.phenotype_lexicon_path,
            },
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EngineConfig":
        known = {
            "method_weights", "threshold", "sparsity", "complexity_weights", "lambda_rd",
            "switches", "candidate_cap", "combine_weights", "resources",
        }
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key {unknown[0]!r}")
        kwargs: Dict[str, object] = {}
        try:
            if "method_weights" in data:
                kwargs["method_weights"] = {Method(k): v for k, v in data["method_weights"].items()}
            for key in ("threshold", "lambda_rd"):
                if key in data:
                    kwargs[key] = float(data[key])
            if "candidate_cap" in data:
                kwargs["candidate_cap"] = int(data["candidate_cap"])
            if "sparsity" in data:
                kwargs["sparsity"] = SparsityConfig(**data["sparsity"])
            if "complexity_weights" in data:
                kwargs["complexity_weights"] = ComplexityWeights(tuple(data["complexity_weights"]))
            if "switches" in data:
                kwargs["switches"] = ComponentSwitches(**data["switches"])
            if "combine_weights" in data:
                kwargs["combine_weights"] = tuple(data["combine_weights"])
            resources = data.get("resources") or {}
            for key in ("lexicon", "stopwords", "phonetic_table", "organ_systems", "phenotype_lexicon"):
                if resources.get(key) is not None:
                    kwargs[f"{key}_path"] = str(resources[key])
            return cls(**kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None


def load_config(path) -> EngineConfig:
    """Read an engine config from JSON; relative resource paths resolve against the file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    resources = data.get("resources") or {}
    for key, value in list(resources.items()):
        if value is not None and not Path(value).is_absolute():
            resources[key] = str(path.parent / value)
    return EngineConfig.from_dict(data)


def combine_scores(raw: Mapping[Method, float], config: EngineConfig) -> float:
    """Weighted max over the enabled methods."""
    enabled = config.switches.enabled_methods()
    if not enabled:
        raise ConfigError("at least one matcher must be enabled")
    values = [config.method_weights[m] * float(raw[m]) for m in enabled if m in raw]
    if not values:
        raise ConfigError("no score supplied for any enabled method")
    return max(0.0, min(1.0, max(values)))


# -- evidence -------------------------------------------------------------------------


@dataclass(frozen=True)
class EvidenceSnippet:
    title: str
    body: str
    source_uri: str = ""
    retrieved_at: str = ""

    def __post_init__(self):
        if not self.body:
            raise ValueError("evidence body must be nonempty")


class EvidenceProvider(Protocol):
    def fetch(self, query_text: str) -> List[EvidenceSnippet]: ...


class NullEvidenceProvider:
    def fetch(self, query_text: str) -> List[EvidenceSnippet]:
        return []


def query_key(text: str) -> str:
    """Stable lookup key for a query: SHA-256 of its normalized text."""
    return hashlib.sha256(normalize_text(text).encode("utf-8")).hexdigest()


class FileEvidenceProvider:
    """Serves canned snippets from a JSON file keyed by :func:`query_key`.

    File layout: ``{"<key>": [{"title": ..., "body": ..., "source_uri": ...,
    "retrieved_at": ...}, ...], ...}``.
    """

    def __init__(self, path):
        self.path = Path(path)
        data = json.loads(self.path.read_text(encoding="utf-8"))
        self._snippets = {
            key: [EvidenceSnippet(**item) for item in items] for key, items in data.items()
        }

    def fetch(self, query_text: str) -> List[EvidenceSnippet]:
        return list(self._snippets.get(query_key(query_text), []))


# -- results ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ActivationScoreEntry:
    concept: ConceptID
    raw: Mapping[Method, MatchScore]
    combined: float
    adjusted: float
    origin: str = "match"

    def to_dict(self) -> dict:
        return {
            "concept": str(self.concept),
            "origin": self.origin,
            "combined": self.combined,
            "adjusted": self.adjusted,
            "raw": {
                m.value: {"value": s.value, "evidence": list(s.evidence)} for m, s in self.raw.items()
            },
        }


@dataclass(frozen=True)
class ContextSection:
    title: str
    body: str
    provenance: Tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"title": self.title, "body": self.body, "provenance": list(self.provenance)}


@dataclass(frozen=True)
class ContextDocument:
    sections: Tuple[ContextSection, ...] = ()

    def to_dict(self) -> dict:
        return {"sections": [s.to_dict() for s in self.sections]}

    def render(self) -> str:
        return "\n\n".join(f"## {s.title}\n{s.body}" for s in self.sections)


@dataclass(frozen=True)
class ActivationResult:
    query: str
    language: str
    entries: Tuple[ActivationScoreEntry, ...]
    k_used: int
    complexity: ComplexityBreakdown
    diversity: Optional[DiversityReport]
    fallback: Optional[FallbackResult]
    context: ContextDocument

    @property
    def concepts(self) -> List[ConceptID]:
        return [e.concept for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "language": self.language,
            "k_used": self.k_used,
            "entries": [e.to_dict() for e in self.entries],
            "complexity": self.complexity.to_dict(),
            "diversity": self.diversity.to_dict() if self.diversity is not None else None,
            "fallback": self.fallback.to_dict() if self.fallback is not None else None,
            "context": self.context.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)

    def render_table(self, graph: Optional[KnowledgeGraph] = None) -> str:
        lines = [f"query: {self.query}", f"k: {self.k_used}  complexity: {self.complexity.total:.4f}"]
        if self.fallback is not None:
            lines.append(f"fallback: {self.fallback.level.name} ({self.fallback.rationale})")
        if self.diversity is not None:
            lines.append(f"diversity: {self.diversity.score:.4f}")
        lines.append("")
        lines.append(f"{'rank':>4}  {'concept':<16} {'adjusted':>8} {'combined':>8}  name")
        for i, e in enumerate(self.entries, start=1):
            name = graph[e.concept].standard_name if graph is not None and e.concept in graph else ""
            lines.append(f"{i:>4}  {str(e.concept):<16} {e.adjusted:>8.4f} {e.combined:>8.4f}  {name}")
        if not self.entries:
            lines.append("   (no concepts activated)")
        return "\n".join(lines)


def _entry_key(e: ActivationScoreEntry):
    return (-e.adjusted, str(e.concept))


def select_top_k(
    entries: Iterable[ActivationScoreEntry], k: int, threshold: float = 0.0
) -> List[ActivationScoreEntry]:
    """The ``k`` best entries scoring at least ``threshold`` (and above zero).

    Ties on score break by concept id string.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    passing = (e for e in entries if e.adjusted >= threshold and e.adjusted > 0)
    return heapq.nsmallest(k, passing, key=_entry_key)


# -- engine -------------------------------------------------------------------------------


class Engine:
    """Runs concept activation against one knowledge graph.

    The engine holds no per-session state, so one instance can serve
    several sessions; pass a :class:`SessionHistory` to :meth:`activate`
    to carry the repeat penalty across queries.
    """

    def __init__(
        self,
        graph: KnowledgeGraph,
        config: Optional[EngineConfig] = None,
        evidence_provider: Optional[EvidenceProvider] = None,
        semantic: Callable[[str, str], float] = semantic_similarity,
        embedding: Callable[[str, str], float] = semantic_similarity,
    ):
        self.graph = graph
        self.config = config if config is not None else EngineConfig()
        self.evidence_provider = evidence_provider if evidence_provider is not None else NullEvidenceProvider()
        self.semantic = semantic
        self.embedding = embedding
        cfg = self.config
        self.stopwords = load_stopwords(cfg.stopwords_path)
        lexicon = set(graph.lexicon)
        if cfg.lexicon_path:
            lexicon.update(tuple(t.split()) for t in map(normalize_text, load_term_file(cfg.lexicon_path)) if t)
        self.segmenter = Segmenter(frozenset(lexicon), self.stopwords)
        self.phonetic_table = load_phonetic_table(cfg.phonetic_table_path)
        self.organ_systems = load_organ_systems(cfg.organ_systems_path)
        self.phenotype_lexicon = load_phenotype_lexicon(cfg.phenotype_lexicon_path)

    def new_session(self, session_id: str = "default") -> SessionHistory:
        return SessionHistory(lambda_rd=self.config.lambda_rd, session_id=session_id)

    def build_query(self, text: str, language: str = "und") -> QueryTerm:
        return QueryTerm.from_text(text, language, self.segmenter)

    def raw_scores(self, query: QueryTerm, cid: ConceptID, methods: Sequence[Method] = None) -> Dict[Method, MatchScore]:
        concept = self.graph[cid]
        methods = self.config.switches.enabled_methods() if methods is None else methods
        out: Dict[Method, MatchScore] = {}
        for m in methods:
            if m is Method.CODE:
                out[m] = code_match(query, concept)
            elif m is Method.TERM:
                out[m] = concept_term_match(query, concept, self.segmenter)
            elif m is Method.VARIANT:
                out[m] = variant_match(query, concept, self.semantic)
            elif m is Method.MULTILINGUAL:
                out[m] = multilingual_match(
                    query, concept, self.config.combine_weights, self.embedding, self.phonetic_table
                )
        return out

    def _adjust(self, score: float, cid: ConceptID, session: SessionHistory) -> float:
        if not self.config.switches.diversity:
            return score
        return adjust_score(score, cid, session)

    def activate(self, text: str, language: str = "und", session: Optional[SessionHistory] = None) -> ActivationResult:
        cfg = self.config
        session = session if session is not None else self.new_session()
        query = self.build_query(text, language)

        candidates = self.graph.candidates_for_query(query.tokens, cfg.candidate_cap, query.extracted_codes)
        scored: List[ActivationScoreEntry] = []
        for cid in candidates:
            raw = self.raw_scores(query, cid)
            combined = combine_scores({m: s.value for m, s in raw.items()}, cfg)
            scored.append(ActivationScoreEntry(cid, raw, combined, self._adjust(combined, cid, session)))

        breakdown = complexity(query, self.segmenter, cfg.complexity_weights, self.organ_systems)
        k = adaptive_k(cfg.sparsity, self.graph.concept_count, breakdown.total)

        entries = select_top_k(scored, k, cfg.threshold)

        fallback = None
        if not entries and cfg.switches.fallback:
            weak = [(e.concept, e.adjusted) for e in scored if 0 < e.adjusted < cfg.threshold]
            fallback = resolve(
                query, self.graph, weak, cfg.sparsity.k_min, self.phenotype_lexicon, self.stopwords
            )
            fb_entries = [
                ActivationScoreEntry(cid, {}, score, self._adjust(score, cid, session), origin=fallback.level.name)
                for cid, score in fallback.candidates
            ]
            entries = select_top_k(fb_entries, k)

        active = [e.concept for e in entries]
        report = diversity(active, session) if active else None
        session.record(active)
        context = self.assemble_context(entries, fallback, text)
        return ActivationResult(text, query.language, tuple(entries), k, breakdown, report, fallback, context)

    def assemble_context(
        self,
        entries: Sequence[ActivationScoreEntry],
        fallback: Optional[FallbackResult],
        query_text: str,
    ) -> ContextDocument:
        """Lay out taxonomy, clinical and instance knowledge per activated concept."""
        g = self.graph
        sections: List[ContextSection] = []
        if fallback is not None:
            sections.append(ContextSection(
                "Fallback", f"{fallback.level.name}: {fallback.rationale}",
                tuple(str(c) for c, _ in fallback.candidates),
            ))
        for entry in entries:
            cid = entry.concept
            concept = g[cid]
            name = concept.standard_name
            if concept.taxonomy_node is not None:
                path = g.taxonomy_path(concept.taxonomy_node)
                sections.append(ContextSection(
                    f"Taxonomy: {name}",
                    " > ".join(n.label for n in path) + f" > {name}",
                    (str(cid),) + tuple(n.node_id for n in path),
                ))
            profile = g.profile_for(cid)
            if profile is not None:
                feats = sorted(profile.features, key=lambda f: (-f[1], f[0]))
                body = [f"- {text} ({w:.2f})" for text, w in feats]
                if profile.phenotypes:
                    body.append("Phenotypes: " + ", ".join(str(p) for p in sorted(profile.phenotypes)))
                body.extend(f"Criterion: {c}" for c in profile.diagnostic_criteria)
                sections.append(ContextSection(
                    f"Clinical features: {name}", "\n".join(body), (str(cid), profile.profile_id)
                ))
            records = g.records_for(cid)[:MAX_CONTEXT_INSTANCES]
            if records:
                body = []
                for r in records:
                    line = f"- [{r.record_id}]"
                    if r.subtype:
                        line += f" ({r.subtype})"
                    line += f" {r.case_text}"
                    if r.diagnostic_pathway:
                        line += " | pathway: " + " -> ".join(r.diagnostic_pathway)
                    body.append(line)
                sections.append(ContextSection(
                    f"Instance cases: {name}", "\n".join(body), (str(cid),) + tuple(r.record_id for r in records)
                ))

        try:
            snippets = list(self.evidence_provider.fetch(query_text))
        except Exception as exc:  # provider faults must not break activation
            logger.warning("evidence provider failed: %s", exc)
            sections.append(ContextSection("External evidence", f"evidence unavailable: {exc}", ()))
        else:
            if snippets:
                body = "\n".join(
                    f"[{i}] {s.title}: {s.body}" + (f" ({s.source_uri})" if s.source_uri else "")
                    for i, s in enumerate(snippets, start=1)
                )
                sections.append(ContextSection("External evidence", body, tuple(s.source_uri for s in snippets)))
        return ContextDocument(tuple(sections))

    def explain(
        self, text: str, concept: ConceptID, language: str = "und", session: Optional[SessionHistory] = None
    ) -> dict:
        """All intermediate values for one concept, without touching the session."""
        if concept not in self.graph:
            raise KeyError(f"unknown concept {concept}")
        cfg = self.config
        session = session if session is not None else self.new_session()
        query = self.build_query(text, language)
        raw = self.raw_scores(query, concept, methods=tuple(Method))
        enabled = cfg.switches.enabled_methods()
        combined = combine_scores({m: raw[m].value for m in enabled}, cfg)
        adjusted = self._adjust(combined, concept, session)
        breakdown = complexity(query, self.segmenter, cfg.complexity_weights, self.organ_systems)
        k = adaptive_k(cfg.sparsity, self.graph.concept_count, breakdown.total)
        candidates = self.graph.candidates_for_query(query.tokens, cfg.candidate_cap, query.extracted_codes)
        return {
            "query": text,
            "concept": str(concept),
            "name": self.graph[concept].standard_name,
            "candidate": concept in candidates,
            "raw": {
                m.value: {
                    "value": raw[m].value,
                    "weight": cfg.method_weights[m],
                    "enabled": m in enabled,
                    "evidence": list(raw[m].evidence),
                }
                for m in Method
            },
            "combined": combined,
            "in_session": concept in session,
            "lambda_rd": session.lambda_rd,
            "adjusted": adjusted,
            "threshold": cfg.threshold,
            "complexity": breakdown.to_dict(),
            "complexity_weights": list(cfg.complexity_weights.beta),
            "k": k,
            "k_inputs": {
                "k_min": cfg.sparsity.k_min,
                "k_max": cfg.sparsity.k_max,
                "alpha": cfg.sparsity.alpha,
                "concept_count": self.graph.concept_count,
            },
        }
