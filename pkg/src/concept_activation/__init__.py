"""Sparse concept activation for rare-disease queries over a three-layer knowledge graph."""

from .codes import ConceptID, Namespace, extract_codes
from .diversity import DiversityReport, SessionHistory, adjust_score, diversity
from .estimator import ConceptActivator
from .evaluation import CorpusCase, MetricsReport, evaluate, load_corpus, report_render
from .fallback import FallbackLevel, FallbackResult, resolve
from .kg_store import GraphError, KnowledgeGraph, load_graph
from .pipeline import (
    ActivationResult,
    ComponentSwitches,
    ConfigError,
    Engine,
    EngineConfig,
    EvidenceSnippet,
    FileEvidenceProvider,
    NullEvidenceProvider,
    combine_scores,
    load_config,
)
from .sparsity import ComplexityWeights, SparsityConfig, adaptive_k, complexity

__version__ = "0.1.0"

__all__ = [
    "ActivationResult",
    "ComplexityWeights",
    "ComponentSwitches",
    "ConceptActivator",
    "ConceptID",
    "ConfigError",
    "CorpusCase",
    "DiversityReport",
    "Engine",
    "EngineConfig",
    "EvidenceSnippet",
    "FallbackLevel",
    "FallbackResult",
    "FileEvidenceProvider",
    "GraphError",
    "KnowledgeGraph",
    "MetricsReport",
    "Namespace",
    "NullEvidenceProvider",
    "SessionHistory",
    "SparsityConfig",
    "adaptive_k",
    "adjust_score",
    "combine_scores",
    "complexity",
    "diversity",
    "evaluate",
    "extract_codes",
    "load_config",
    "load_corpus",
    "load_graph",
    "report_render",
    "resolve",
]
