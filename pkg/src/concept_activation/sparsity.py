"""Query complexity estimate and the adaptive activation budget."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from .matchers import QueryTerm, Segmenter
from .text import load_organ_systems, split_clauses

__all__ = [
    "SparsityConfig",
    "ComplexityWeights",
    "ComplexityBreakdown",
    "complexity",
    "adaptive_k",
    "CONJUNCTIONS",
]

LENGTH_SATURATION = 50
CLAUSE_SATURATION = 4

CONJUNCTIONS = (
    "and", "or", "but", "while", "whereas", "although", "though", "because", "however", "yet",
    "und", "oder", "aber", "et", "ou", "mais", "y", "o", "pero",
)


@dataclass(frozen=True)
class SparsityConfig:
    k_min: int = 3
    k_max: int = 20
    alpha: float = 0.002

    def __post_init__(self):
        if int(self.k_min) != self.k_min or int(self.k_max) != self.k_max:
            raise ValueError("k_min and k_max must be integers")
        if self.k_min < 1:
            raise ValueError("k_min must be >= 1")
        if self.k_min > self.k_max:
            raise ValueError(f"k_min ({self.k_min}) exceeds k_max ({self.k_max})")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class ComplexityWeights:
    """Weights for length, term density, semantic and multi-system factors.

    Normalized to sum to one on construction.
    """

    beta: Tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        if len(beta) != 4 or any(b < 0 for b in beta) or sum(beta) <= 0:
            raise ValueError("beta must be four non-negative numbers with positive sum")
        total = sum(beta)
        object.__setattr__(self, "beta", tuple(b / total for b in beta))


@dataclass(frozen=True)
class ComplexityBreakdown:
    length_factor: float
    term_density: float
    semantic_complexity: float
    multisystem_factor: float
    total: float

    @property
    def factors(self) -> Tuple[float, float, float, float]:
        return (self.length_factor, self.term_density, self.semantic_complexity, self.multisystem_factor)

    def to_dict(self) -> dict:
        return {
            "length_factor": self.length_factor,
            "term_density": self.term_density,
            "semantic_complexity": self.semantic_complexity,
            "multisystem_factor": self.multisystem_factor,
            "total": self.total,
        }


def weighted_total(factors: Sequence[float], weights: ComplexityWeights) -> float:
    return min(1.0, max(0.0, sum(b * f for b, f in zip(weights.beta, factors))))


def _contains(tokens: Sequence[str], phrase: Sequence[str]) -> bool:
    n = len(phrase)
    return any(tuple(tokens[i:i + n]) == tuple(phrase) for i in range(len(tokens) - n + 1))


def complexity(
    query: QueryTerm,
    segmenter,
    weights: ComplexityWeights = ComplexityWeights(),
    organ_systems=None,
) -> ComplexityBreakdown:
    """Score how demanding a query is, in [0, 1].

    Length saturates at 50 tokens. Term density is the share of tokens
    covered by lexicon hits. Semantic complexity is the distinct-token
    ratio scaled by clause count (saturating at 4). The multi-system
    factor is the share of organ-system categories mentioned.

    ``segmenter`` may be a :class:`Segmenter` or a knowledge graph, whose
    name lexicon is then used.
    """
    if not isinstance(segmenter, Segmenter):
        segmenter = Segmenter(segmenter.lexicon)
    tokens = list(query.tokens)
    n = len(tokens)
    if n == 0:
        return ComplexityBreakdown(0.0, 0.0, 0.0, 0.0, 0.0)
    table = organ_systems if organ_systems is not None else load_organ_systems()

    length = min(1.0, n / LENGTH_SATURATION)
    covered = sum(end - start for start, end, hit in segmenter.spans(tokens) if hit)
    density = covered / n
    clauses = split_clauses(query.raw_text, CONJUNCTIONS)
    semantic = (len(set(tokens)) / n) * min(1.0, len(clauses) / CLAUSE_SATURATION)
    hit = sum(1 for _, keywords in table if any(_contains(tokens, kw) for kw in keywords))
    multisystem = min(1.0, hit / max(len(table), 1))

    factors = (length, density, semantic, multisystem)
    return ComplexityBreakdown(*factors, total=weighted_total(factors, weights))


def adaptive_k(config: SparsityConfig, concept_count: int, complexity_total: float) -> int:
    """Activation budget: ``alpha * |concepts| * complexity`` clamped to [k_min, k_max].

    The product is rounded half-up before clamping.
    """
    if concept_count < 0:
        raise ValueError("concept_count must be >= 0")
    if not 0.0 <= complexity_total <= 1.0:
        raise ValueError("complexity_total must lie in [0, 1]")
    raw = math.floor(config.alpha * concept_count * complexity_total + 0.5)
    return max(config.k_min, min(config.k_max, raw))
