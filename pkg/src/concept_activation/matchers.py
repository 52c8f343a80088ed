"""Multi-granularity concept matchers and their similarity primitives.

Four matchers score a query against a concept, each in [0, 1]:

* :func:`code_match` -- shared standardized code, exact standard name,
  or authority-weighted exact alias hits.
* :func:`term_match` -- weighted all-pairs agreement between the semantic
  units of two segmented terms.
* :func:`variant_match` -- best of abbreviation, partial-token and
  trigram-cosine similarity over the concept's names.
* :func:`multilingual_match` -- convex combination of phonetic,
  edit-distance and embedding similarity.

All functions are pure.
"""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .codes import ConceptID, extract_codes
from .kg_store import Concept
from .text import load_phonetic_table, load_stopwords, normalize_text, tokenize

__all__ = [
    "Method",
    "MatchScore",
    "SemanticUnit",
    "QueryTerm",
    "Segmenter",
    "segment",
    "extract_codes",
    "code_match",
    "unit_similarity",
    "term_match",
    "concept_term_match",
    "abbr_similarity",
    "partial_similarity",
    "semantic_similarity",
    "variant_match",
    "phonetic_key",
    "translit_similarity",
    "levenshtein",
    "char_similarity",
    "combine_similarities",
    "multilingual_match",
    "DEFAULT_COMBINE_WEIGHTS",
]

LEXICON_WEIGHT = 1.0
RESIDUAL_WEIGHT = 0.5
STOPWORD_WEIGHT = 0.1
DEFAULT_COMBINE_WEIGHTS = (1 / 3, 1 / 3, 1 / 3)

Similarity = Callable[[str, str], float]


class Method(str, Enum):
    CODE = "Code"
    TERM = "Term"
    VARIANT = "Variant"
    MULTILINGUAL = "Multilingual"


def _clamp(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else float(x)


@dataclass(frozen=True)
class MatchScore:
    value: float
    method: Method
    evidence: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "value", _clamp(self.value))


@dataclass(frozen=True)
class SemanticUnit:
    text: str
    weight: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.weight <= 1.0:
            raise ValueError(f"unit weight {self.weight} outside (0, 1]")


# -- segmentation ----------------------------------------------------------------


def _as_lexicon(lexicon: Iterable) -> FrozenSet[Tuple[str, ...]]:
    if isinstance(lexicon, frozenset) and all(isinstance(t, tuple) for t in lexicon):
        return lexicon
    out = set()
    for term in lexicon:
        toks = tuple(term) if isinstance(term, tuple) else tuple(tokenize(term))
        if toks:
            out.add(toks)
    return frozenset(out)


class Segmenter:
    """Greedy leftmost-longest segmentation over a term lexicon.

    Lexicon hits become one unit of weight 1.0; leftover tokens become
    single-token units of weight 0.5, or 0.1 for stopwords.
    """

    def __init__(self, lexicon: Iterable = (), stopwords: Optional[Iterable[str]] = None):
        self.lexicon = _as_lexicon(lexicon)
        self.stopwords = frozenset(stopwords) if stopwords is not None else load_stopwords()
        self._max_len = max((len(t) for t in self.lexicon), default=0)
        self._cache: Dict[str, Tuple[SemanticUnit, ...]] = {}

    def spans(self, tokens: Sequence[str]) -> List[Tuple[int, int, bool]]:
        """``(start, end, is_lexicon_hit)`` spans covering ``tokens``."""
        out = []
        i, n = 0, len(tokens)
        while i < n:
            hit = 0
            for length in range(min(self._max_len, n - i), 0, -1):
                if tuple(tokens[i:i + length]) in self.lexicon:
                    hit = length
                    break
            if hit:
                out.append((i, i + hit, True))
                i += hit
            else:
                out.append((i, i + 1, False))
                i += 1
        return out

    def segment_tokens(self, tokens: Sequence[str]) -> List[SemanticUnit]:
        units = []
        for start, end, is_hit in self.spans(tokens):
            text = " ".join(tokens[start:end])
            if is_hit:
                weight = LEXICON_WEIGHT
            elif text in self.stopwords:
                weight = STOPWORD_WEIGHT
            else:
                weight = RESIDUAL_WEIGHT
            units.append(SemanticUnit(text, weight))
        return units

    def segment(self, text: str) -> List[SemanticUnit]:
        cached = self._cache.get(text)
        if cached is None:
            cached = tuple(self.segment_tokens(tokenize(text)))
            self._cache[text] = cached
        return list(cached)


def segment(text: str, lexicon: Iterable = (), stopwords: Optional[Iterable[str]] = None) -> List[SemanticUnit]:
    """Split ``text`` into weighted semantic units (see :class:`Segmenter`)."""
    return Segmenter(lexicon, stopwords).segment_tokens(tokenize(text))


@dataclass(frozen=True)
class QueryTerm:
    raw_text: str
    language: str = "und"
    tokens: Tuple[str, ...] = ()
    extracted_codes: Tuple[ConceptID, ...] = ()
    semantic_units: Tuple[SemanticUnit, ...] = ()

    @classmethod
    def from_text(cls, text: str, language: str = "und", segmenter: Optional[Segmenter] = None) -> "QueryTerm":
        tokens = tuple(tokenize(text))
        seg = segmenter if segmenter is not None else Segmenter()
        return cls(
            raw_text=text,
            language=language or "und",
            tokens=tokens,
            extracted_codes=tuple(extract_codes(text)),
            semantic_units=tuple(seg.segment_tokens(tokens)),
        )

    @property
    def text(self) -> str:
        """Normalized query text."""
        return " ".join(self.tokens)


# -- code matching -----------------------------------------------------------------


def code_match(source: QueryTerm, target: Concept) -> MatchScore:
    """Standardized-code matching.

    1.0 when a code in the query names the concept, 0.8 when the query
    is the concept's standard name, otherwise the summed authority weight
    of aliases equal to the query (capped at 1).
    """
    codes = target.codes
    for code in source.extracted_codes:
        if code in codes:
            return MatchScore(1.0, Method.CODE, (f"code:{code}",))
    text = source.text
    if text and text == normalize_text(target.standard_name):
        return MatchScore(0.8, Method.CODE, ("standard_name",))
    total = 0.0
    evidence = []
    for alias in target.aliases:
        if text and text == normalize_text(alias.text):
            total += alias.authority_weight
            evidence.append(f"alias:{alias.text}")
    return MatchScore(min(1.0, total), Method.CODE, tuple(evidence))


# -- compound term matching ----------------------------------------------------------


def _bigrams(s: str) -> Counter:
    return Counter(s[i:i + 2] for i in range(len(s) - 1))


def _dice(a: Counter, b: Counter) -> float:
    total = sum(a.values()) + sum(b.values())
    if total == 0:
        return 0.0
    return 2.0 * sum((a & b).values()) / total


def unit_similarity(a, b) -> float:
    """1.0 on equality, else Dice over character-bigram multisets."""
    ta = normalize_text(a.text if isinstance(a, SemanticUnit) else a)
    tb = normalize_text(b.text if isinstance(b, SemanticUnit) else b)
    if ta == tb:
        return 1.0
    if len(ta) < 2 or len(tb) < 2:
        return 0.0
    return _dice(_bigrams(ta), _bigrams(tb))


def term_match(
    source_units: Sequence[SemanticUnit],
    target_units: Sequence[SemanticUnit],
    unit_sim: Callable[[SemanticUnit, SemanticUnit], float] = unit_similarity,
) -> MatchScore:
    """Weighted all-pairs unit agreement, normalized by the weight mass."""
    if not source_units or not target_units:
        raise ValueError("unsegmentable term")
    num = 0.0
    for s in source_units:
        for t in target_units:
            num += unit_sim(s, t) * s.weight * t.weight
    den = sum(s.weight for s in source_units) * sum(t.weight for t in target_units)
    return MatchScore(num / den, Method.TERM)


def concept_term_match(source: QueryTerm, target: Concept, segmenter: Segmenter) -> MatchScore:
    """Best :func:`term_match` of the query against any concept name."""
    if not source.semantic_units:
        return MatchScore(0.0, Method.TERM)
    best, best_name = 0.0, None
    for name in target.names:
        units = segmenter.segment(name)
        if not units:
            continue
        value = term_match(source.semantic_units, units).value
        if value > best:
            best, best_name = value, name
    return MatchScore(best, Method.TERM, (f"name:{best_name}",) if best_name else ())


# -- variant matching --------------------------------------------------------------


def _is_subsequence(short: str, long: str) -> bool:
    it = iter(long)
    return all(ch in it for ch in short)


def abbr_similarity(a: str, b: str) -> float:
    """Abbreviation agreement between a short form and a multi-token long form.

    The side with fewer tokens (then fewer characters) is the short form.
    1.0 when it spells the long form's initials, 0.8 when it is a proper
    subsequence of them of at least two letters.
    """
    ta, tb = tokenize(a), tokenize(b)
    sa, sb = "".join(ta).upper(), "".join(tb).upper()
    if (len(ta), len(sa), sa) <= (len(tb), len(sb), sb):
        short, long_tokens = sa, tb
    else:
        short, long_tokens = sb, ta
    if len(long_tokens) < 2 or len(short) < 2:
        return 0.0
    initials = "".join(t[0] for t in long_tokens).upper()
    if short == initials:
        return 1.0
    if _is_subsequence(short, initials):
        return 0.8
    return 0.0


def partial_similarity(a: str, b: str) -> float:
    """Shared distinct tokens over the token count of the smaller side."""
    sa, sb = set(tokenize(a)), set(tokenize(b))
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / min(len(sa), len(sb))


def _trigrams(s: str) -> Counter:
    padded = f" {s} "
    return Counter(padded[i:i + 3] for i in range(len(padded) - 2))


def semantic_similarity(a: str, b: str) -> float:
    """Cosine of character-trigram count vectors (space-padded)."""
    na, nb = normalize_text(a), normalize_text(b)
    if na == nb:
        return 1.0
    va, vb = _trigrams(na), _trigrams(nb)
    dot = sum(v * vb[k] for k, v in va.items() if k in vb)
    if dot == 0:
        return 0.0
    norm = math.sqrt(sum(v * v for v in va.values())) * math.sqrt(sum(v * v for v in vb.values()))
    return _clamp(dot / norm)


def variant_match(source: QueryTerm, target: Concept, semantic: Similarity = semantic_similarity) -> MatchScore:
    """Max of abbreviation, partial and semantic similarity over all names."""
    text = source.text
    best = 0.0
    evidence: Tuple[str, ...] = ()
    for name in target.names:
        for label, fn in (("abbr", abbr_similarity), ("part", partial_similarity), ("sem", semantic)):
            value = fn(text, name)
            if value > best:
                best = value
                evidence = (f"{label}:{name}",)
    return MatchScore(best, Method.VARIANT, evidence)


# -- multilingual matching ---------------------------------------------------------

_VOWELS = frozenset("aeiouy")


@lru_cache(maxsize=64)
def _grapheme_pattern(table: Tuple[Tuple[str, str], ...]):
    # alternation tries graphemes longest first, matching the table order
    ordered = sorted(table, key=lambda p: -len(p[0]))
    mapping = dict(ordered)
    pattern = re.compile("|".join(re.escape(g) for g, _ in ordered)) if ordered else None
    return pattern, mapping


def phonetic_key(text: str, table: Optional[Sequence[Tuple[str, str]]] = None) -> str:
    """Romanize and fold ``text`` to a consonant skeleton.

    Each word keeps its first letter; later vowels are dropped and
    repeated letters collapse.
    """
    table = load_phonetic_table() if table is None else tuple(map(tuple, table))
    return _phonetic_key(text, table)


@lru_cache(maxsize=65536)
def _phonetic_key(text: str, table: Tuple[Tuple[str, str], ...]) -> str:
    norm = unicodedata.normalize("NFKD", normalize_text(text))
    norm = "".join(ch for ch in norm if not unicodedata.combining(ch))
    pattern, mapping = _grapheme_pattern(table)
    out = [pattern.sub(lambda m: mapping[m.group(0)], norm) if pattern else norm]
    romanized = "".join(out)
    words = []
    for word in romanized.split():
        word = "".join(ch for ch in word if "a" <= ch <= "z" or "0" <= ch <= "9")
        if not word:
            continue
        kept = [word[0]]
        for ch in word[1:]:
            if ch in _VOWELS:
                continue
            if ch != kept[-1]:
                kept.append(ch)
        words.append("".join(kept))
    return " ".join(words)


def translit_similarity(a: str, b: str, table: Optional[Sequence[Tuple[str, str]]] = None) -> float:
    """Dice over bigrams of the two phonetic keys."""
    ka, kb = phonetic_key(a, table), phonetic_key(b, table)
    if ka == kb:
        return 1.0
    if len(ka) < 2 or len(kb) < 2:
        return 0.0
    return _dice(_bigrams(ka), _bigrams(kb))


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def char_similarity(a: str, b: str) -> float:
    """1 - Levenshtein distance / longer length, on normalized text."""
    na, nb = normalize_text(a), normalize_text(b)
    longest = max(len(na), len(nb))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(na, nb) / longest


def _normalize_weights(weights: Sequence[float]) -> Tuple[float, float, float]:
    if len(weights) != 3 or any(w < 0 for w in weights) or sum(weights) <= 0:
        raise ValueError("combine weights must be three non-negative numbers with positive sum")
    total = float(sum(weights))
    return tuple(w / total for w in weights)  # type: ignore[return-value]


def combine_similarities(
    trans: float, char: float, emb: float, weights: Sequence[float] = DEFAULT_COMBINE_WEIGHTS
) -> float:
    wt, wc, we = _normalize_weights(weights)
    return _clamp(wt * trans + wc * char + we * emb)


def multilingual_match(
    source: QueryTerm,
    target: Concept,
    weights: Sequence[float] = DEFAULT_COMBINE_WEIGHTS,
    embedding: Similarity = semantic_similarity,
    table: Optional[Sequence[Tuple[str, str]]] = None,
) -> MatchScore:
    """Convex combination of transliteration, character and embedding similarity.

    Evaluated against each concept name; the best-scoring name is kept.
    """
    _normalize_weights(weights)
    text = source.text
    best = 0.0
    evidence: Tuple[str, ...] = ()
    for name in target.names:
        trans = translit_similarity(text, name, table)
        char = char_similarity(text, name)
        emb = embedding(text, name)
        value = combine_similarities(trans, char, emb, weights)
        if value > best:
            best = value
            evidence = (f"name:{name}", f"trans={trans:.4f}", f"char={char:.4f}", f"emb={emb:.4f}")
    return MatchScore(best, Method.MULTILINGUAL, evidence)
