"""Text normalization and bundled lexical resources."""

from __future__ import annotations

import json
import re
import unicodedata
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

__all__ = [
    "normalize_text",
    "tokenize",
    "load_stopwords",
    "load_term_file",
    "load_phonetic_table",
    "load_organ_systems",
    "load_phenotype_lexicon",
    "split_clauses",
]


def _is_punct(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat[0] in ("P", "S")


@lru_cache(maxsize=65536)
def normalize_text(text: str) -> str:
    """NFKC-fold, lowercase and strip punctuation.

    Hyphens survive only between two alphanumeric characters
    (``x-linked`` stays one token, ``- foo`` does not). Every other
    punctuation or symbol character becomes whitespace. Runs of
    whitespace collapse to a single space.
    """
    text = unicodedata.normalize("NFKC", text).lower()
    out = []
    n = len(text)
    for i, ch in enumerate(text):
        if ch == "-":
            if 0 < i < n - 1 and text[i - 1].isalnum() and text[i + 1].isalnum():
                out.append(ch)
            else:
                out.append(" ")
        elif _is_punct(ch):
            out.append(" ")
        else:
            out.append(ch)
    return " ".join("".join(out).split())


def tokenize(text: str) -> List[str]:
    return normalize_text(text).split()


def _data_path(name: str):
    return resources.files("concept_activation").joinpath("data").joinpath(name)


def _read_lines(path) -> List[str]:
    if isinstance(path, (str, Path)):
        raw = Path(path).read_text(encoding="utf-8")
    else:
        raw = path.read_text(encoding="utf-8")
    return raw.splitlines()


def load_term_file(path) -> List[str]:
    """One term per line; blank lines and ``#`` comments are skipped."""
    terms = []
    for line in _read_lines(path):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        terms.append(line)
    return terms


@lru_cache(maxsize=8)
def _stopwords_cached(path: Optional[str]) -> FrozenSet[str]:
    src = path if path is not None else _data_path("stopwords.txt")
    return frozenset(normalize_text(t) for t in load_term_file(src))


def load_stopwords(path: Optional[str] = None) -> FrozenSet[str]:
    return _stopwords_cached(str(path) if path is not None else None)


@lru_cache(maxsize=8)
def _phonetic_cached(path: Optional[str]) -> Tuple[Tuple[str, str], ...]:
    src = path if path is not None else _data_path("phonetic.tsv")
    pairs = []
    for lineno, line in enumerate(_read_lines(src), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"phonetic table line {lineno}: expected 'grapheme<TAB>key'")
        grapheme, key = parts[0], parts[1].strip()
        if key == "_":
            key = ""
        if not grapheme:
            raise ValueError(f"phonetic table line {lineno}: empty grapheme")
        pairs.append((grapheme, key))
    # longest grapheme first so digraphs win over their letters
    pairs.sort(key=lambda p: (-len(p[0]), p[0]))
    return tuple(pairs)


def load_phonetic_table(path: Optional[str] = None) -> Tuple[Tuple[str, str], ...]:
    """Grapheme -> phonetic key pairs, longest grapheme first."""
    return _phonetic_cached(str(path) if path is not None else None)


@lru_cache(maxsize=8)
def _organ_cached(path: Optional[str]) -> Tuple[Tuple[str, Tuple[Tuple[str, ...], ...]], ...]:
    if path is None:
        raw = _data_path("organ_systems.json").read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    table = json.loads(raw)
    if not isinstance(table, dict):
        raise ValueError("organ system table must map category -> keyword list")
    out = []
    for category in sorted(table):
        keywords = table[category]
        if not isinstance(keywords, list):
            raise ValueError(f"organ system {category!r}: keywords must be a list")
        out.append((category, tuple(sorted({tuple(tokenize(k)) for k in keywords if tokenize(k)}))))
    return tuple(out)


def load_organ_systems(path: Optional[str] = None):
    """Category -> tuple of keyword token sequences, categories sorted."""
    return _organ_cached(str(path) if path is not None else None)


@lru_cache(maxsize=8)
def _phenotype_cached(path: Optional[str]) -> Tuple[Tuple[Tuple[str, ...], str], ...]:
    src = path if path is not None else _data_path("phenotypes.tsv")
    out: Dict[Tuple[str, ...], str] = {}
    for lineno, line in enumerate(_read_lines(src), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"phenotype lexicon line {lineno}: expected 'label<TAB>HP:nnnnnnn'")
        label = tuple(tokenize(parts[0]))
        if label:
            out[label] = parts[1].strip()
    return tuple(sorted(out.items()))


def load_phenotype_lexicon(path: Optional[str] = None) -> Dict[Tuple[str, ...], str]:
    """Normalized label tokens -> HPO code string."""
    return dict(_phenotype_cached(str(path) if path is not None else None))


_CLAUSE_BREAK = re.compile(r"[.;!?,:]+(?=\s|$)|\n")


def split_clauses(text: str, conjunctions: Sequence[str]) -> List[List[str]]:
    """Split raw text on sentence punctuation and conjunction words."""
    text = unicodedata.normalize("NFKC", text).replace("|", " ")
    # only punctuation followed by whitespace ends a clause (keeps E75.2, HP:0001250 intact)
    text = _CLAUSE_BREAK.sub(" | ", text)
    clauses: List[List[str]] = []
    current: List[str] = []
    conj = set(conjunctions)
    for tok in _split_keep_bars(text):
        if tok == "|" or tok in conj:
            if current:
                clauses.append(current)
            current = []
        else:
            current.append(tok)
    if current:
        clauses.append(current)
    return clauses


def _split_keep_bars(text: str) -> List[str]:
    out: List[str] = []
    for chunk in text.split("|"):
        out.extend(tokenize(chunk))
        out.append("|")
    return out[:-1]
