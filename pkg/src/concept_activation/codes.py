"""Standardized concept identifiers and their extraction from free text."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

__all__ = ["Namespace", "ConceptID", "extract_codes"]


class Namespace(str, Enum):
    ORPHA = "ORPHA"
    ICD10 = "ICD10"
    ICD11 = "ICD11"
    OMIM = "OMIM"
    HPO = "HPO"
    GENE = "GENE"
    LOCAL = "LOCAL"


_SYNTAX = {
    Namespace.ORPHA: re.compile(r"\d+"),
    Namespace.OMIM: re.compile(r"\d{6}"),
    Namespace.ICD10: re.compile(r"[A-Z]\d{2}(?:\.[0-9A-Z]{1,4})?"),
    Namespace.ICD11: re.compile(r"[0-9A-Z]{4}(?:\.[0-9A-Z]{1,4})?"),
    Namespace.HPO: re.compile(r"HP:\d{7}"),
    Namespace.GENE: re.compile(r"[A-Z0-9]+(?:-[A-Z0-9]+)*"),
    Namespace.LOCAL: re.compile(r"\S+"),
}

_NAMESPACE_ALIASES = {
    "ORPHA": Namespace.ORPHA,
    "ORPHANET": Namespace.ORPHA,
    "OMIM": Namespace.OMIM,
    "MIM": Namespace.OMIM,
    "ICD10": Namespace.ICD10,
    "ICD-10": Namespace.ICD10,
    "ICD11": Namespace.ICD11,
    "ICD-11": Namespace.ICD11,
    "HPO": Namespace.HPO,
    "GENE": Namespace.GENE,
    "LOCAL": Namespace.LOCAL,
}


@dataclass(frozen=True)
class ConceptID:
    """A namespaced code such as ``ORPHA:558`` or ``HP:0001250``.

    The code is trimmed and uppercased on construction, so equality and
    hashing are case-insensitive. Instances order by their string form.
    """

    namespace: Namespace
    code: str

    def __post_init__(self):
        ns = Namespace(self.namespace)
        code = str(self.code).strip().upper()
        if not code:
            raise ValueError(f"{ns.value}: empty code")
        if not _SYNTAX[ns].fullmatch(code):
            raise ValueError(f"{ns.value}: invalid code syntax {code!r}")
        object.__setattr__(self, "namespace", ns)
        object.__setattr__(self, "code", code)

    @classmethod
    def parse(cls, text: str, default: Namespace = None) -> "ConceptID":
        """Parse ``NS:code``; HPO ids are written bare (``HP:0001250``).

        ``default`` is used when ``text`` carries no namespace prefix.
        """
        if isinstance(text, ConceptID):
            return text
        raw = str(text).strip()
        upper = raw.upper()
        if upper.startswith("HP:"):
            return cls(Namespace.HPO, upper)
        head, sep, tail = raw.partition(":")
        if sep and head.strip().upper() in _NAMESPACE_ALIASES:
            ns = _NAMESPACE_ALIASES[head.strip().upper()]
            tail = tail.strip()
            if ns is Namespace.HPO and not tail.upper().startswith("HP:"):
                tail = "HP:" + tail
            return cls(ns, tail)
        if default is not None:
            return cls(default, raw)
        raise ValueError(f"cannot parse concept id {raw!r}: missing namespace prefix")

    def __str__(self) -> str:
        if self.namespace is Namespace.HPO:
            return self.code
        return f"{self.namespace.value}:{self.code}"

    def __repr__(self) -> str:
        return f"ConceptID({str(self)!r})"

    def __lt__(self, other: "ConceptID") -> bool:
        if not isinstance(other, ConceptID):
            return NotImplemented
        return str(self) < str(other)


# (priority, namespace, pattern); lower priority wins on overlapping spans
_EXTRACTORS: List[Tuple[int, Namespace, "re.Pattern[str]"]] = [
    (0, Namespace.ORPHA, re.compile(r"\bORPHA(?:NET)?\s*[:#]?\s*(\d+)\b", re.IGNORECASE)),
    (0, Namespace.HPO, re.compile(r"\bHP\s*:?\s*(\d{7})\b", re.IGNORECASE)),
    (0, Namespace.OMIM, re.compile(r"\b(?:OMIM|MIM)\s*[:#]?\s*#?\s*(\d{6})\b", re.IGNORECASE)),
    (0, Namespace.ICD11, re.compile(r"\bICD-?11\s*[:#]?\s*([0-9A-Za-z]{4}(?:\.[0-9A-Za-z]{1,4})?)\b", re.IGNORECASE)),
    (0, Namespace.GENE, re.compile(r"\bGENE\s*:\s*([A-Za-z0-9]+(?:-[A-Za-z0-9]+)*)", re.IGNORECASE)),
    (1, Namespace.GENE, re.compile(r"\b([A-Z][A-Z0-9]{1,9}(?:-[A-Z0-9]+)?)\s+(?i:gene)\b")),
    (1, Namespace.GENE, re.compile(r"\b(?i:gene)\s+([A-Z][A-Z0-9]{1,9}(?:-[A-Z0-9]+)?)\b")),
    (2, Namespace.ICD10, re.compile(r"(?:\b(?i:ICD-?10)\s*[:#]?\s*)?\b([A-Z]\d{2}(?:\.[0-9A-Z]{1,4})?)\b")),
]


def extract_codes(text: str) -> List[ConceptID]:
    """Find standardized identifiers in ``text``, in order of appearance.

    Recognized forms: ``ORPHA:n``, ``HP:nnnnnnn``, six digits after an
    ``OMIM``/``MIM`` cue, ICD-10 codes (``E75.2``), ICD-11 codes after an
    ``ICD-11`` cue, and gene symbols written as ``GENE:SYM``, ``SYM gene``
    or ``gene SYM``. Duplicates are dropped.
    """
    found = []
    for priority, ns, pattern in _EXTRACTORS:
        for m in pattern.finditer(text):
            found.append((m.start(), priority, m.end(), ns, m.group(1)))
    found.sort(key=lambda f: (f[0], f[1]))

    taken: List[Tuple[int, int]] = []
    out: List[ConceptID] = []
    seen = set()
    for start, _, end, ns, code in found:
        if any(start < e and s < end for s, e in taken):
            continue
        if ns is Namespace.HPO:
            code = "HP:" + code
        try:
            cid = ConceptID(ns, code)
        except ValueError:
            continue
        taken.append((start, end))
        if cid not in seen:
            seen.add(cid)
            out.append(cid)
    return out
