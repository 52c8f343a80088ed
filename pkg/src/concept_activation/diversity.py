"""Session history, repeat-activation penalty and the diversity metric."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet, Iterable, Set

from .codes import ConceptID

__all__ = ["SessionHistory", "DiversityReport", "adjust_score", "diversity", "DEFAULT_LAMBDA"]

DEFAULT_LAMBDA = 0.7


def _check_lambda(value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"lambda_rd must lie in [0, 1], got {value}")
    return value


@dataclass
class SessionHistory:
    """Concepts activated earlier in a session, plus the repeat penalty."""

    used_concepts: Set[ConceptID] = field(default_factory=set)
    lambda_rd: float = DEFAULT_LAMBDA
    session_id: str = "default"

    def __post_init__(self):
        self.lambda_rd = _check_lambda(self.lambda_rd)
        self.used_concepts = set(self.used_concepts)

    def __contains__(self, cid: ConceptID) -> bool:
        return cid in self.used_concepts

    def record(self, activated: Iterable[ConceptID]) -> "SessionHistory":
        self.used_concepts |= set(activated)
        return self

    def copy(self) -> "SessionHistory":
        return SessionHistory(set(self.used_concepts), self.lambda_rd, self.session_id)

    def to_dict(self) -> dict:
        return {
            "session": self.session_id,
            "lambda_rd": self.lambda_rd,
            "used": [str(c) for c in sorted(self.used_concepts)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionHistory":
        return cls(
            used_concepts={ConceptID.parse(c) for c in data.get("used", [])},
            lambda_rd=data.get("lambda_rd", DEFAULT_LAMBDA),
            session_id=str(data.get("session", "default")),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path, lambda_rd: float = None) -> "SessionHistory":
        """Read a session file; a missing file starts an empty session."""
        path = Path(path)
        if not path.exists():
            hist = cls(session_id=path.stem)
        else:
            hist = cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
        if lambda_rd is not None:
            hist.lambda_rd = _check_lambda(lambda_rd)
        return hist


@dataclass(frozen=True)
class DiversityReport:
    score: float
    active: FrozenSet[ConceptID]
    overlap: FrozenSet[ConceptID]

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "active": [str(c) for c in sorted(self.active)],
            "overlap": [str(c) for c in sorted(self.overlap)],
        }


def adjust_score(score: float, concept: ConceptID, history: SessionHistory) -> float:
    """Scale ``score`` by ``lambda_rd`` if ``concept`` was used before."""
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score {score} outside [0, 1]")
    if concept in history.used_concepts:
        return history.lambda_rd * score
    return score


def diversity(active: Iterable[ConceptID], history: SessionHistory) -> DiversityReport:
    """One minus the fraction of ``active`` concepts already used."""
    active = frozenset(active)
    if not active:
        raise ValueError("diversity undefined on empty activation")
    overlap = active & frozenset(history.used_concepts)
    return DiversityReport(1.0 - len(overlap) / len(active), active, overlap)
