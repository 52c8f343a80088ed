"""Corpus evaluation: concept-level precision, recall, accuracy and Top-N recall."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence

from .codes import ConceptID
from .diversity import SessionHistory

__all__ = ["CorpusCase", "MetricsReport", "load_corpus", "evaluate", "report_render", "UNCATEGORIZED"]

UNCATEGORIZED = "uncategorized"


@dataclass(frozen=True)
class CorpusCase:
    case_id: str
    question: str
    gold_concepts: FrozenSet[ConceptID]
    category: Optional[str] = None
    language: str = "und"

    def __post_init__(self):
        if not self.gold_concepts:
            raise ValueError(f"case {self.case_id}: gold_concepts must be nonempty")


def load_corpus(path) -> List[CorpusCase]:
    """Read JSON Lines with ``case_id``, ``question``, ``gold`` and optional ``category``/``language``."""
    cases = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                gold = rec["gold"]
                if isinstance(gold, str):
                    gold = [gold]
                cases.append(CorpusCase(
                    case_id=str(rec["case_id"]),
                    question=str(rec["question"]),
                    gold_concepts=frozenset(ConceptID.parse(g) for g in gold),
                    category=rec.get("category"),
                    language=rec.get("language", "und"),
                ))
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: malformed JSON: {exc.msg}") from None
            except KeyError as exc:
                raise ValueError(f"line {lineno}: missing field {exc.args[0]!r}") from None
            except (TypeError, ValueError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
    return cases


@dataclass
class MetricsReport:
    precision: float
    recall: float
    accuracy: float
    top_n_recall: Dict[int, float]
    case_count: int
    per_category: Dict[str, "MetricsReport"] = field(default_factory=dict)
    skipped: List[str] = field(default_factory=list)
    averaging: str = "micro"

    def to_dict(self) -> dict:
        out = {
            "case_count": self.case_count,
            "precision": self.precision,
            "recall": self.recall,
            "accuracy": self.accuracy,
            "top_n_recall": {str(n): v for n, v in sorted(self.top_n_recall.items())},
        }
        if self.per_category:
            out["per_category"] = {k: v.to_dict() for k, v in sorted(self.per_category.items())}
        if self.skipped:
            out["skipped"] = sorted(self.skipped)
        out["averaging"] = self.averaging
        return out


@dataclass(frozen=True)
class _CaseOutcome:
    category: str
    ranked: tuple
    gold: FrozenSet[ConceptID]


def _metrics(outcomes: Sequence[_CaseOutcome], ns: Sequence[int], average: str) -> MetricsReport:
    n = len(outcomes)
    hits = [len(set(o.ranked) & o.gold) for o in outcomes]
    if average == "micro":
        predicted = sum(len(o.ranked) for o in outcomes)
        gold = sum(len(o.gold) for o in outcomes)
        precision = sum(hits) / predicted if predicted else 0.0
        recall = sum(hits) / gold if gold else 0.0
    else:
        precision = sum(h / len(o.ranked) if o.ranked else 0.0 for h, o in zip(hits, outcomes)) / n
        recall = sum(h / len(o.gold) for h, o in zip(hits, outcomes)) / n
    accuracy = sum(1 for o in outcomes if o.ranked and o.ranked[0] in o.gold) / n
    top_n = {
        k: sum(1 for o in outcomes if set(o.ranked[:k]) & o.gold) / n for k in sorted(set(ns))
    }
    return MetricsReport(precision, recall, accuracy, top_n, n, averaging=average)


def evaluate(
    corpus: Sequence[CorpusCase],
    engine,
    ns: Sequence[int] = (3, 10),
    average: str = "micro",
) -> MetricsReport:
    """Run every case through ``engine`` in its own session and score the rankings.

    ``engine`` needs ``activate(question, language, session)`` returning an
    object with ranked ``entries`` (each having ``.concept``). When it also
    exposes ``graph``, cases whose gold ids are not in the graph are skipped
    with a warning.
    """
    if not corpus:
        raise ValueError("empty corpus")
    if any(int(k) < 1 for k in ns):
        raise ValueError("every N must be >= 1")
    if average not in ("micro", "macro"):
        raise ValueError("average must be 'micro' or 'macro'")
    graph = getattr(engine, "graph", None)
    new_session = getattr(engine, "new_session", None)

    outcomes: List[_CaseOutcome] = []
    skipped: List[str] = []
    for case in corpus:
        if graph is not None:
            unknown = sorted(str(g) for g in case.gold_concepts if g not in graph)
            if unknown:
                warnings.warn(f"case {case.case_id}: unknown gold concept(s) {', '.join(unknown)}; skipped")
                skipped.append(case.case_id)
                continue
        session = new_session() if new_session is not None else SessionHistory()
        result = engine.activate(case.question, case.language, session)
        ranked = tuple(e.concept for e in result.entries)
        outcomes.append(_CaseOutcome(case.category or UNCATEGORIZED, ranked, case.gold_concepts))

    if not outcomes:
        raise ValueError("no evaluable cases: every case was skipped")
    report = _metrics(outcomes, [int(k) for k in ns], average)
    by_cat: Dict[str, List[_CaseOutcome]] = {}
    for o in outcomes:
        by_cat.setdefault(o.category, []).append(o)
    report.per_category = {c: _metrics(v, [int(k) for k in ns], average) for c, v in sorted(by_cat.items())}
    report.skipped = skipped
    return report


def report_render(report: MetricsReport, format: str = "table") -> str:
    if format == "machine":
        return json.dumps(report.to_dict(), indent=2, sort_keys=False)
    if format != "table":
        raise ValueError(f"unknown format {format!r}")
    ns = sorted(report.top_n_recall)
    header = ["scope", "cases", "precision", "recall", "accuracy"] + [f"top-{n}" for n in ns]
    rows = [_row("overall", report, ns)]
    rows += [_row(cat, sub, ns) for cat, sub in sorted(report.per_category.items())]
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(header, widths)))]
    for r in rows:
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
    if report.skipped:
        lines.append(f"skipped: {', '.join(sorted(report.skipped))}")
    return "\n".join(lines)


def _row(name: str, r: MetricsReport, ns: Sequence[int]) -> List[str]:
    return [name, str(r.case_count), f"{r.precision:.4f}", f"{r.recall:.4f}", f"{r.accuracy:.4f}"] + [
        f"{r.top_n_recall[n]:.4f}" for n in ns
    ]
