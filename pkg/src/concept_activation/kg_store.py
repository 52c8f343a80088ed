"""Three-layer rare-disease knowledge graph: records, validation, indexes.

The on-disk format is JSON Lines. Each line is one object with a
``layer`` discriminator::

    {"layer": "concept", "id": "ORPHA:324", "name": "Fabry disease",
     "cross_refs": ["OMIM:301500", "ICD10:E75.2"],
     "aliases": [{"text": "Anderson-Fabry disease", "language": "en",
                  "weight": 0.9, "source": "orphanet"}]}
    {"layer": "taxonomy", "id": "T1", "label": "Lysosomal diseases",
     "parent": null, "family": "lysosomal", "members": ["ORPHA:324"]}
    {"layer": "clinical", "id": "CP1", "concept": "ORPHA:324",
     "phenotypes": ["HP:0001014"], "features": [{"text": "...", "weight": 0.8}],
     "criteria": ["..."]}
    {"layer": "instance", "id": "I1", "concept": "ORPHA:324",
     "case_text": "...", "subtype": null, "pathway": ["..."], "genes": ["GLA"]}

Records may appear in any order; references are resolved after all
lines are read.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .codes import ConceptID, Namespace, extract_codes
from .text import normalize_text

logger = logging.getLogger(__name__)

__all__ = [
    "GraphError",
    "Alias",
    "Concept",
    "TaxonomyNode",
    "ClinicalProfile",
    "InstanceRecord",
    "KnowledgeGraph",
    "load_graph",
    "dump_graph",
    "DEFAULT_CANDIDATE_CAP",
]

DEFAULT_CANDIDATE_CAP = 200


class GraphError(ValueError):
    """Structural or validation error in a knowledge graph file."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if field is not None:
            prefix.append(f"field '{field}'")
        super().__init__(f"{', '.join(prefix)}: {message}" if prefix else message)


@dataclass(frozen=True)
class Alias:
    text: str
    language: str = "und"
    authority_weight: float = 1.0
    source: str = ""


@dataclass(frozen=True)
class Concept:
    primary_id: ConceptID
    standard_name: str
    cross_refs: FrozenSet[ConceptID] = frozenset()
    aliases: Tuple[Alias, ...] = ()
    taxonomy_node: Optional[str] = None
    clinical_profile: Optional[str] = None
    instance_records: Tuple[str, ...] = ()

    @property
    def codes(self) -> FrozenSet[ConceptID]:
        return self.cross_refs | {self.primary_id}

    @property
    def names(self) -> Tuple[str, ...]:
        """Standard name followed by alias texts."""
        return (self.standard_name,) + tuple(a.text for a in self.aliases)


@dataclass(frozen=True)
class TaxonomyNode:
    node_id: str
    label: str
    parent: Optional[str]
    family_id: str
    member_concepts: FrozenSet[ConceptID] = frozenset()


@dataclass(frozen=True)
class ClinicalProfile:
    profile_id: str
    concept: ConceptID
    phenotypes: FrozenSet[ConceptID] = frozenset()
    features: Tuple[Tuple[str, float], ...] = ()
    diagnostic_criteria: Tuple[str, ...] = ()

    @property
    def total_feature_weight(self) -> float:
        return sum(w for _, w in self.features)


@dataclass(frozen=True)
class InstanceRecord:
    record_id: str
    concept: ConceptID
    case_text: str = ""
    subtype: Optional[str] = None
    diagnostic_pathway: Tuple[str, ...] = ()
    gene_links: FrozenSet[ConceptID] = frozenset()


class KnowledgeGraph:
    """Immutable-after-construction graph with code, name and token indexes.

    Build with :meth:`from_records` or :func:`load_graph`. Concepts iterate
    in ascending primary-id order.
    """

    def __init__(
        self,
        concepts: Mapping[ConceptID, Concept],
        taxonomy: Mapping[str, TaxonomyNode],
        clinical: Mapping[str, ClinicalProfile],
        instances: Mapping[str, InstanceRecord],
    ):
        if not concepts:
            raise GraphError("empty graph")
        self.concepts: Dict[ConceptID, Concept] = {k: concepts[k] for k in sorted(concepts)}
        self.taxonomy: Dict[str, TaxonomyNode] = {k: taxonomy[k] for k in sorted(taxonomy)}
        self.clinical: Dict[str, ClinicalProfile] = {k: clinical[k] for k in sorted(clinical)}
        self.instances: Dict[str, InstanceRecord] = {k: instances[k] for k in sorted(instances)}
        self._build_indexes()

    # -- construction ---------------------------------------------------

    def _build_indexes(self) -> None:
        code_owners: Dict[ConceptID, List[ConceptID]] = defaultdict(list)
        for cid in self.concepts:
            code_owners[cid].append(cid)
        for cid, concept in self.concepts.items():
            for ref in sorted(concept.cross_refs):
                code_owners[ref].append(cid)
        self.code_index: Dict[ConceptID, Tuple[ConceptID, ...]] = {
            k: tuple(v) for k, v in sorted(code_owners.items())
        }

        name_index: Dict[str, Set[ConceptID]] = defaultdict(set)
        token_index: Dict[str, Set[ConceptID]] = defaultdict(set)
        lexicon: Set[Tuple[str, ...]] = set()
        for cid, concept in self.concepts.items():
            for name in concept.names:
                norm = normalize_text(name)
                if not norm:
                    continue
                name_index[norm].add(cid)
                toks = tuple(norm.split())
                lexicon.add(toks)
                for tok in toks:
                    token_index[tok].add(cid)
        self.name_index: Dict[str, FrozenSet[ConceptID]] = {
            k: frozenset(v) for k, v in sorted(name_index.items())
        }
        self.token_index: Dict[str, FrozenSet[ConceptID]] = {
            k: frozenset(v) for k, v in sorted(token_index.items())
        }
        self.lexicon: FrozenSet[Tuple[str, ...]] = frozenset(lexicon)

        self._family_members: Dict[str, Set[ConceptID]] = defaultdict(set)
        for node in self.taxonomy.values():
            self._family_members[node.family_id] |= node.member_concepts

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "KnowledgeGraph":
        """Validate and link raw layer records (dicts as found on disk)."""
        return _GraphBuilder().build(enumerate(records, start=1))

    def to_records(self) -> List[dict]:
        """Serialize back to layer records, in file order."""
        out: List[dict] = []
        for c in self.concepts.values():
            out.append({
                "layer": "concept",
                "id": str(c.primary_id),
                "name": c.standard_name,
                "cross_refs": [str(x) for x in sorted(c.cross_refs)],
                "aliases": [
                    {"text": a.text, "language": a.language, "weight": a.authority_weight, "source": a.source}
                    for a in c.aliases
                ],
            })
        for n in self.taxonomy.values():
            out.append({
                "layer": "taxonomy", "id": n.node_id, "label": n.label, "parent": n.parent,
                "family": n.family_id, "members": [str(x) for x in sorted(n.member_concepts)],
            })
        for p in self.clinical.values():
            out.append({
                "layer": "clinical", "id": p.profile_id, "concept": str(p.concept),
                "phenotypes": [str(x) for x in sorted(p.phenotypes)],
                "features": [{"text": t, "weight": w} for t, w in p.features],
                "criteria": list(p.diagnostic_criteria),
            })
        for r in self.instances.values():
            out.append({
                "layer": "instance", "id": r.record_id, "concept": str(r.concept),
                "case_text": r.case_text, "subtype": r.subtype, "pathway": list(r.diagnostic_pathway),
                "genes": [str(x) for x in sorted(r.gene_links)],
            })
        return out

    # -- queries ----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.concepts)

    def __contains__(self, cid) -> bool:
        return cid in self.concepts

    def __getitem__(self, cid: ConceptID) -> Concept:
        return self.concepts[cid]

    @property
    def concept_count(self) -> int:
        return len(self.concepts)

    def layer_counts(self) -> Dict[str, int]:
        return {
            "concepts": len(self.concepts),
            "taxonomy": len(self.taxonomy),
            "clinical": len(self.clinical),
            "instance": len(self.instances),
        }

    def lookup_by_code(self, cid: ConceptID) -> Optional[Concept]:
        """Concept whose primary id or cross-refs contain ``cid``.

        When several concepts share a cross-reference the primary owner
        wins, then the lowest primary id.
        """
        owners = self.code_index.get(cid)
        return self.concepts[owners[0]] if owners else None

    def owners_of(self, cid: ConceptID) -> Tuple[ConceptID, ...]:
        return self.code_index.get(cid, ())

    def candidates_for_query(
        self,
        tokens: Sequence[str],
        cap: int = DEFAULT_CANDIDATE_CAP,
        codes: Iterable[ConceptID] = (),
    ) -> List[ConceptID]:
        """Pre-filter concepts that share vocabulary with the query.

        Concepts are ranked by the number of distinct query tokens they
        share, then by primary id. Concepts named by a code (from ``codes``
        or recognized inside ``tokens``) are always placed first.
        """
        if cap < 1:
            raise ValueError("cap must be >= 1")
        forced: List[ConceptID] = []
        all_codes = list(codes) + extract_codes(" ".join(tokens))
        for code in all_codes:
            for owner in self.code_index.get(code, ()):
                if owner not in forced:
                    forced.append(owner)

        counts: Counter = Counter()
        for tok in set(tokens):
            for cid in self.token_index.get(tok, ()):
                counts[cid] += 1
        ranked = sorted((c for c in counts if c not in forced), key=lambda c: (-counts[c], str(c)))
        return (forced + ranked)[:cap]

    def family_of(self, cid: ConceptID) -> Set[ConceptID]:
        """Other concepts sharing a taxonomy family with ``cid``."""
        if cid not in self.concepts:
            raise KeyError(f"unknown concept {cid}")
        node_id = self.concepts[cid].taxonomy_node
        if node_id is None:
            return set()
        family = self.taxonomy[node_id].family_id
        return set(self._family_members[family]) - {cid}

    def taxonomy_path(self, node_id: str) -> List[TaxonomyNode]:
        """Nodes from the root down to ``node_id``."""
        path = []
        cur: Optional[str] = node_id
        while cur is not None:
            node = self.taxonomy[cur]
            path.append(node)
            cur = node.parent
        return path[::-1]

    def roots(self) -> List[TaxonomyNode]:
        return [n for n in self.taxonomy.values() if n.parent is None]

    def subtree_members(self, node_id: str) -> Set[ConceptID]:
        children = defaultdict(list)
        for n in self.taxonomy.values():
            if n.parent is not None:
                children[n.parent].append(n.node_id)
        members: Set[ConceptID] = set()
        stack = [node_id]
        while stack:
            cur = stack.pop()
            members |= self.taxonomy[cur].member_concepts
            stack.extend(children[cur])
        return members

    def profile_for(self, cid: ConceptID) -> Optional[ClinicalProfile]:
        pid = self.concepts[cid].clinical_profile
        return self.clinical[pid] if pid is not None else None

    def records_for(self, cid: ConceptID) -> List[InstanceRecord]:
        return [self.instances[r] for r in self.concepts[cid].instance_records]


# -- loading ------------------------------------------------------------------

_FIELDS = {
    "concept": {"layer", "id", "name", "cross_refs", "aliases"},
    "taxonomy": {"layer", "id", "label", "parent", "family", "members"},
    "clinical": {"layer", "id", "concept", "phenotypes", "features", "criteria"},
    "instance": {"layer", "id", "concept", "case_text", "subtype", "pathway", "genes"},
}


def _req_str(rec: Mapping, key: str, line: int) -> str:
    val = rec.get(key)
    if not isinstance(val, str) or not val.strip():
        raise GraphError("expected nonempty string", line, key)
    return val.strip()


def _opt_list(rec: Mapping, key: str, line: int) -> list:
    val = rec.get(key, [])
    if val is None:
        return []
    if not isinstance(val, list):
        raise GraphError("expected a list", line, key)
    return val


def _parse_id(text, line: int, key: str, default: Namespace = None) -> ConceptID:
    try:
        return ConceptID.parse(text, default=default)
    except (ValueError, TypeError) as exc:
        raise GraphError(str(exc), line, key) from None


def _weight(val, line: int, key: str) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise GraphError("weight must be a number", line, key)
    if not 0.0 <= float(val) <= 1.0:
        raise GraphError(f"weight {val} outside [0, 1]", line, key)
    return float(val)


class _GraphBuilder:
    def __init__(self):
        self.concepts: Dict[ConceptID, Tuple[int, dict]] = {}
        self.taxonomy: Dict[str, Tuple[int, dict]] = {}
        self.clinical: Dict[str, Tuple[int, dict]] = {}
        self.instances: Dict[str, Tuple[int, dict]] = {}

    def build(self, numbered: Iterable[Tuple[int, Mapping]]) -> KnowledgeGraph:
        for line, rec in numbered:
            self._collect(line, rec)
        if not self.concepts:
            raise GraphError("empty graph")
        return self._link()

    def _collect(self, line: int, rec: Mapping) -> None:
        if not isinstance(rec, Mapping):
            raise GraphError("record must be a JSON object", line)
        layer = rec.get("layer")
        if layer not in _FIELDS:
            raise GraphError(f"unknown layer {layer!r}", line, "layer")
        unknown = sorted(set(rec) - _FIELDS[layer])
        if unknown:
            raise GraphError(f"unknown field for layer {layer}", line, unknown[0])
        getattr(self, f"_collect_{layer}")(line, rec)

    def _collect_concept(self, line: int, rec: Mapping) -> None:
        cid = _parse_id(_req_str(rec, "id", line), line, "id")
        name = _req_str(rec, "name", line)
        if cid in self.concepts:
            raise GraphError(f"duplicate primary_id {cid} (first on line {self.concepts[cid][0]})", line, "id")
        refs: List[ConceptID] = []
        for raw in _opt_list(rec, "cross_refs", line):
            ref = _parse_id(raw, line, "cross_refs")
            if ref == cid:
                raise GraphError(f"cross_refs contains primary_id {cid}", line, "cross_refs")
            if ref in refs:
                raise GraphError(f"duplicate cross_ref {ref}", line, "cross_refs")
            refs.append(ref)
        aliases: List[Alias] = []
        seen: Set[Tuple[str, str]] = set()
        for raw in _opt_list(rec, "aliases", line):
            if isinstance(raw, str):
                raw = {"text": raw}
            if not isinstance(raw, Mapping):
                raise GraphError("alias must be a string or object", line, "aliases")
            text = raw.get("text")
            if not isinstance(text, str) or not text.strip():
                raise GraphError("alias text must be a nonempty string", line, "aliases.text")
            lang = raw.get("language", "und")
            if not isinstance(lang, str) or not lang:
                raise GraphError("alias language must be a nonempty tag", line, "aliases.language")
            weight = _weight(raw.get("weight", 1.0), line, "aliases.weight")
            source = raw.get("source", "")
            key = (text.strip().casefold(), lang.lower())
            if key in seen:
                raise GraphError(f"duplicate alias {text!r} for language {lang}", line, "aliases")
            seen.add(key)
            aliases.append(Alias(text.strip(), lang, weight, str(source)))
        self.concepts[cid] = (line, {"name": name, "refs": frozenset(refs), "aliases": tuple(aliases)})

    def _collect_taxonomy(self, line: int, rec: Mapping) -> None:
        nid = _req_str(rec, "id", line)
        if nid in self.taxonomy:
            raise GraphError(f"duplicate taxonomy id {nid}", line, "id")
        label = _req_str(rec, "label", line)
        parent = rec.get("parent")
        if parent is not None and (not isinstance(parent, str) or not parent.strip()):
            raise GraphError("parent must be a node id or null", line, "parent")
        family = rec.get("family")
        if family is None:
            family = nid
        elif not isinstance(family, str) or not family.strip():
            raise GraphError("family must be a nonempty string", line, "family")
        members = frozenset(_parse_id(m, line, "members") for m in _opt_list(rec, "members", line))
        self.taxonomy[nid] = (line, {
            "label": label, "parent": parent.strip() if parent else None,
            "family": family.strip(), "members": members,
        })

    def _collect_clinical(self, line: int, rec: Mapping) -> None:
        pid = _req_str(rec, "id", line)
        if pid in self.clinical:
            raise GraphError(f"duplicate clinical profile id {pid}", line, "id")
        concept = _parse_id(_req_str(rec, "concept", line), line, "concept")
        phenotypes = []
        for raw in _opt_list(rec, "phenotypes", line):
            ph = _parse_id(raw, line, "phenotypes")
            if ph.namespace is not Namespace.HPO:
                raise GraphError(f"phenotype {ph} is not an HPO id", line, "phenotypes")
            phenotypes.append(ph)
        features = []
        for raw in _opt_list(rec, "features", line):
            if not isinstance(raw, Mapping) or not isinstance(raw.get("text"), str) or not raw["text"].strip():
                raise GraphError("feature must be an object with nonempty text", line, "features")
            features.append((raw["text"].strip(), _weight(raw.get("weight", 1.0), line, "features.weight")))
        criteria = _opt_list(rec, "criteria", line)
        if not all(isinstance(c, str) for c in criteria):
            raise GraphError("criteria must be strings", line, "criteria")
        self.clinical[pid] = (line, {
            "concept": concept, "phenotypes": frozenset(phenotypes),
            "features": tuple(features), "criteria": tuple(criteria),
        })

    def _collect_instance(self, line: int, rec: Mapping) -> None:
        rid = _req_str(rec, "id", line)
        if rid in self.instances:
            raise GraphError(f"duplicate instance id {rid}", line, "id")
        concept = _parse_id(_req_str(rec, "concept", line), line, "concept")
        case_text = rec.get("case_text", "")
        if not isinstance(case_text, str):
            raise GraphError("case_text must be a string", line, "case_text")
        subtype = rec.get("subtype")
        if subtype is not None and not isinstance(subtype, str):
            raise GraphError("subtype must be a string or null", line, "subtype")
        pathway = _opt_list(rec, "pathway", line)
        if not all(isinstance(p, str) for p in pathway):
            raise GraphError("pathway steps must be strings", line, "pathway")
        genes = []
        for raw in _opt_list(rec, "genes", line):
            g = _parse_id(raw, line, "genes", default=Namespace.GENE)
            if g.namespace is not Namespace.GENE:
                raise GraphError(f"gene link {g} is not a GENE id", line, "genes")
            genes.append(g)
        self.instances[rid] = (line, {
            "concept": concept, "case_text": case_text, "subtype": subtype,
            "pathway": tuple(pathway), "genes": frozenset(genes),
        })

    def _link(self) -> KnowledgeGraph:
        taxonomy: Dict[str, TaxonomyNode] = {}
        node_of: Dict[ConceptID, str] = {}
        for nid, (line, rec) in self.taxonomy.items():
            parent = rec["parent"]
            if parent is not None and parent not in self.taxonomy:
                raise GraphError(f"dangling reference: taxonomy node {nid} -> parent {parent}", line, "parent")
            for m in sorted(rec["members"]):
                if m not in self.concepts:
                    raise GraphError(f"dangling reference: taxonomy node {nid} -> concept {m}", line, "members")
                if m in node_of:
                    raise GraphError(
                        f"concept {m} is a member of both taxonomy nodes {node_of[m]} and {nid}", line, "members"
                    )
                node_of[m] = nid
            taxonomy[nid] = TaxonomyNode(nid, rec["label"], parent, rec["family"], rec["members"])
        self._check_forest()

        clinical: Dict[str, ClinicalProfile] = {}
        profile_of: Dict[ConceptID, str] = {}
        for pid, (line, rec) in self.clinical.items():
            c = rec["concept"]
            if c not in self.concepts:
                raise GraphError(f"dangling reference: clinical profile {pid} -> concept {c}", line, "concept")
            if c in profile_of:
                raise GraphError(f"concept {c} has two clinical profiles: {profile_of[c]} and {pid}", line, "concept")
            profile_of[c] = pid
            clinical[pid] = ClinicalProfile(pid, c, rec["phenotypes"], rec["features"], rec["criteria"])

        instances: Dict[str, InstanceRecord] = {}
        records_of: Dict[ConceptID, List[str]] = defaultdict(list)
        for rid, (line, rec) in self.instances.items():
            c = rec["concept"]
            if c not in self.concepts:
                raise GraphError(f"dangling reference: instance record {rid} -> concept {c}", line, "concept")
            records_of[c].append(rid)
            instances[rid] = InstanceRecord(
                rid, c, rec["case_text"], rec["subtype"], rec["pathway"], rec["genes"]
            )

        concepts: Dict[ConceptID, Concept] = {}
        for cid, (_, rec) in self.concepts.items():
            concepts[cid] = Concept(
                primary_id=cid,
                standard_name=rec["name"],
                cross_refs=rec["refs"],
                aliases=rec["aliases"],
                taxonomy_node=node_of.get(cid),
                clinical_profile=profile_of.get(cid),
                instance_records=tuple(sorted(records_of.get(cid, ()))),
            )
        return KnowledgeGraph(concepts, taxonomy, clinical, instances)

    def _check_forest(self) -> None:
        state: Dict[str, int] = {}
        for start in sorted(self.taxonomy):
            path = []
            cur: Optional[str] = start
            while cur is not None and state.get(cur) is None:
                state[cur] = 1
                path.append(cur)
                cur = self.taxonomy[cur][1]["parent"]
            if cur is not None and state.get(cur) == 1:
                line = self.taxonomy[cur][0]
                raise GraphError(f"taxonomy cycle through node {cur}", line, "parent")
            for p in path:
                state[p] = 2


def load_graph(path) -> KnowledgeGraph:
    """Read and validate a JSON Lines graph file."""
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise GraphError(f"malformed JSON: {exc.msg}", lineno) from None
            records.append((lineno, rec))
    return _GraphBuilder().build(records)


def dump_graph(graph: KnowledgeGraph, path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in graph.to_records():
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
