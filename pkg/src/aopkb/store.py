"""Immutable-after-ingest entity container with membership indexes."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from datetime import date
from enum import Enum
from typing import Any, Optional

from .model import (
    Adjacency,
    Aop,
    Assay,
    BiologicalTargetFamily,
    Citation,
    ConcordanceRating,
    DomainOfApplicability,
    EventGroup,
    EventRole,
    EvidenceRecord,
    ExperimentType,
    GroupKind,
    HarmonizedAop,
    HarmonizedEvent,
    Kec,
    KeyEvent,
    KeyEventRelationship,
    Lobo,
    LicenseStatus,
    Observation,
    OecdStatus,
    OntologyTerm,
    Provenance,
    Stressor,
)


class Severity(str, Enum):
    INFO = "Info"
    WARN = "Warn"


@dataclass(frozen=True)
class IngestWarning:
    severity: Severity
    entity_kind: str
    entity_id: Optional[int]
    message: str

    def __post_init__(self) -> None:
        if not self.message:
            raise ValueError("warning message must be non-empty")


@dataclass
class SourceMeta:
    source: str = ""
    ingest_date: Optional[date] = None


@dataclass
class EntityStore:
    key_events: dict[int, KeyEvent] = field(default_factory=dict)
    kers: dict[int, KeyEventRelationship] = field(default_factory=dict)
    aops: dict[int, Aop] = field(default_factory=dict)
    observations: dict[int, Observation] = field(default_factory=dict)
    assays: dict[int, Assay] = field(default_factory=dict)
    evidence_records: dict[int, EvidenceRecord] = field(default_factory=dict)
    target_families: dict[int, BiologicalTargetFamily] = field(default_factory=dict)
    event_groups: dict[str, EventGroup] = field(default_factory=dict)
    harmonized_events: dict[int, HarmonizedEvent] = field(default_factory=dict)
    harmonized_aops: dict[int, HarmonizedAop] = field(default_factory=dict)
    warnings: list[IngestWarning] = field(default_factory=list)
    source_meta: SourceMeta = field(default_factory=SourceMeta)
    # indexes, rebuilt from memberships
    event_to_kers: dict[int, list[int]] = field(default_factory=dict)
    event_to_aops: dict[int, list[int]] = field(default_factory=dict)
    aop_to_events: dict[int, list[int]] = field(default_factory=dict)
    aop_to_kers: dict[int, list[int]] = field(default_factory=dict)

    # -- index maintenance ----------------------------------------------

    def build_indexes(self) -> None:
        self.event_to_kers = {}
        self.event_to_aops = {}
        self.aop_to_events = {}
        self.aop_to_kers = {}
        for ker in sorted(self.kers.values(), key=lambda k: k.id):
            for eid in (ker.upstream_event_id, ker.downstream_event_id):
                if eid in self.key_events:
                    self.event_to_kers.setdefault(eid, [])
                    if ker.id not in self.event_to_kers[eid]:
                        self.event_to_kers[eid].append(ker.id)
        for aop in sorted(self.aops.values(), key=lambda a: a.id):
            self.aop_to_events[aop.id] = []
            self.aop_to_kers[aop.id] = []
            for eid in aop.event_ids():
                if eid not in self.aop_to_events[aop.id]:
                    self.aop_to_events[aop.id].append(eid)
                if eid in self.key_events:
                    self.event_to_aops.setdefault(eid, [])
                    if aop.id not in self.event_to_aops[eid]:
                        self.event_to_aops[eid].append(aop.id)
            for kid in aop.ker_ids():
                if kid not in self.aop_to_kers[aop.id]:
                    self.aop_to_kers[aop.id].append(kid)
        for ke in self.key_events.values():
            ke.is_orphan = ke.id not in self.event_to_aops

    def aops_for_event(self, event_id: int) -> list[Aop]:
        return [self.aops[a] for a in self.event_to_aops.get(event_id, []) if a in self.aops]

    def kers_for_event(self, event_id: int) -> list[KeyEventRelationship]:
        return [self.kers[k] for k in self.event_to_kers.get(event_id, [])]

    def warn(self, kind: str, entity_id: Optional[int], message: str,
             severity: Severity = Severity.WARN) -> None:
        self.warnings.append(IngestWarning(severity, kind, entity_id, message))

    # -- reference validation -------------------------------------------

    def validate_references(self) -> None:
        """Record a warning for every dangling cross-reference."""
        for ker in sorted(self.kers.values(), key=lambda k: k.id):
            if ker.upstream_event_id not in self.key_events:
                self.warn("ker", ker.id, f"dangling upstream event {ker.upstream_event_id}")
            if ker.downstream_event_id not in self.key_events:
                self.warn("ker", ker.id, f"dangling downstream event {ker.downstream_event_id}")
        for aop in sorted(self.aops.values(), key=lambda a: a.id):
            for eid in aop.event_ids():
                if eid not in self.key_events:
                    self.warn("aop", aop.id, f"dangling event membership {eid}")
            for kid in aop.ker_ids():
                if kid not in self.kers:
                    self.warn("aop", aop.id, f"dangling KER membership {kid}")
        for obs in sorted(self.observations.values(), key=lambda o: o.id):
            if obs.event_id not in self.key_events:
                self.warn("observation", obs.id, f"dangling event {obs.event_id}")
        for assay in sorted(self.assays.values(), key=lambda a: a.id):
            for eid in assay.linked_event_ids:
                if eid not in self.key_events:
                    self.warn("assay", assay.id, f"dangling event link {eid}")
            for kid in assay.linked_ker_ids:
                if kid not in self.kers:
                    self.warn("assay", assay.id, f"dangling KER link {kid}")
            for aid in assay.linked_aop_ids:
                if aid not in self.aops:
                    self.warn("assay", assay.id, f"dangling AOP link {aid}")
        for fam in sorted(self.target_families.values(), key=lambda f: f.id):
            for eid in fam.event_ids:
                if eid not in self.key_events:
                    self.warn("target_family", fam.id, f"dangling event link {eid}")
        for group in sorted(self.event_groups.values(), key=lambda g: g.group_id):
            for eid in group.member_event_ids:
                if eid not in self.key_events:
                    self.warn("event_group", None, f"group {group.group_id}: unresolved member {eid}")
        for h in sorted(self.harmonized_events.values(), key=lambda h: h.id):
            for eid in h.source_ids:
                if eid not in self.key_events:
                    self.warn("harmonized_event", h.id, f"unresolved source event {eid}")
        for h in sorted(self.harmonized_aops.values(), key=lambda h: h.id):
            for aid in h.source_ids:
                if aid not in self.aops:
                    self.warn("harmonized_aop", h.id, f"unresolved source AOP {aid}")


# ---------------------------------------------------------------------------
# canonical (de)serialization used by snapshots and exports


def _encode(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if hasattr(value, "__dataclass_fields__"):
        return {k: _encode(v) for k, v in asdict(value).items()}
    return value


def store_to_dict(store: EntityStore) -> dict[str, Any]:
    """Canonical JSON-ready representation; key order is sorted at dump time."""
    return {
        "key_events": {str(k): _encode(v) for k, v in sorted(store.key_events.items())},
        "kers": {str(k): _encode(v) for k, v in sorted(store.kers.items())},
        "aops": {str(k): _encode(v) for k, v in sorted(store.aops.items())},
        "observations": {str(k): _encode(v) for k, v in sorted(store.observations.items())},
        "assays": {str(k): _encode(v) for k, v in sorted(store.assays.items())},
        "evidence_records": {str(k): _encode(v) for k, v in sorted(store.evidence_records.items())},
        "target_families": {str(k): _encode(v) for k, v in sorted(store.target_families.items())},
        "event_groups": {k: _encode(v) for k, v in sorted(store.event_groups.items())},
        "harmonized_events": {str(k): _encode(v) for k, v in sorted(store.harmonized_events.items())},
        "harmonized_aops": {str(k): _encode(v) for k, v in sorted(store.harmonized_aops.items())},
        "warnings": [_encode(w) for w in store.warnings],
        "source": store.source_meta.source,
    }


def _term(d: Optional[dict]) -> Optional[OntologyTerm]:
    if not d:
        return None
    return OntologyTerm(d["curie"], d["label"], d.get("vocabulary", ""))


def _doa(d: Optional[dict]) -> DomainOfApplicability:
    if not d:
        return DomainOfApplicability()
    return DomainOfApplicability(
        taxa=tuple((_term(t), ev) for t, ev in d.get("taxa", ())),
        sexes=tuple(d.get("sexes", ())),
        life_stages=tuple(d.get("life_stages", ())),
    )


def _citation(d: dict) -> Citation:
    return Citation(
        title=d.get("title", ""),
        first_author=d.get("first_author", ""),
        authors=d.get("authors"),
        year=d.get("year"),
        journal=d.get("journal"),
        doi_url=d.get("doi_url"),
        pubmed_url=d.get("pubmed_url"),
    )


def _provenance(d: Optional[dict]) -> Optional[Provenance]:
    if not d:
        return None
    return Provenance(
        source_description=d["source_description"],
        collected_by=d.get("collected_by", ""),
        uploaded_by=d.get("uploaded_by", ""),
        date=date.fromisoformat(d["date"]) if d.get("date") else None,
        source_citations=tuple(_citation(c) for c in d.get("source_citations", ())),
    )


def _key_event(d: dict) -> KeyEvent:
    return KeyEvent(
        id=d["id"],
        title=d["title"],
        lobo=Lobo(d["lobo"]) if d.get("lobo") else None,
        kecs=[
            Kec(k["action"], _term(k.get("object")), _term(k.get("process")))
            for k in d.get("kecs", [])
        ],
        cell_term=_term(d.get("cell_term")),
        organ_term=_term(d.get("organ_term")),
        applicability=_doa(d.get("applicability")),
        measurement_text=d.get("measurement_text", ""),
        description=d.get("description", ""),
        references_text=d.get("references_text", ""),
        citations=[_citation(c) for c in d.get("citations", [])],
        is_orphan=d.get("is_orphan", False),
    )


def _ker(d: dict) -> KeyEventRelationship:
    return KeyEventRelationship(
        id=d["id"],
        upstream_event_id=d["upstream_event_id"],
        downstream_event_id=d["downstream_event_id"],
        weight_of_evidence=d.get("weight_of_evidence", ""),
        empirical_support=d.get("empirical_support", ""),
        biological_plausibility=d.get("biological_plausibility", ""),
        quantitative_understanding=d.get("quantitative_understanding", ""),
        description=d.get("description", ""),
        applicability=_doa(d.get("applicability")),
        citations=[_citation(c) for c in d.get("citations", [])],
        evidence_record_ids=list(d.get("evidence_record_ids", [])),
    )


def _aop(d: dict) -> Aop:
    return Aop(
        id=d["id"],
        title=d["title"],
        abstract=d.get("abstract", ""),
        oecd_status=OecdStatus(d.get("oecd_status", "NotInProgramme")),
        license_status=LicenseStatus(d.get("license_status", "CcBySa")),
        event_memberships=[(e, EventRole(r)) for e, r in d.get("event_memberships", [])],
        ker_memberships=[(k, Adjacency(a)) for k, a in d.get("ker_memberships", [])],
        applicability=_doa(d.get("applicability")),
        citations=[_citation(c) for c in d.get("citations", [])],
    )


def _observation(d: dict) -> Observation:
    s = d["stressor"]
    return Observation(
        id=d["id"],
        event_id=d["event_id"],
        stressor=Stressor(s["name"], s.get("casrn"), s.get("dtxsid"), s.get("pubchem_evidence")),
        experimental_effect=d["experimental_effect"],
        phenotype=_term(d.get("phenotype")),
        biological_object=_term(d.get("biological_object")),
        biological_process=_term(d.get("biological_process")),
        assay_id=d.get("assay_id"),
        experiment_type=ExperimentType(d["experiment_type"]) if d.get("experiment_type") else None,
        citation=_citation(d["citation"]) if d.get("citation") else None,
        provenance=_provenance(d.get("provenance")),
    )


def _assay(d: dict) -> Assay:
    return Assay(
        id=d["id"],
        name=d["name"],
        external_id=d.get("external_id"),
        measured_object=_term(d.get("measured_object")),
        measured_process=_term(d.get("measured_process")),
        measured_phenotype=_term(d.get("measured_phenotype")),
        experiment_type=ExperimentType(d["experiment_type"]) if d.get("experiment_type") else None,
        target_family_id=d.get("target_family_id"),
        linked_event_ids=list(d.get("linked_event_ids", [])),
        linked_ker_ids=list(d.get("linked_ker_ids", [])),
        linked_aop_ids=list(d.get("linked_aop_ids", [])),
    )


def _evidence_record(d: dict) -> EvidenceRecord:
    return EvidenceRecord(
        id=d["id"],
        ker_id=d["ker_id"],
        citation=_citation(d["citation"]),
        upstream_observation_id=d.get("upstream_observation_id"),
        downstream_observation_id=d.get("downstream_observation_id"),
        biological_plausibility=ConcordanceRating(d.get("biological_plausibility", "Unassessed")),
        dose_concordance=ConcordanceRating(d.get("dose_concordance", "Unassessed")),
        temporal_concordance=ConcordanceRating(d.get("temporal_concordance", "Unassessed")),
        incidence_concordance=ConcordanceRating(d.get("incidence_concordance", "Unassessed")),
        experiment_type=ExperimentType(d["experiment_type"]) if d.get("experiment_type") else None,
    )


def store_from_dict(doc: dict[str, Any]) -> EntityStore:
    store = EntityStore()
    store.key_events = {int(k): _key_event(v) for k, v in doc.get("key_events", {}).items()}
    store.kers = {int(k): _ker(v) for k, v in doc.get("kers", {}).items()}
    store.aops = {int(k): _aop(v) for k, v in doc.get("aops", {}).items()}
    store.observations = {int(k): _observation(v) for k, v in doc.get("observations", {}).items()}
    store.assays = {int(k): _assay(v) for k, v in doc.get("assays", {}).items()}
    store.evidence_records = {
        int(k): _evidence_record(v) for k, v in doc.get("evidence_records", {}).items()
    }
    store.target_families = {
        int(k): BiologicalTargetFamily(
            v["id"], v["name"], list(v.get("assay_ids", [])), list(v.get("event_ids", []))
        )
        for k, v in doc.get("target_families", {}).items()
    }
    store.event_groups = {
        k: EventGroup(
            group_id=v["group_id"],
            kind=GroupKind(v["kind"]),
            member_event_ids=list(v["member_event_ids"]),
            preferred_event_id=v.get("preferred_event_id"),
            rationale=v.get("rationale", ""),
            provenance=_provenance(v.get("provenance")),
        )
        for k, v in doc.get("event_groups", {}).items()
    }
    store.harmonized_events = {
        int(k): HarmonizedEvent(
            v["id"], v["name"], list(v["source_ids"]), v.get("rationale"),
            _provenance(v.get("provenance")), dict(v.get("content", {})),
        )
        for k, v in doc.get("harmonized_events", {}).items()
    }
    store.harmonized_aops = {
        int(k): HarmonizedAop(
            v["id"], v["name"], list(v["source_ids"]), v.get("rationale"),
            _provenance(v.get("provenance")), dict(v.get("content", {})),
        )
        for k, v in doc.get("harmonized_aops", {}).items()
    }
    store.warnings = [
        IngestWarning(Severity(w["severity"]), w["entity_kind"], w.get("entity_id"), w["message"])
        for w in doc.get("warnings", [])
    ]
    store.source_meta = SourceMeta(source=doc.get("source", ""))
    store.build_indexes()
    return store
