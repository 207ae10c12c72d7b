"""XML snapshot parsing, use-case file loaders, and snapshot persistence.

The official wiki exports omit orphan events and KERs; locally authored
fixtures may include them, so orphan status is always recomputed here rather
than trusted from the source.
"""
from __future__ import annotations

import csv
import hashlib
import json
import xml.etree.ElementTree as ET
import xml.parsers.expat
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Iterable, Optional

from .model import (
    Adjacency,
    Aop,
    Assay,
    BiologicalTargetFamily,
    CASRN_RE,
    Citation,
    DomainOfApplicability,
    EventGroup,
    EventRole,
    GroupKind,
    HarmonizedAop,
    HarmonizedEvent,
    Kec,
    KeyEvent,
    KeyEventRelationship,
    LicenseStatus,
    Lobo,
    ModelError,
    Observation,
    OecdStatus,
    OntologyTerm,
    Provenance,
    Stressor,
    DATA_DIR,
    normalize_text,
)
from .store import EntityStore, Severity, SourceMeta, store_from_dict, store_to_dict

SEIZURE_PHENOTYPE = OntologyTerm("MP:0002064", "seizures", "MP")
SNAPSHOT_FORMAT = "aopkb-snapshot-1"


class IngestError(Exception):
    """Unrecoverable ingest failure (malformed XML, bad schema, corruption)."""


class SnapshotError(IngestError):
    pass


# ---------------------------------------------------------------------------
# field map


@dataclass(frozen=True)
class FieldMap:
    """Maps internal field names to source XML element/attribute names."""

    key_event: dict[str, str]
    ker: dict[str, str]
    aop: dict[str, str]

    REQUIRED = {
        "key_event": ("element", "id", "title"),
        "ker": ("element", "id", "upstream_event_id", "downstream_event_id"),
        "aop": ("element", "id", "title"),
    }

    def __post_init__(self) -> None:
        for kind, required in self.REQUIRED.items():
            mapping = getattr(self, kind)
            missing = [f for f in required if f not in mapping]
            if missing:
                raise IngestError(f"field map for {kind} is missing {missing}")

    @classmethod
    def load(cls, path: Path) -> "FieldMap":
        doc = json.loads(path.read_text(encoding="utf-8"))
        return cls(key_event=doc["key_event"], ker=doc["ker"], aop=doc["aop"])

    @classmethod
    def default(cls) -> "FieldMap":
        return cls.load(DATA_DIR / "field_map.json")


def _get(elem: ET.Element, path: str) -> Optional[str]:
    if path.startswith("@"):
        return elem.get(path[1:])
    child = elem.find(path)
    if child is None:
        return None
    return "".join(child.itertext())


def _parse_term(elem: Optional[ET.Element]) -> Optional[OntologyTerm]:
    if elem is None:
        return None
    curie = elem.get("curie")
    if not curie:
        return None
    return OntologyTerm(curie, elem.get("label", curie), elem.get("vocabulary", ""))


def _parse_doa(elem: Optional[ET.Element]) -> DomainOfApplicability:
    if elem is None:
        return DomainOfApplicability()
    taxa = []
    for tax in elem.findall("taxonomy"):
        term = _parse_term(tax)
        if term is not None:
            taxa.append((term, tax.get("evidence", "")))
    sexes = [s.text.strip() for s in elem.findall("sex") if s.text and s.text.strip()]
    stages = [s.text.strip() for s in elem.findall("life-stage") if s.text and s.text.strip()]
    return DomainOfApplicability(
        taxa=tuple(taxa),
        sexes=tuple(dict.fromkeys(sexes)),
        life_stages=tuple(dict.fromkeys(stages)),
    )


def _parse_citation(elem: ET.Element) -> Optional[Citation]:
    try:
        return Citation(
            title=elem.get("title", ""),
            first_author=elem.get("first-author", ""),
            authors=elem.get("authors"),
            year=int(elem.get("year")) if elem.get("year") else None,
            journal=elem.get("journal"),
            doi_url=elem.get("doi-url"),
            pubmed_url=elem.get("pubmed-url"),
        )
    except ModelError:
        return None


# ---------------------------------------------------------------------------
# wiki XML


def parse_wiki_xml(
    xml_bytes: bytes,
    field_map: Optional[FieldMap] = None,
    source: str = "",
) -> EntityStore:
    fm = field_map or FieldMap.default()
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        offset = _expat_byte_offset(xml_bytes)
        raise IngestError(f"malformed XML at byte {offset}: {exc}") from exc

    store = EntityStore()
    store.source_meta = SourceMeta(source=source, ingest_date=None)
    known = {
        fm.key_event["element"]: "key_event",
        fm.ker["element"]: "ker",
        fm.aop["element"]: "aop",
    }
    for elem in root:
        kind = known.get(elem.tag)
        if kind is None:
            store.warn("xml", None, f"skipped unknown element <{elem.tag}>", Severity.INFO)
        elif kind == "key_event":
            _ingest_key_event(store, elem, fm.key_event)
        elif kind == "ker":
            _ingest_ker(store, elem, fm.ker)
        else:
            _ingest_aop(store, elem, fm.aop)

    store.validate_references()
    store.build_indexes()
    return store


def _expat_byte_offset(xml_bytes: bytes) -> int:
    parser = xml.parsers.expat.ParserCreate()
    try:
        parser.Parse(xml_bytes, True)
    except xml.parsers.expat.ExpatError:
        return parser.ErrorByteIndex
    return -1


def _ingest_key_event(store: EntityStore, elem: ET.Element, fm: dict[str, str]) -> None:
    raw_id = _get(elem, fm["id"])
    title = _get(elem, fm["title"])
    if not raw_id or not raw_id.strip().isdigit() or not (title and title.strip()):
        store.warn("key_event", None, "skipped key event missing id or title")
        return
    ke_id = int(raw_id)
    if ke_id in store.key_events:
        store.warn("key_event", ke_id, "duplicate key event id; first occurrence kept")
        return
    lobo_text = _get(elem, fm.get("lobo", "")) if fm.get("lobo") else None
    lobo = None
    if lobo_text and lobo_text.strip():
        try:
            lobo = Lobo(lobo_text.strip())
        except ValueError:
            store.warn("key_event", ke_id, f"unknown level of biological organization {lobo_text.strip()!r}")
    kecs = []
    for kec_elem in elem.findall(fm.get("kec", "key-event-component")):
        action = kec_elem.get("action") or (_get(kec_elem, "action") or "")
        kecs.append(
            Kec(
                action=action.strip(),
                object=_parse_term(kec_elem.find("object")),
                process=_parse_term(kec_elem.find("process")),
            )
        )
    citations = [
        c for c in (_parse_citation(e) for e in elem.findall(fm.get("citation", "citation")))
        if c is not None
    ]
    store.key_events[ke_id] = KeyEvent(
        id=ke_id,
        title=title.strip(),
        lobo=lobo,
        kecs=kecs,
        cell_term=_parse_term(elem.find(fm.get("cell_term", "cell-term"))),
        organ_term=_parse_term(elem.find(fm.get("organ_term", "organ-term"))),
        applicability=_parse_doa(elem.find(fm.get("applicability", "applicability"))),
        measurement_text=_get(elem, fm.get("measurement_text", "measurement-methodology")) or "",
        description=_get(elem, fm.get("description", "description")) or "",
        references_text=_get(elem, fm.get("references_text", "references")) or "",
        citations=citations,
    )


def _ingest_ker(store: EntityStore, elem: ET.Element, fm: dict[str, str]) -> None:
    raw_id = _get(elem, fm["id"])
    up = _get(elem, fm["upstream_event_id"])
    down = _get(elem, fm["downstream_event_id"])
    ok = all(v and v.strip().lstrip("-").isdigit() for v in (raw_id, up, down))
    if not ok:
        store.warn("ker", None, "skipped KER missing id or endpoint ids")
        return
    ker_id = int(raw_id)
    if ker_id in store.kers:
        store.warn("ker", ker_id, "duplicate KER id; first occurrence kept")
        return
    try:
        ker = KeyEventRelationship(
            id=ker_id,
            upstream_event_id=int(up),
            downstream_event_id=int(down),
            weight_of_evidence=_get(elem, fm.get("weight_of_evidence", "weight-of-evidence")) or "",
            empirical_support=_get(elem, fm.get("empirical_support", "empirical-support")) or "",
            biological_plausibility=_get(elem, fm.get("biological_plausibility", "biological-plausibility")) or "",
            quantitative_understanding=_get(elem, fm.get("quantitative_understanding", "quantitative-understanding")) or "",
            description=_get(elem, fm.get("description", "description")) or "",
            applicability=_parse_doa(elem.find(fm.get("applicability", "applicability"))),
            citations=[
                c for c in (_parse_citation(e) for e in elem.findall(fm.get("citation", "citation")))
                if c is not None
            ],
        )
    except ModelError as exc:
        store.warn("ker", ker_id, f"skipped invalid KER: {exc}")
        return
    store.kers[ker_id] = ker


def _ingest_aop(store: EntityStore, elem: ET.Element, fm: dict[str, str]) -> None:
    raw_id = _get(elem, fm["id"])
    title = _get(elem, fm["title"])
    if not raw_id or not raw_id.strip().isdigit() or not (title and title.strip()):
        store.warn("aop", None, "skipped AOP missing id or title")
        return
    aop_id = int(raw_id)
    if aop_id in store.aops:
        store.warn("aop", aop_id, "duplicate AOP id; first occurrence kept")
        return
    status_text = (_get(elem, fm.get("oecd_status", "oecd-status")) or "NotInProgramme").strip()
    license_text = (_get(elem, fm.get("license_status", "license-status")) or "CcBySa").strip()
    try:
        status = OecdStatus(status_text)
    except ValueError:
        store.warn("aop", aop_id, f"unknown OECD status {status_text!r}")
        status = OecdStatus.NOT_IN_PROGRAMME
    try:
        license_status = LicenseStatus(license_text)
    except ValueError:
        store.warn("aop", aop_id, f"unknown license status {license_text!r}")
        license_status = LicenseStatus.CC_BY_SA
    event_memberships = []
    for mem in elem.findall(fm.get("event_membership", "key-event")):
        ref = mem.get("ref")
        if ref and ref.isdigit():
            role = mem.get("role", "KE")
            event_memberships.append((int(ref), EventRole(role)))
    ker_memberships = []
    for mem in elem.findall(fm.get("ker_membership", "key-event-relationship")):
        ref = mem.get("ref")
        if ref and ref.isdigit():
            ker_memberships.append((int(ref), Adjacency(mem.get("adjacency", "Adjacent"))))
    store.aops[aop_id] = Aop(
        id=aop_id,
        title=title.strip(),
        abstract=_get(elem, fm.get("abstract", "abstract")) or "",
        oecd_status=status,
        license_status=license_status,
        event_memberships=event_memberships,
        ker_memberships=ker_memberships,
        applicability=_parse_doa(elem.find(fm.get("applicability", "applicability"))),
        citations=[
            c for c in (_parse_citation(e) for e in elem.findall(fm.get("citation", "citation")))
            if c is not None
        ],
    )


# ---------------------------------------------------------------------------
# merger group files


def load_merger_groups(
    doc: Any, store: Optional[EntityStore] = None
) -> tuple[list[EventGroup], list[str]]:
    """Load candidate-merger groups from a parsed JSON document.

    Returns (groups, errors); unresolved member ids are retained and reported
    as warnings on the store when one is supplied.
    """
    raw_groups = doc.get("groups", []) if isinstance(doc, dict) else list(doc or [])
    groups: list[EventGroup] = []
    errors: list[str] = []
    for i, raw in enumerate(raw_groups):
        group_id = str(raw.get("group_id") or f"group-{i + 1}")
        members = [int(m) for m in raw.get("member_event_ids", [])]
        if len(members) < 2:
            errors.append(f"group {group_id}: fewer than 2 members")
            continue
        preferred = raw.get("preferred_event_id")
        if preferred is not None and int(preferred) not in members:
            errors.append(f"group {group_id}: preferred event {preferred} is not a member")
            continue
        try:
            kind = GroupKind(raw.get("kind", "GenomicsCandidate"))
        except ValueError:
            errors.append(f"group {group_id}: unknown kind {raw.get('kind')!r}")
            continue
        prov = None
        if raw.get("provenance"):
            p = raw["provenance"]
            prov = Provenance(
                source_description=p.get("source_description", ""),
                collected_by=p.get("collected_by", ""),
                uploaded_by=p.get("uploaded_by", ""),
                date=date.fromisoformat(p["date"]) if p.get("date") else None,
            )
        group = EventGroup(
            group_id=group_id,
            kind=kind,
            member_event_ids=members,
            preferred_event_id=int(preferred) if preferred is not None else None,
            rationale=raw.get("rationale", ""),
            provenance=prov,
        )
        if store is not None:
            for m in members:
                if m not in store.key_events:
                    store.warn("event_group", None, f"group {group_id}: unresolved member {m}")
        groups.append(group)
    return groups, errors


def load_merger_groups_file(
    path: Path, store: Optional[EntityStore] = None
) -> tuple[list[EventGroup], list[str]]:
    text = path.read_text(encoding="utf-8").strip()
    if not text:
        return [], []
    return load_merger_groups(json.loads(text), store)


# ---------------------------------------------------------------------------
# seizure workbook


@dataclass
class SeizureResult:
    harmonized_aops: list[HarmonizedAop] = field(default_factory=list)
    harmonized_events: list[HarmonizedEvent] = field(default_factory=list)
    observations: list[Observation] = field(default_factory=list)
    target_families: list[BiologicalTargetFamily] = field(default_factory=list)
    assays: list[Assay] = field(default_factory=list)
    unmatched_event_titles: list[str] = field(default_factory=list)

    def apply(self, store: EntityStore) -> None:
        for h in self.harmonized_aops:
            store.harmonized_aops[h.id] = h
        for h in self.harmonized_events:
            store.harmonized_events[h.id] = h
        for obs in self.observations:
            store.observations[obs.id] = obs
        for fam in self.target_families:
            store.target_families[fam.id] = fam
        for assay in self.assays:
            store.assays[assay.id] = assay


def _read_csv(path: Path) -> list[dict[str, str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: missing header row")
        return [dict(row) for row in reader]


def load_seizure_workbook(
    store: EntityStore,
    harmonization_csv: Path,
    compounds_csv: Path,
    families_csv: Path,
    provenance: Optional[Provenance] = None,
    phenotype: OntologyTerm = SEIZURE_PHENOTYPE,
) -> SeizureResult:
    """Transform the three seizure worksheets into store entities.

    Compound rows are deduplicated on (stressor name, event, effect); event
    titles that do not resolve against the store become fuzzy-match
    candidates instead of being dropped.
    """
    result = SeizureResult()
    prov = provenance or Provenance(
        source_description="Seizure target study supplemental worksheets",
        collected_by="Behl et al., 2025",
        uploaded_by="aopkb",
    )

    for row in _read_csv(harmonization_csv):
        kind = row.get("harmonized_kind", "").strip().lower()
        source_ids = [int(s) for s in row.get("source_ids", "").split(";") if s.strip()]
        hid = int(row["harmonized_id"])
        name = row["harmonized_name"].strip()
        rationale = row.get("rationale") or None
        if kind == "aop":
            result.harmonized_aops.append(
                HarmonizedAop(hid, name, source_ids, rationale, prov)
            )
        elif kind == "event":
            result.harmonized_events.append(
                HarmonizedEvent(hid, name, source_ids, rationale, prov)
            )
        else:
            store.warn("harmonized", hid, f"unknown harmonized kind {kind!r}")

    title_index = {
        normalize_text(ke.title).lower(): ke.id for ke in store.key_events.values()
    }
    seen: set[tuple[str, int, str]] = set()
    next_obs_id = 1
    for row in _read_csv(compounds_csv):
        name = row["compound"].strip()
        casrn = row.get("casrn", "").strip() or None
        if casrn and not CASRN_RE.match(casrn):
            store.warn("observation", None, f"malformed CASRN {casrn!r} for {name!r}")
        effect = row["direction"].strip().lower()
        event_title = row.get("event_title", "").strip()
        event_id = title_index.get(normalize_text(event_title).lower())
        if event_id is None:
            if event_title and event_title not in result.unmatched_event_titles:
                result.unmatched_event_titles.append(event_title)
            continue
        key = (name, event_id, effect)
        if key in seen:
            store.warn(
                "observation", None,
                f"duplicate compound row for {name!r} on event {event_id}; kept first",
                Severity.INFO,
            )
            continue
        seen.add(key)
        citation = None
        if row.get("citation_title") or row.get("citation_first_author"):
            citation = Citation(
                title=row.get("citation_title", ""),
                first_author=row.get("citation_first_author", ""),
                year=int(row["citation_year"]) if row.get("citation_year") else None,
            )
        result.observations.append(
            Observation(
                id=next_obs_id,
                event_id=event_id,
                stressor=Stressor(
                    name=name,
                    casrn=casrn,
                    dtxsid=row.get("dtxsid", "").strip() or None,
                    pubchem_evidence=_parse_bool(row.get("pubchem_evidence")),
                ),
                experimental_effect=effect,
                phenotype=phenotype,
                citation=citation,
                provenance=prov,
            )
        )
        next_obs_id += 1

    families: dict[int, BiologicalTargetFamily] = {}
    assays: dict[str, Assay] = {}
    next_assay_id = 1
    for row in _read_csv(families_csv):
        fam_id = int(row["family_id"])
        fam = families.setdefault(
            fam_id, BiologicalTargetFamily(fam_id, row["family_name"].strip())
        )
        assay_name = row.get("assay_name", "").strip()
        event_id = int(row["event_id"]) if row.get("event_id", "").strip() else None
        aop_id = int(row["aop_id"]) if row.get("aop_id", "").strip() else None
        if assay_name:
            assay = assays.get(assay_name)
            if assay is None:
                assay = Assay(
                    id=next_assay_id,
                    name=assay_name,
                    external_id=row.get("assay_external_id", "").strip() or None,
                    target_family_id=fam_id,
                )
                assays[assay_name] = assay
                next_assay_id += 1
            if assay.id not in fam.assay_ids:
                fam.assay_ids.append(assay.id)
            if event_id is not None and event_id not in assay.linked_event_ids:
                assay.linked_event_ids.append(event_id)
            if aop_id is not None and aop_id not in assay.linked_aop_ids:
                assay.linked_aop_ids.append(aop_id)
        if event_id is not None and event_id not in fam.event_ids:
            fam.event_ids.append(event_id)

    result.target_families = [families[k] for k in sorted(families)]
    result.assays = [assays[k] for k in sorted(assays, key=lambda n: assays[n].id)]
    return result


def _parse_bool(value: Optional[str]) -> Optional[bool]:
    if value is None or not value.strip():
        return None
    return value.strip().lower() in ("1", "true", "yes", "y")


# ---------------------------------------------------------------------------
# snapshots


def canonical_payload(store: EntityStore) -> bytes:
    doc = store_to_dict(store)
    return (json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")


def content_hash(store: EntityStore) -> str:
    return hashlib.sha256(canonical_payload(store)).hexdigest()


def snapshot_save(store: EntityStore, path: Path) -> str:
    """Write the canonical payload plus a sidecar header; returns the hash.

    Timestamps live only in the sidecar so the payload stays byte-identical
    across runs.
    """
    payload = canonical_payload(store)
    digest = hashlib.sha256(payload).hexdigest()
    path = Path(path)
    path.write_bytes(payload)
    header = {
        "format": SNAPSHOT_FORMAT,
        "sha256": digest,
        "snapshot_id": f"{store.source_meta.source or 'store'}-{digest[:12]}",
        "created": date.today().isoformat(),
        "counts": {
            "key_events": len(store.key_events),
            "kers": len(store.kers),
            "aops": len(store.aops),
            "observations": len(store.observations),
        },
    }
    Path(str(path) + ".meta.json").write_text(
        json.dumps(header, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return digest


def snapshot_load(path: Path) -> EntityStore:
    path = Path(path)
    meta_path = Path(str(path) + ".meta.json")
    if not path.exists():
        raise SnapshotError(f"snapshot file not found: {path}")
    payload = path.read_bytes()
    digest = hashlib.sha256(payload).hexdigest()
    if meta_path.exists():
        header = json.loads(meta_path.read_text(encoding="utf-8"))
        if header.get("sha256") != digest:
            raise SnapshotError(
                f"snapshot corrupted: content hash {digest[:12]}… does not match header"
            )
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"snapshot truncated or not valid JSON: {exc}") from exc
    store = store_from_dict(doc)
    return store


def snapshot_id(path: Path) -> str:
    meta_path = Path(str(path) + ".meta.json")
    if meta_path.exists():
        header = json.loads(meta_path.read_text(encoding="utf-8"))
        return str(header.get("snapshot_id", ""))
    return ""
