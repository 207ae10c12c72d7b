"""Domain types, controlled vocabularies and text normalization primitives."""
from __future__ import annotations

import html as _htmllib
import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from html.parser import HTMLParser
from pathlib import Path
from typing import Any, Optional

CURIE_RE = re.compile(r"^[A-Za-z][A-Za-z0-9]*:[A-Za-z0-9_.\-]+$")
CASRN_RE = re.compile(r"^\d{2,7}-\d{2}-\d$")
_WS_RE = re.compile(r"\s+")

DATA_DIR = Path(__file__).parent / "data"


class ModelError(ValueError):
    """Raised when a domain object violates one of its invariants."""


# ---------------------------------------------------------------------------
# enums


class Lobo(str, Enum):
    MOLECULAR = "Molecular"
    CELLULAR = "Cellular"
    TISSUE = "Tissue"
    ORGAN = "Organ"
    INDIVIDUAL = "Individual"
    POPULATION = "Population"


class OecdStatus(str, Enum):
    NOT_IN_PROGRAMME = "NotInProgramme"
    IN_PROGRAMME = "InProgramme"
    ENDORSED = "Endorsed"

    @property
    def in_programme(self) -> bool:
        # Endorsed implies membership in the OECD programme.
        return self in (OecdStatus.IN_PROGRAMME, OecdStatus.ENDORSED)


class LicenseStatus(str, Enum):
    CC_BY_SA = "CcBySa"
    ALL_RIGHTS_RESERVED = "AllRightsReserved"
    OPEN_FOR_ADOPTION = "OpenForAdoption"


class EventRole(str, Enum):
    MIE = "MIE"
    KE = "KE"
    AO = "AO"


class Adjacency(str, Enum):
    ADJACENT = "Adjacent"
    NON_ADJACENT = "NonAdjacent"


class ConcordanceRating(str, Enum):
    SUPPORTING = "Supporting"
    CONFLICTING = "Conflicting"
    NOT_RELEVANT = "NotRelevant"
    UNASSESSED = "Unassessed"


class ExperimentType(str, Enum):
    IN_VIVO = "InVivo"
    IN_VITRO = "InVitro"
    IN_SILICO = "InSilico"
    EX_VIVO = "ExVivo"
    IN_SITU = "InSitu"
    CELL_FREE = "CellFree"
    BIOCHEMICAL = "Biochemical"


class GroupKind(str, Enum):
    MANUAL_HARMONIZED = "ManualHarmonized"
    GENOMICS_CANDIDATE = "GenomicsCandidate"
    LLM_MERGER = "LlmMerger"
    LLM_SODA = "LlmSoda"


# ---------------------------------------------------------------------------
# text primitives


class _TagStripper(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.chunks: list[str] = []

    def handle_data(self, data: str) -> None:
        self.chunks.append(data)

    def handle_starttag(self, tag: str, attrs: Any) -> None:
        # block-ish boundaries become whitespace so adjacent cells don't glue
        self.chunks.append(" ")

    def handle_endtag(self, tag: str) -> None:
        self.chunks.append(" ")


def normalize_text(fragment: Optional[str]) -> str:
    """Strip tags, decode entities and collapse whitespace. Never raises."""
    if not fragment:
        return ""
    try:
        stripper = _TagStripper()
        stripper.feed(fragment)
        stripper.close()
        text = "".join(stripper.chunks)
    except Exception:
        # best-effort fallback for markup the parser chokes on
        text = _htmllib.unescape(re.sub(r"<[^>]*>", " ", fragment))
    return _WS_RE.sub(" ", text).strip()


def is_nonempty(value: Any) -> bool:
    """True when a document value carries content once HTML noise is removed."""
    if value is None:
        return False
    if isinstance(value, str):
        return normalize_text(value) != ""
    if isinstance(value, bool):
        return True
    if isinstance(value, (list, tuple, set)):
        return len(value) > 0
    if isinstance(value, dict):
        return any(is_nonempty(v) for v in value.values())
    return True


# ---------------------------------------------------------------------------
# controlled vocabularies


def load_vocabulary(path: Path) -> list[str]:
    """Load a line-oriented vocabulary file; `#` starts a comment line."""
    terms = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        terms.append(line)
    return terms


@dataclass(frozen=True)
class Vocabularies:
    actions: tuple[str, ...]
    sexes: tuple[str, ...]
    life_stages: tuple[str, ...]

    @classmethod
    def load_default(cls) -> "Vocabularies":
        return cls(
            actions=tuple(load_vocabulary(DATA_DIR / "action_terms.txt")),
            sexes=tuple(load_vocabulary(DATA_DIR / "sex_terms.txt")),
            life_stages=tuple(load_vocabulary(DATA_DIR / "life_stage_terms.txt")),
        )


# ---------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class OntologyTerm:
    curie: str
    label: str
    vocabulary: str = ""

    def __post_init__(self) -> None:
        if not CURIE_RE.match(self.curie):
            raise ModelError(f"invalid CURIE: {self.curie!r}")
        if not _WS_RE.sub(" ", self.label).strip():
            raise ModelError(f"empty label for {self.curie}")


def action_vocabulary() -> tuple[str, ...]:
    global _ACTIONS
    if _ACTIONS is None:
        _ACTIONS = tuple(load_vocabulary(DATA_DIR / "action_terms.txt"))
    return _ACTIONS


_ACTIONS: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class Kec:
    action: str
    object: Optional[OntologyTerm] = None
    process: Optional[OntologyTerm] = None

    def __post_init__(self) -> None:
        if self.action not in action_vocabulary():
            raise ModelError(f"unknown KEC action {self.action!r}")


@dataclass(frozen=True)
class DomainOfApplicability:
    taxa: tuple[tuple[OntologyTerm, str], ...] = ()
    sexes: tuple[str, ...] = ()
    life_stages: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for name, terms in (
            ("taxa", [t.curie for t, _ in self.taxa]),
            ("sexes", list(self.sexes)),
            ("life_stages", list(self.life_stages)),
        ):
            if len(terms) != len(set(terms)):
                raise ModelError(f"duplicate {name} terms")


EMPTY_DOA = DomainOfApplicability()


@dataclass(frozen=True)
class Citation:
    title: str = ""
    first_author: str = ""
    authors: Optional[str] = None
    year: Optional[int] = None
    journal: Optional[str] = None
    doi_url: Optional[str] = None
    pubmed_url: Optional[str] = None

    def __post_init__(self) -> None:
        if not (self.title.strip() or self.first_author.strip()):
            raise ModelError("citation needs a title or first author")
        for url in (self.doi_url, self.pubmed_url):
            if url and not re.match(r"^https?://\S+$", url):
                raise ModelError(f"invalid URL: {url!r}")


@dataclass(frozen=True)
class Provenance:
    source_description: str
    collected_by: str = ""
    uploaded_by: str = ""
    date: Optional[date] = None
    source_citations: tuple[Citation, ...] = ()

    def __post_init__(self) -> None:
        if not self.source_description.strip():
            raise ModelError("provenance source_description is empty")


@dataclass(frozen=True)
class Stressor:
    name: str
    casrn: Optional[str] = None
    dtxsid: Optional[str] = None
    pubchem_evidence: Optional[bool] = None

    def casrn_valid(self) -> bool:
        return self.casrn is None or CASRN_RE.match(self.casrn) is not None


# ---------------------------------------------------------------------------
# core entities


@dataclass
class KeyEvent:
    id: int
    title: str
    lobo: Optional[Lobo] = None
    kecs: list[Kec] = field(default_factory=list)
    cell_term: Optional[OntologyTerm] = None
    organ_term: Optional[OntologyTerm] = None
    applicability: DomainOfApplicability = EMPTY_DOA
    measurement_text: str = ""
    description: str = ""
    references_text: str = ""
    citations: list[Citation] = field(default_factory=list)
    is_orphan: bool = False

    def __post_init__(self) -> None:
        if self.id <= 0:
            raise ModelError(f"key event id must be positive: {self.id}")

    def has_method_text(self) -> bool:
        return is_nonempty(self.measurement_text)


@dataclass
class KeyEventRelationship:
    id: int
    upstream_event_id: int
    downstream_event_id: int
    weight_of_evidence: str = ""
    empirical_support: str = ""
    biological_plausibility: str = ""
    quantitative_understanding: str = ""
    description: str = ""
    applicability: DomainOfApplicability = EMPTY_DOA
    citations: list[Citation] = field(default_factory=list)
    evidence_record_ids: list[int] = field(default_factory=list)

    EVIDENCE_FIELDS = (
        "weight_of_evidence",
        "empirical_support",
        "biological_plausibility",
        "quantitative_understanding",
    )

    def __post_init__(self) -> None:
        if self.id <= 0:
            raise ModelError(f"KER id must be positive: {self.id}")
        if self.upstream_event_id == self.downstream_event_id:
            raise ModelError(f"KER {self.id} links an event to itself")


@dataclass
class Aop:
    id: int
    title: str
    abstract: str = ""
    oecd_status: OecdStatus = OecdStatus.NOT_IN_PROGRAMME
    license_status: LicenseStatus = LicenseStatus.CC_BY_SA
    event_memberships: list[tuple[int, EventRole]] = field(default_factory=list)
    ker_memberships: list[tuple[int, Adjacency]] = field(default_factory=list)
    applicability: DomainOfApplicability = EMPTY_DOA
    citations: list[Citation] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.id <= 0:
            raise ModelError(f"AOP id must be positive: {self.id}")

    def event_ids(self) -> list[int]:
        return [eid for eid, _ in self.event_memberships]

    def ker_ids(self) -> list[int]:
        return [kid for kid, _ in self.ker_memberships]


@dataclass
class Observation:
    id: int
    event_id: int
    stressor: Stressor
    experimental_effect: str
    phenotype: Optional[OntologyTerm] = None
    biological_object: Optional[OntologyTerm] = None
    biological_process: Optional[OntologyTerm] = None
    assay_id: Optional[int] = None
    experiment_type: Optional[ExperimentType] = None
    citation: Optional[Citation] = None
    provenance: Optional[Provenance] = None

    def __post_init__(self) -> None:
        # effects share the KEC action vocabulary
        if self.experimental_effect not in action_vocabulary():
            raise ModelError(f"unknown experimental effect {self.experimental_effect!r}")


@dataclass
class Assay:
    id: int
    name: str
    external_id: Optional[str] = None
    measured_object: Optional[OntologyTerm] = None
    measured_process: Optional[OntologyTerm] = None
    measured_phenotype: Optional[OntologyTerm] = None
    experiment_type: Optional[ExperimentType] = None
    target_family_id: Optional[int] = None
    linked_event_ids: list[int] = field(default_factory=list)
    linked_ker_ids: list[int] = field(default_factory=list)
    linked_aop_ids: list[int] = field(default_factory=list)


@dataclass
class EvidenceRecord:
    id: int
    ker_id: int
    citation: Citation
    upstream_observation_id: Optional[int] = None
    downstream_observation_id: Optional[int] = None
    biological_plausibility: ConcordanceRating = ConcordanceRating.UNASSESSED
    dose_concordance: ConcordanceRating = ConcordanceRating.UNASSESSED
    temporal_concordance: ConcordanceRating = ConcordanceRating.UNASSESSED
    incidence_concordance: ConcordanceRating = ConcordanceRating.UNASSESSED
    experiment_type: Optional[ExperimentType] = None


@dataclass
class BiologicalTargetFamily:
    id: int
    name: str
    assay_ids: list[int] = field(default_factory=list)
    event_ids: list[int] = field(default_factory=list)


@dataclass
class EventGroup:
    group_id: str
    kind: GroupKind
    member_event_ids: list[int]
    preferred_event_id: Optional[int] = None
    rationale: str = ""
    provenance: Optional[Provenance] = None

    def __post_init__(self) -> None:
        if len(self.member_event_ids) < 2:
            raise ModelError(f"group {self.group_id} needs at least 2 members")
        if (
            self.preferred_event_id is not None
            and self.preferred_event_id not in self.member_event_ids
        ):
            raise ModelError(
                f"group {self.group_id}: preferred event "
                f"{self.preferred_event_id} is not a member"
            )


@dataclass
class HarmonizedEvent:
    id: int
    name: str
    source_ids: list[int]
    rationale: Optional[str] = None
    provenance: Optional[Provenance] = None
    content: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.source_ids:
            raise ModelError(f"harmonized event {self.id} has no source events")


@dataclass
class HarmonizedAop:
    id: int
    name: str
    source_ids: list[int]
    rationale: Optional[str] = None
    provenance: Optional[Provenance] = None
    content: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.source_ids:
            raise ModelError(f"harmonized AOP {self.id} has no source AOPs")
