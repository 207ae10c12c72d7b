"""Fuzzy label-to-event matching with a human review ledger, plus the
biological target family index."""
from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .model import BiologicalTargetFamily, ModelError
from .store import EntityStore

_NON_ALNUM_RE = re.compile(r"[^a-z0-9]+")

# max(ratio, token_sort_ratio) tops out well below rapid-style scorers on
# prefix-annotated titles ("Antagonism, Histamine Receptor (H2)" vs
# "Histamine Receptor" scores 55), so the shipped threshold sits at 50.
DEFAULT_THRESHOLD = 50
DEFAULT_TOP_K = 3


class MappingError(ValueError):
    pass


class ProposalStatus(str, Enum):
    PROPOSED = "Proposed"
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"


@dataclass
class MappingProposal:
    candidate_label: str
    target_event_id: int
    score: int
    status: ProposalStatus = ProposalStatus.PROPOSED
    reviewer: Optional[str] = None
    note: Optional[str] = None

    def __post_init__(self) -> None:
        if not 0 <= self.score <= 100:
            raise MappingError(f"score out of range: {self.score}")
        if self.status != ProposalStatus.PROPOSED and not self.reviewer:
            raise MappingError(f"{self.status.value} proposal requires a reviewer")


# ---------------------------------------------------------------------------
# similarity


def normalize_label(s: str) -> str:
    return _NON_ALNUM_RE.sub(" ", s.lower()).strip()


def _levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


def _ratio(a: str, b: str) -> int:
    if not a and not b:
        return 100
    max_len = max(len(a), len(b))
    dist = _levenshtein(a, b)
    # half-up rounding of 100 * (1 - dist / max_len)
    return (200 * (max_len - dist) + max_len) // (2 * max_len)


def fuzzy_score(a: str, b: str) -> int:
    """Similarity in [0, 100]: max of plain and token-sorted edit ratios."""
    na, nb = normalize_label(a), normalize_label(b)
    plain = _ratio(na, nb)
    ta = " ".join(sorted(na.split()))
    tb = " ".join(sorted(nb.split()))
    token_sort = _ratio(ta, tb)
    return max(plain, token_sort)


# ---------------------------------------------------------------------------
# proposals


def propose_mappings(
    candidates: Iterable[str],
    store: EntityStore,
    threshold: int = DEFAULT_THRESHOLD,
    top_k: int = DEFAULT_TOP_K,
) -> tuple[list[MappingProposal], list[str]]:
    """Best-scoring KE titles per candidate at score >= threshold.

    Returns (proposals, unmatched candidate labels).
    """
    if not 0 <= threshold <= 100:
        raise MappingError(f"threshold out of range: {threshold}")
    proposals: list[MappingProposal] = []
    unmatched: list[str] = []
    events = sorted(store.key_events.values(), key=lambda e: e.id)
    for label in candidates:
        scored = []
        for event in events:
            score = fuzzy_score(label, event.title)
            if score >= threshold:
                scored.append((score, event.id))
        scored.sort(key=lambda t: (-t[0], t[1]))
        if not scored:
            unmatched.append(label)
            continue
        for score, event_id in scored[:top_k]:
            proposals.append(MappingProposal(label, event_id, score))
    return proposals, unmatched


# ---------------------------------------------------------------------------
# review ledger


@dataclass(frozen=True)
class LedgerEntry:
    candidate_label: str
    target_event_id: int
    decision: str  # "accept" | "reject"
    reviewer: str
    date: str = ""
    note: str = ""


@dataclass
class ReviewLedger:
    entries: dict[tuple[str, int], LedgerEntry] = field(default_factory=dict)

    def add(self, entry: LedgerEntry) -> None:
        key = (entry.candidate_label, entry.target_event_id)
        existing = self.entries.get(key)
        if existing is not None and existing.decision != entry.decision:
            raise MappingError(
                f"conflicting ledger decisions for {key}: "
                f"{existing.decision!r} vs {entry.decision!r}"
            )
        self.entries[key] = entry

    @classmethod
    def load_csv(cls, path: Path) -> "ReviewLedger":
        ledger = cls()
        with Path(path).open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                decision = row["decision"].strip().lower()
                if decision not in ("accept", "reject"):
                    raise MappingError(f"unknown ledger decision {row['decision']!r}")
                if not row.get("reviewer", "").strip():
                    raise MappingError(
                        f"ledger entry for {row['candidate_label']!r} has no reviewer"
                    )
                ledger.add(
                    LedgerEntry(
                        candidate_label=row["candidate_label"],
                        target_event_id=int(row["target_event_id"]),
                        decision=decision,
                        reviewer=row["reviewer"].strip(),
                        date=row.get("date", "").strip(),
                        note=row.get("note", "").strip(),
                    )
                )
        return ledger

    def save_csv(self, path: Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["candidate_label", "target_event_id", "decision", "reviewer", "date", "note"]
            )
            for key in sorted(self.entries):
                e = self.entries[key]
                writer.writerow(
                    [e.candidate_label, e.target_event_id, e.decision, e.reviewer, e.date, e.note]
                )


@dataclass(frozen=True)
class AuditRecord:
    candidate_label: str
    target_event_id: int
    decision: str
    reviewer: str
    date: str


@dataclass
class ReviewOutcome:
    accepted: list[MappingProposal]
    rejected: list[MappingProposal]
    pending: list[MappingProposal]
    audit_trail: list[AuditRecord]
    warnings: list[str]


def apply_review_ledger(
    proposals: list[MappingProposal], ledger: ReviewLedger
) -> ReviewOutcome:
    """Gate proposals on explicit human decisions; undecided stay pending."""
    by_key = {(p.candidate_label, p.target_event_id): p for p in proposals}
    outcome = ReviewOutcome([], [], [], [], [])
    decided: set[tuple[str, int]] = set()
    for key in sorted(ledger.entries):
        entry = ledger.entries[key]
        proposal = by_key.get(key)
        if proposal is None:
            outcome.warnings.append(
                f"ledger entry for unknown proposal {key[0]!r} -> event {key[1]}"
            )
            continue
        decided.add(key)
        status = (
            ProposalStatus.ACCEPTED if entry.decision == "accept" else ProposalStatus.REJECTED
        )
        reviewed = MappingProposal(
            candidate_label=proposal.candidate_label,
            target_event_id=proposal.target_event_id,
            score=proposal.score,
            status=status,
            reviewer=entry.reviewer,
            note=entry.note or None,
        )
        outcome.audit_trail.append(
            AuditRecord(key[0], key[1], entry.decision, entry.reviewer, entry.date)
        )
        if status == ProposalStatus.ACCEPTED:
            outcome.accepted.append(reviewed)
        else:
            outcome.rejected.append(reviewed)
    outcome.pending = [
        p for p in proposals if (p.candidate_label, p.target_event_id) not in decided
    ]
    return outcome


# ---------------------------------------------------------------------------
# target family index


def build_target_family_index(
    store: EntityStore, accepted: Optional[list[MappingProposal]] = None
) -> list[BiologicalTargetFamily]:
    """Family list with assay and event links; accepted label mappings whose
    label matches a family name extend that family's event links. Families
    with zero assays or zero events are retained."""
    families = {fid: store.target_families[fid] for fid in sorted(store.target_families)}
    by_name = {normalize_label(f.name): f for f in families.values()}
    for proposal in accepted or []:
        if proposal.status != ProposalStatus.ACCEPTED:
            raise MappingError(
                f"only accepted proposals may enter the index: {proposal.candidate_label!r}"
            )
        family = by_name.get(normalize_label(proposal.candidate_label))
        if family is None:
            continue
        if proposal.target_event_id not in family.event_ids:
            family.event_ids.append(proposal.target_event_id)
    return list(families.values())


# ---------------------------------------------------------------------------
# exports


def proposals_csv(proposals: list[MappingProposal], path: Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["candidate_label", "target_event_id", "score", "status"])
        for p in proposals:
            writer.writerow([p.candidate_label, p.target_event_id, p.score, p.status.value])


def proposals_json(proposals: list[MappingProposal], unmatched: list[str], path: Path) -> None:
    doc = {
        "proposals": [
            {
                "candidate_label": p.candidate_label,
                "target_event_id": p.target_event_id,
                "score": p.score,
                "status": p.status.value,
            }
            for p in proposals
        ],
        "unmatched": list(unmatched),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
