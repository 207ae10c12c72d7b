"""Completion percentages, corpus averages, and the Event Integration Score."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .model import DATA_DIR, KeyEvent, LicenseStatus, is_nonempty
from .store import EntityStore


class ScoringError(ValueError):
    pass


def load_field_manifests(path: Optional[Path] = None) -> dict[str, list[str]]:
    return json.loads((path or DATA_DIR / "field_manifests.json").read_text(encoding="utf-8"))


_MANIFESTS = load_field_manifests()


@dataclass(frozen=True)
class CompletionScore:
    nonempty_count: int
    total_count: int

    def __post_init__(self) -> None:
        if self.total_count <= 0:
            raise ScoringError("completion manifest is empty")

    @property
    def fraction(self) -> Fraction:
        return Fraction(100 * self.nonempty_count, self.total_count)

    @property
    def percent(self) -> Decimal:
        """Display value, rounded half-up to 2 decimals."""
        exact = Decimal(self.fraction.numerator) / Decimal(self.fraction.denominator)
        return exact.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def as_document(entity: Any, kind: str) -> dict[str, Any]:
    """Flatten an entity into the countable content fields for its kind."""
    if kind == "key_event":
        e = entity
        return {
            "title": e.title,
            "lobo": e.lobo.value if e.lobo else None,
            "kecs": e.kecs,
            "cell_term": e.cell_term,
            "organ_term": e.organ_term,
            "taxa": list(e.applicability.taxa),
            "sexes": list(e.applicability.sexes),
            "life_stages": list(e.applicability.life_stages),
            "measurement_text": e.measurement_text,
            "description": e.description,
            "references_text": e.references_text,
        }
    if kind == "ker":
        e = entity
        return {
            "weight_of_evidence": e.weight_of_evidence,
            "empirical_support": e.empirical_support,
            "biological_plausibility": e.biological_plausibility,
            "quantitative_understanding": e.quantitative_understanding,
            "description": e.description,
            "taxa": list(e.applicability.taxa),
            "sexes": list(e.applicability.sexes),
            "life_stages": list(e.applicability.life_stages),
            "citations": e.citations,
        }
    if kind == "aop":
        e = entity
        return {
            "title": e.title,
            "abstract": e.abstract,
            "taxa": list(e.applicability.taxa),
            "sexes": list(e.applicability.sexes),
            "life_stages": list(e.applicability.life_stages),
            "citations": e.citations,
        }
    raise ScoringError(f"unknown entity kind {kind!r}")


def completion_score(
    document: dict[str, Any], field_manifest: list[str]
) -> CompletionScore:
    if not field_manifest:
        raise ScoringError("completion manifest is empty")
    nonempty = sum(1 for name in field_manifest if is_nonempty(document.get(name)))
    return CompletionScore(nonempty_count=nonempty, total_count=len(field_manifest))


def entity_completion(entity: Any, kind: str,
                      manifests: Optional[dict[str, list[str]]] = None) -> CompletionScore:
    manifests = manifests or _MANIFESTS
    return completion_score(as_document(entity, kind), manifests[kind])


def harmonized_completion(harmonized: Any, kind: str,
                          manifests: Optional[dict[str, list[str]]] = None) -> CompletionScore:
    # harmonized entities carry content fields mirroring the source kind,
    # scored with the same manifest (initially all empty)
    manifests = manifests or _MANIFESTS
    return completion_score(dict(harmonized.content), manifests[kind])


def average_completion(
    store: EntityStore, include_harmonized: bool = False
) -> dict[str, Optional[Decimal]]:
    """Arithmetic mean of entity completion percents, per kind."""
    def mean(fractions: list[Fraction]) -> Optional[Decimal]:
        if not fractions:
            return None
        total = sum(fractions, Fraction(0)) / len(fractions)
        return (Decimal(total.numerator) / Decimal(total.denominator)).quantize(
            Decimal("0.01"), rounding=ROUND_HALF_UP
        )

    events = [entity_completion(e, "key_event").fraction for e in store.key_events.values()]
    kers = [entity_completion(k, "ker").fraction for k in store.kers.values()]
    aops = [entity_completion(a, "aop").fraction for a in store.aops.values()]
    if include_harmonized:
        events += [harmonized_completion(h, "key_event").fraction
                   for h in store.harmonized_events.values()]
        aops += [harmonized_completion(h, "aop").fraction
                 for h in store.harmonized_aops.values()]
    return {"events": mean(events), "kers": mean(kers), "aops": mean(aops)}


# ---------------------------------------------------------------------------
# Event Integration Score


@dataclass(frozen=True)
class ScoreWeights:
    per_aop: int = 1
    per_in_programme_aop: int = 1
    per_endorsed_aop: int = 2
    completion_tier_points: tuple[tuple[Fraction, int], ...] = (
        (Fraction(25), 1),
        (Fraction(50), 2),
        (Fraction(75), 3),
    )
    method_text_bonus: int = 2
    all_ofa_penalty: int = -4

    def __post_init__(self) -> None:
        if not (self.per_endorsed_aop >= self.per_in_programme_aop >= 0):
            raise ScoringError("require per_endorsed_aop >= per_in_programme_aop >= 0")
        if self.all_ofa_penalty >= 0:
            raise ScoringError("all_ofa_penalty must be negative")

    def tier(self, completion_percent: Fraction) -> int:
        points = 0
        for threshold, value in sorted(self.completion_tier_points):
            if completion_percent >= threshold:
                points = value
        return points

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ScoreWeights":
        tiers = tuple(
            sorted((Fraction(k), int(v)) for k, v in doc["completion_tier_points"].items())
        )
        return cls(
            per_aop=int(doc["per_aop"]),
            per_in_programme_aop=int(doc["per_in_programme_aop"]),
            per_endorsed_aop=int(doc["per_endorsed_aop"]),
            completion_tier_points=tiers,
            method_text_bonus=int(doc["method_text_bonus"]),
            all_ofa_penalty=int(doc["all_ofa_penalty"]),
        )

    @classmethod
    def load(cls, path: Optional[Path] = None) -> "ScoreWeights":
        doc = json.loads((path or DATA_DIR / "default_weights.json").read_text(encoding="utf-8"))
        return cls.from_dict(doc)


DEFAULT_WEIGHTS = ScoreWeights()


@dataclass(frozen=True)
class EventIntegrationScore:
    value: int
    components: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        if self.value != sum(v for _, v in self.components):
            raise ScoringError("EIS components do not sum to the value")


@dataclass(frozen=True)
class EventScoreRow:
    event_id: int
    title: str
    eis: EventIntegrationScore
    completion: CompletionScore
    aop_count: int
    in_programme_count: int
    endorsed_count: int
    ofa_count: int
    all_ofa: bool
    has_method_text: bool


def event_integration_score(
    event: KeyEvent,
    store: EntityStore,
    weights: ScoreWeights = DEFAULT_WEIGHTS,
) -> EventIntegrationScore:
    aops = store.aops_for_event(event.id)
    in_programme = sum(1 for a in aops if a.oecd_status.in_programme)
    endorsed = sum(1 for a in aops if a.oecd_status.value == "Endorsed")
    all_ofa = bool(aops) and all(
        a.license_status == LicenseStatus.OPEN_FOR_ADOPTION for a in aops
    )
    completion = entity_completion(event, "key_event")
    components = (
        ("aop_count", weights.per_aop * len(aops)),
        ("in_programme", weights.per_in_programme_aop * in_programme),
        ("endorsed", weights.per_endorsed_aop * endorsed),
        ("completion_tier", weights.tier(completion.fraction)),
        ("method_text", weights.method_text_bonus if event.has_method_text() else 0),
        ("all_ofa_penalty", weights.all_ofa_penalty if all_ofa else 0),
    )
    return EventIntegrationScore(
        value=sum(v for _, v in components), components=components
    )


def score_event(
    event: KeyEvent, store: EntityStore, weights: ScoreWeights = DEFAULT_WEIGHTS
) -> EventScoreRow:
    aops = store.aops_for_event(event.id)
    return EventScoreRow(
        event_id=event.id,
        title=event.title,
        eis=event_integration_score(event, store, weights),
        completion=entity_completion(event, "key_event"),
        aop_count=len(aops),
        in_programme_count=sum(1 for a in aops if a.oecd_status.in_programme),
        endorsed_count=sum(1 for a in aops if a.oecd_status.value == "Endorsed"),
        ofa_count=sum(
            1 for a in aops if a.license_status == LicenseStatus.OPEN_FOR_ADOPTION
        ),
        all_ofa=bool(aops)
        and all(a.license_status == LicenseStatus.OPEN_FOR_ADOPTION for a in aops),
        has_method_text=event.has_method_text(),
    )


def rank_events(
    store: EntityStore, weights: ScoreWeights = DEFAULT_WEIGHTS
) -> list[EventScoreRow]:
    """Events sorted by EIS descending, ties broken by ascending event id."""
    rows = [score_event(e, store, weights) for e in store.key_events.values()]
    rows.sort(key=lambda r: (-r.eis.value, r.event_id))
    return rows


RANKING_CSV_COLUMNS = (
    "event_id", "title", "eis", "completion_percent", "aop_count",
    "in_programme_count", "endorsed_count", "all_ofa", "has_method_text",
)


def ranking_csv_rows(rows: list[EventScoreRow]) -> list[dict[str, Any]]:
    return [
        {
            "event_id": r.event_id,
            "title": r.title,
            "eis": r.eis.value,
            "completion_percent": str(r.completion.percent),
            "aop_count": r.aop_count,
            "in_programme_count": r.in_programme_count,
            "endorsed_count": r.endorsed_count,
            "all_ofa": str(r.all_ofa).lower(),
            "has_method_text": str(r.has_method_text).lower(),
        }
        for r in rows
    ]


def ranking_json(rows: list[EventScoreRow]) -> list[dict[str, Any]]:
    out = []
    for r in rows:
        doc = dict(ranking_csv_rows([r])[0])
        doc["all_ofa"] = r.all_ofa
        doc["has_method_text"] = r.has_method_text
        doc["components"] = {name: value for name, value in r.eis.components}
        out.append(doc)
    return out
