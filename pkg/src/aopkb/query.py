"""Faceted event search, graph searches, and applicability roll-up."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional
from urllib.parse import parse_qsl, quote, urlencode

from .model import Lobo
from .scoring import EventScoreRow, ScoreWeights, DEFAULT_WEIGHTS, score_event
from .store import EntityStore
from . import evidence as evidence_mod


class QueryError(ValueError):
    pass


class FilterParseError(QueryError):
    def __init__(self, text: str) -> None:
        super().__init__(f"cannot parse numeric filter {text!r}")
        self.text = text


class NotFoundError(QueryError):
    pass


# ---------------------------------------------------------------------------
# numeric filters

_FILTER_RE = re.compile(r"^\s*(>=|<=|>|<|=)?\s*(-?\d+(?:\.\d+)?)\s*$")

_OPS: dict[str, Callable[[float, float], bool]] = {
    ">=": lambda x, v: x >= v,
    "<=": lambda x, v: x <= v,
    ">": lambda x, v: x > v,
    "<": lambda x, v: x < v,
    "=": lambda x, v: x == v,
}


@dataclass(frozen=True)
class NumericFilter:
    op: str
    value: float

    def test(self, x: float) -> bool:
        return _OPS[self.op](x, self.value)

    def __str__(self) -> str:
        value = int(self.value) if self.value == int(self.value) else self.value
        return f"{self.op}{value}"


def parse_numeric_filter(text: str) -> NumericFilter:
    """Leading operator among >=, <=, >, <, =; a bare number means equality."""
    m = _FILTER_RE.match(text or "")
    if not m:
        raise FilterParseError(text)
    return NumericFilter(op=m.group(1) or "=", value=float(m.group(2)))


# ---------------------------------------------------------------------------
# event query

NUMERIC_FIELDS = ("complete", "eis", "aops", "ofa", "prog", "endorsed", "kecs")

COLUMN_KEYS = (
    "action", "cell", "organ", "lobo",
    "method", "complete", "kecs", "eis",
    "aops", "ofa", "prog", "endorsed",
)

DEFAULT_COLUMNS = ("lobo", "method", "complete", "eis", "aops", "endorsed")
DEFAULT_SORT = ("id", "asc")
DEFAULT_PAGE_SIZE = 25

SORTABLE = ("id", "title") + COLUMN_KEYS


@dataclass(frozen=True)
class EventQuery:
    id_filter: Optional[tuple[int, ...]] = None
    title_substring: Optional[str] = None
    lobo: Optional[Lobo] = None
    has_method_text: Optional[bool] = None
    numeric_filters: tuple[tuple[str, NumericFilter], ...] = ()
    selected_columns: tuple[str, ...] = DEFAULT_COLUMNS
    sort: tuple[str, str] = DEFAULT_SORT
    page: int = 1
    page_size: int = DEFAULT_PAGE_SIZE

    def __post_init__(self) -> None:
        if self.page < 1:
            raise QueryError(f"page must be positive: {self.page}")
        if self.page_size < 1:
            raise QueryError(f"page_size must be >= 1: {self.page_size}")
        if self.sort[0] not in SORTABLE:
            raise QueryError(f"unknown sort column {self.sort[0]!r}")
        if self.sort[1] not in ("asc", "desc"):
            raise QueryError(f"sort direction must be asc or desc: {self.sort[1]!r}")
        for key, _ in self.numeric_filters:
            if key not in NUMERIC_FIELDS:
                raise QueryError(f"unknown numeric filter field {key!r}")
        for col in self.selected_columns:
            if col not in COLUMN_KEYS:
                raise QueryError(f"unknown column {col!r}")


@dataclass(frozen=True)
class Page:
    rows: tuple[dict[str, Any], ...]
    total_count: int
    page: int
    page_size: int

    @property
    def page_count(self) -> int:
        return math.ceil(self.total_count / self.page_size) if self.total_count else 0


def parse_id_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part.strip()) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise QueryError(f"bad id list {text!r}") from exc


def _row_values(r: EventScoreRow, store: EntityStore) -> dict[str, Any]:
    event = store.key_events[r.event_id]
    return {
        "id": r.event_id,
        "title": r.title,
        "action": event.kecs[0].action if event.kecs else "",
        "cell": event.cell_term.label if event.cell_term else "",
        "organ": event.organ_term.label if event.organ_term else "",
        "lobo": event.lobo.value if event.lobo else "",
        "method": r.has_method_text,
        "complete": float(r.completion.fraction),
        "kecs": len(event.kecs),
        "eis": r.eis.value,
        "aops": r.aop_count,
        "ofa": r.ofa_count,
        "prog": r.in_programme_count,
        "endorsed": r.endorsed_count,
    }


def filter_events(
    store: EntityStore,
    query: EventQuery,
    weights: ScoreWeights = DEFAULT_WEIGHTS,
) -> Page:
    """Conjunction of all active filters; deterministic sort and pagination."""
    rows = []
    for event_id in sorted(store.key_events):
        event = store.key_events[event_id]
        if query.id_filter is not None and event_id not in query.id_filter:
            continue
        if query.title_substring and query.title_substring.lower() not in event.title.lower():
            continue
        if query.lobo is not None and event.lobo != query.lobo:
            continue
        scored = score_event(event, store, weights)
        if query.has_method_text is not None and scored.has_method_text != query.has_method_text:
            continue
        values = _row_values(scored, store)
        if all(f.test(float(values[key])) for key, f in query.numeric_filters):
            rows.append(values)

    sort_key, direction = query.sort
    rows.sort(key=lambda v: v["id"])
    if sort_key != "id":
        rows.sort(
            key=lambda v: (v[sort_key] is None, v[sort_key]),
            reverse=direction == "desc",
        )
    elif direction == "desc":
        rows.reverse()

    total = len(rows)
    start = (query.page - 1) * query.page_size
    visible = ("id", "title") + tuple(query.selected_columns)
    page_rows = tuple(
        {k: row[k] for k in visible} for row in rows[start : start + query.page_size]
    )
    return Page(rows=page_rows, total_count=total, page=query.page, page_size=query.page_size)


# ---------------------------------------------------------------------------
# canonical query-string serialization ("Share Results" links)


def encode_query(query: EventQuery) -> str:
    """Canonical URL query string: sorted keys, defaults omitted."""
    params: dict[str, str] = {}
    if query.id_filter is not None:
        params["id"] = ",".join(str(i) for i in query.id_filter)
    if query.title_substring:
        params["title"] = query.title_substring
    if query.lobo is not None:
        params["lobo"] = query.lobo.value
    if query.has_method_text is not None:
        params["method"] = "true" if query.has_method_text else "false"
    for key, f in sorted(query.numeric_filters):
        params[key] = str(f)
    if tuple(query.selected_columns) != DEFAULT_COLUMNS:
        params["cols"] = ",".join(query.selected_columns)
    if query.sort != DEFAULT_SORT:
        params["sort"] = f"{query.sort[0]}.{query.sort[1]}"
    if query.page != 1:
        params["page"] = str(query.page)
    if query.page_size != DEFAULT_PAGE_SIZE:
        params["size"] = str(query.page_size)
    return urlencode(sorted(params.items()), quote_via=quote)


def decode_query(query_string: str) -> tuple[EventQuery, list[str]]:
    """Inverse of encode_query; unknown keys are reported, not fatal."""
    kwargs: dict[str, Any] = {}
    numeric: list[tuple[str, NumericFilter]] = []
    unknown: list[str] = []
    for key, value in parse_qsl(query_string, keep_blank_values=True):
        if key == "id":
            kwargs["id_filter"] = parse_id_list(value)
        elif key == "title":
            kwargs["title_substring"] = value
        elif key == "lobo":
            kwargs["lobo"] = Lobo(value)
        elif key == "method":
            kwargs["has_method_text"] = value == "true"
        elif key in NUMERIC_FIELDS:
            numeric.append((key, parse_numeric_filter(value)))
        elif key == "cols":
            kwargs["selected_columns"] = tuple(c for c in value.split(",") if c)
        elif key == "sort":
            col, _, direction = value.partition(".")
            kwargs["sort"] = (col, direction or "asc")
        elif key == "page":
            kwargs["page"] = int(value)
        elif key == "size":
            kwargs["page_size"] = int(value)
        else:
            unknown.append(key)
    if numeric:
        kwargs["numeric_filters"] = tuple(sorted(numeric))
    return EventQuery(**kwargs), unknown


# ---------------------------------------------------------------------------
# graph searches


@dataclass(frozen=True)
class EventKerEntry:
    ker_id: int
    direction: str  # "Upstream" | "Downstream": the queried event's position
    other_event_id: int
    aops: tuple[dict[str, Any], ...]


def event_kers(store: EntityStore, event_id: int) -> list[EventKerEntry]:
    """Every KER touching the event, with the AOPs containing each KER."""
    if event_id not in store.key_events:
        raise NotFoundError(f"unknown event id {event_id}")
    entries = []
    for ker in store.kers_for_event(event_id):
        if ker.upstream_event_id == event_id:
            direction, other = "Upstream", ker.downstream_event_id
        else:
            direction, other = "Downstream", ker.upstream_event_id
        aops = []
        for aop_id in sorted(store.aop_to_kers):
            if ker.id in store.aop_to_kers[aop_id] and aop_id in store.aops:
                aop = store.aops[aop_id]
                aops.append(
                    {
                        "aop_id": aop.id,
                        "title": aop.title,
                        "open_for_adoption": aop.license_status.value == "OpenForAdoption",
                        "oecd_endorsed": aop.oecd_status.value == "Endorsed",
                    }
                )
        entries.append(
            EventKerEntry(ker.id, direction, other, tuple(aops))
        )
    entries.sort(key=lambda e: e.ker_id)
    return entries


@dataclass(frozen=True)
class UnlinkedPair:
    aop_id: int
    event_id_a: int
    event_id_b: int

    def __post_init__(self) -> None:
        if self.event_id_a >= self.event_id_b:
            raise QueryError("pair must be ordered event_id_a < event_id_b")


def unlinked_event_pairs(store: EntityStore, scope: str = "WithinAop") -> list[UnlinkedPair]:
    """Member-event pairs of each AOP not connected by a KER.

    WithinAop considers only KERs listed in the same AOP; Global considers
    every KER in the store.
    """
    if scope not in ("WithinAop", "Global"):
        raise QueryError(f"unknown scope {scope!r}")
    global_edges = {
        frozenset((k.upstream_event_id, k.downstream_event_id)) for k in store.kers.values()
    }
    pairs = []
    for aop_id in sorted(store.aops):
        aop = store.aops[aop_id]
        members = sorted(set(aop.event_ids()))
        if scope == "Global":
            edges = global_edges
        else:
            edges = set()
            for ker_id in aop.ker_ids():
                ker = store.kers.get(ker_id)
                if ker is not None:
                    edges.add(frozenset((ker.upstream_event_id, ker.downstream_event_id)))
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                if frozenset((a, b)) not in edges:
                    pairs.append(UnlinkedPair(aop_id, a, b))
    return pairs


def kers_with_tabulated_evidence(
    store: EntityStore,
    report: Optional[evidence_mod.HarmonizationReport] = None,
) -> list[dict[str, Any]]:
    """One row per KER where table extraction found at least one table."""
    report = report or evidence_mod.harmonize_ker_evidence(store)
    rows = []
    for outcome in report.outcomes:
        fields_with_tables = sorted(
            {t.source_field for t in outcome.accepted}
            | {f for f, _ in outcome.rejections}
        )
        rows.append(
            {
                "ker_id": outcome.ker_id,
                "fields": fields_with_tables,
                "table_count": outcome.table_count,
                "harmonizable": outcome.harmonizable,
            }
        )
    return rows


def rollup_applicability(store: EntityStore, aop_id: int) -> dict[str, Any]:
    """Union of member-event applicability terms with contributing-KE counts;
    the AOP's own declared applicability is reported alongside."""
    if aop_id not in store.aops:
        raise NotFoundError(f"unknown AOP id {aop_id}")
    aop = store.aops[aop_id]
    taxa: dict[str, dict[str, Any]] = {}
    sexes: dict[str, int] = {}
    stages: dict[str, int] = {}
    for event_id in sorted(set(aop.event_ids())):
        event = store.key_events.get(event_id)
        if event is None:
            continue
        for term, _evidence in event.applicability.taxa:
            entry = taxa.setdefault(term.curie, {"curie": term.curie, "label": term.label, "count": 0})
            entry["count"] += 1
        for sex in event.applicability.sexes:
            sexes[sex] = sexes.get(sex, 0) + 1
        for stage in event.applicability.life_stages:
            stages[stage] = stages.get(stage, 0) + 1
    declared = aop.applicability
    return {
        "aop_id": aop_id,
        "taxa": [taxa[k] for k in sorted(taxa)],
        "sexes": [{"term": k, "count": sexes[k]} for k in sorted(sexes)],
        "life_stages": [{"term": k, "count": stages[k]} for k in sorted(stages)],
        "declared": {
            "taxa": [{"curie": t.curie, "label": t.label, "evidence": ev} for t, ev in declared.taxa],
            "sexes": list(declared.sexes),
            "life_stages": list(declared.life_stages),
        },
    }
