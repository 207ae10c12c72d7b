"""HTML table extraction, header harmonization, and concordance text search
over the four KER evidence fields."""
from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from html.parser import HTMLParser
from pathlib import Path
from typing import Any, Optional

from .model import (
    Citation,
    ConcordanceRating,
    EvidenceRecord,
    KeyEventRelationship,
    DATA_DIR,
    normalize_text,
)
from .store import EntityStore
from .xlsx import write_workbook

_WS_RE = re.compile(r"\s+")
_PUNCT_RE = re.compile(r"[^a-z0-9]+")

SNIPPET_RADIUS = 150

EVIDENCE_FIELDS = KeyEventRelationship.EVIDENCE_FIELDS

CANONICAL_COLUMNS = (
    "citation", "first_author", "species", "experiment_type",
    "dose_concordance", "temporal_concordance", "incidence_concordance",
    "biological_plausibility", "upstream_observation", "downstream_observation",
    "notes",
)

EVIDENCE_COLUMNS = frozenset(
    {"dose_concordance", "temporal_concordance", "incidence_concordance",
     "biological_plausibility"}
)


class TableDefect(str, Enum):
    ROWSPAN_PRESENT = "RowspanPresent"
    RAGGED_ROWS = "RaggedRows"
    NO_HEADER = "NoHeader"


class RejectionReason(str, Enum):
    TOO_FEW_MAPPED_COLUMNS = "TooFewMappedColumns"
    NO_EVIDENCE_COLUMN = "NoEvidenceColumn"
    ROWSPAN_PRESENT = "RowspanPresent"
    RAGGED_ROWS = "RaggedRows"


class ConcordanceType(str, Enum):
    DOSE = "Dose"
    TEMPORAL = "Temporal"
    INCIDENCE = "Incidence"


CONCORDANCE_PATTERNS = (
    (ConcordanceType.DOSE, re.compile(r"dose[- ]?(response )?concordance", re.IGNORECASE)),
    (ConcordanceType.TEMPORAL, re.compile(r"temporal concordance", re.IGNORECASE)),
    (ConcordanceType.INCIDENCE, re.compile(r"incidence concordance", re.IGNORECASE)),
)


@dataclass
class RawTable:
    source_ker_id: int
    source_field: str
    headers: list[str]
    rows: list[list[str]]
    defects: list[TableDefect] = field(default_factory=list)


@dataclass
class HarmonizedTable:
    source_ker_id: int
    source_field: str
    column_map: dict[str, str]
    rows: list[dict[str, str]]


@dataclass(frozen=True)
class ConcordanceMatch:
    ker_id: int
    field: str
    concordance_type: ConcordanceType
    snippet: str
    offset: int


# ---------------------------------------------------------------------------
# extraction


class _Cell:
    __slots__ = ("chunks", "is_header", "colspan", "rowspan")

    def __init__(self, is_header: bool, colspan: int, rowspan: int) -> None:
        self.chunks: list[str] = []
        self.is_header = is_header
        self.colspan = colspan
        self.rowspan = rowspan

    @property
    def text(self) -> str:
        return _WS_RE.sub(" ", "".join(self.chunks)).strip()


class _TableExtractor(HTMLParser):
    """Collects top-level table elements; nested tables fold into cell text."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.tables: list[list[list[_Cell]]] = []
        self.rowspan_seen: list[bool] = []
        self._depth = 0
        self._rows: list[list[_Cell]] = []
        self._row: Optional[list[_Cell]] = None
        self._cell: Optional[_Cell] = None

    def handle_starttag(self, tag: str, attrs: list[tuple[str, Optional[str]]]) -> None:
        attrd = dict(attrs)
        if tag == "table":
            self._depth += 1
            if self._depth == 1:
                self._rows = []
                self._row = None
                self._cell = None
                self.rowspan_seen.append(False)
            return
        if self._depth != 1:
            if self._cell is not None:
                self._cell.chunks.append(" ")
            return
        if tag == "tr":
            self._row = []
            self._rows.append(self._row)
            self._cell = None
        elif tag in ("td", "th"):
            if self._row is None:
                self._row = []
                self._rows.append(self._row)
            cell = _Cell(
                is_header=tag == "th",
                colspan=_span(attrd.get("colspan")),
                rowspan=_span(attrd.get("rowspan")),
            )
            if cell.rowspan > 1:
                self.rowspan_seen[-1] = True
            self._row.append(cell)
            self._cell = cell
        elif self._cell is not None:
            self._cell.chunks.append(" ")

    def handle_endtag(self, tag: str) -> None:
        if tag == "table":
            if self._depth == 1:
                self.tables.append(self._rows)
                self._rows = []
                self._row = None
                self._cell = None
            self._depth = max(0, self._depth - 1)
        elif self._depth == 1 and tag in ("td", "th"):
            self._cell = None
        elif self._depth == 1 and tag == "tr":
            self._row = None
            self._cell = None
        elif self._cell is not None:
            self._cell.chunks.append(" ")

    def handle_data(self, data: str) -> None:
        if self._cell is not None:
            self._cell.chunks.append(data)


def _span(value: Optional[str]) -> int:
    try:
        return max(1, int(value)) if value else 1
    except ValueError:
        return 1


def extract_tables(html_fragment: str, ker_id: int, field_name: str) -> list[RawTable]:
    """One RawTable per top-level table element; never raises on bad markup."""
    if not html_fragment or "<table" not in html_fragment.lower():
        return []
    parser = _TableExtractor()
    try:
        parser.feed(html_fragment)
        parser.close()
    except Exception:
        return []
    tables = []
    for rows, rowspan_seen in zip(parser.tables, parser.rowspan_seen):
        rows = [r for r in rows if r]
        defects: list[TableDefect] = []
        if rowspan_seen:
            defects.append(TableDefect.ROWSPAN_PRESENT)
        if not rows:
            tables.append(RawTable(ker_id, field_name, [], [], [TableDefect.NO_HEADER]))
            continue
        header_row = next((r for r in rows if any(c.is_header for c in r)), rows[0])
        headers = _expand(header_row)
        data_rows = [_expand(r) for r in rows if r is not header_row]
        if any(len(r) != len(headers) for r in data_rows):
            defects.append(TableDefect.RAGGED_ROWS)
        tables.append(RawTable(ker_id, field_name, headers, data_rows, defects))
    return tables


def _expand(row: list[_Cell]) -> list[str]:
    cells: list[str] = []
    for cell in row:
        cells.extend([cell.text] * cell.colspan)
    return cells


# ---------------------------------------------------------------------------
# harmonization


def normalize_header(header: str) -> str:
    return _WS_RE.sub(" ", _PUNCT_RE.sub(" ", header.lower())).strip()


def load_synonym_map(path: Optional[Path] = None) -> dict[str, str]:
    """Flattened map: normalized synonym -> canonical column."""
    doc = json.loads((path or DATA_DIR / "header_synonyms.json").read_text(encoding="utf-8"))
    flat: dict[str, str] = {}
    for canonical, synonyms in doc.items():
        flat[normalize_header(canonical)] = canonical
        for syn in synonyms:
            flat.setdefault(normalize_header(syn), canonical)
    return flat


_SYNONYMS = load_synonym_map()


def harmonize_table(
    raw: RawTable, synonym_map: Optional[dict[str, str]] = None
) -> tuple[Optional[HarmonizedTable], Optional[RejectionReason]]:
    synonym_map = synonym_map or _SYNONYMS
    if TableDefect.ROWSPAN_PRESENT in raw.defects:
        return None, RejectionReason.ROWSPAN_PRESENT
    if TableDefect.RAGGED_ROWS in raw.defects:
        return None, RejectionReason.RAGGED_ROWS
    column_map: dict[str, str] = {}
    mapped_canonicals: dict[str, int] = {}
    for idx, header in enumerate(raw.headers):
        canonical = synonym_map.get(normalize_header(header))
        if canonical and canonical not in mapped_canonicals:
            column_map[header] = canonical
            mapped_canonicals[canonical] = idx
    if not EVIDENCE_COLUMNS & mapped_canonicals.keys():
        return None, RejectionReason.NO_EVIDENCE_COLUMN
    if len(mapped_canonicals) < 2:
        return None, RejectionReason.TOO_FEW_MAPPED_COLUMNS
    rows = [
        {canonical: row[idx] for canonical, idx in sorted(mapped_canonicals.items())}
        for row in raw.rows
    ]
    return HarmonizedTable(raw.source_ker_id, raw.source_field, column_map, rows), None


_RATING_TOKENS = {
    "yes": ConcordanceRating.SUPPORTING,
    "✓": ConcordanceRating.SUPPORTING,
    "supporting": ConcordanceRating.SUPPORTING,
    "no": ConcordanceRating.CONFLICTING,
    "✗": ConcordanceRating.CONFLICTING,
    "conflicting": ConcordanceRating.CONFLICTING,
    "nr": ConcordanceRating.NOT_RELEVANT,
    "not relevant": ConcordanceRating.NOT_RELEVANT,
    "": ConcordanceRating.UNASSESSED,
}


def parse_rating(cell_text: str) -> ConcordanceRating:
    return _RATING_TOKENS.get(
        _WS_RE.sub(" ", cell_text.strip().lower()), ConcordanceRating.UNASSESSED
    )


def evidence_record_stubs(table: HarmonizedTable, start_id: int = 1) -> list[EvidenceRecord]:
    """Convert harmonized rows into Evidence stubs (citation plus ratings)."""
    stubs = []
    for i, row in enumerate(table.rows):
        title = row.get("citation", "")
        first_author = row.get("first_author", "")
        if not (title.strip() or first_author.strip()):
            title = f"KER {table.source_ker_id} {table.source_field} row {i + 1}"
        stubs.append(
            EvidenceRecord(
                id=start_id + i,
                ker_id=table.source_ker_id,
                citation=Citation(title=title, first_author=first_author),
                biological_plausibility=parse_rating(row.get("biological_plausibility", "")),
                dose_concordance=parse_rating(row.get("dose_concordance", "")),
                temporal_concordance=parse_rating(row.get("temporal_concordance", "")),
                incidence_concordance=parse_rating(row.get("incidence_concordance", "")),
            )
        )
    return stubs


@dataclass
class KerOutcome:
    ker_id: int
    table_count: int
    accepted: list[HarmonizedTable] = field(default_factory=list)
    rejections: list[tuple[str, RejectionReason]] = field(default_factory=list)

    @property
    def harmonizable(self) -> bool:
        return bool(self.accepted)


@dataclass
class HarmonizationReport:
    total_kers: int
    kers_with_tables: int
    kers_harmonizable: int
    outcomes: list[KerOutcome]


def harmonize_ker_evidence(
    store: EntityStore, synonym_map: Optional[dict[str, str]] = None
) -> HarmonizationReport:
    outcomes = []
    with_tables = 0
    harmonizable = 0
    for ker_id in sorted(store.kers):
        ker = store.kers[ker_id]
        outcome = KerOutcome(ker_id=ker_id, table_count=0)
        for field_name in EVIDENCE_FIELDS:
            for raw in extract_tables(getattr(ker, field_name), ker_id, field_name):
                outcome.table_count += 1
                table, reason = harmonize_table(raw, synonym_map)
                if table is not None:
                    outcome.accepted.append(table)
                else:
                    outcome.rejections.append((field_name, reason))
        if outcome.table_count:
            with_tables += 1
            if outcome.harmonizable:
                harmonizable += 1
            outcomes.append(outcome)
    return HarmonizationReport(
        total_kers=len(store.kers),
        kers_with_tables=with_tables,
        kers_harmonizable=harmonizable,
        outcomes=outcomes,
    )


# ---------------------------------------------------------------------------
# concordance search


def search_concordance(
    store: EntityStore,
) -> tuple[list[ConcordanceMatch], dict[str, Any]]:
    """Case-insensitive concordance phrase scan over normalized field text."""
    matches: list[ConcordanceMatch] = []
    kers_with_matches: set[int] = set()
    type_counts = {t.value: 0 for t, _ in CONCORDANCE_PATTERNS}
    for ker_id in sorted(store.kers):
        ker = store.kers[ker_id]
        for field_name in EVIDENCE_FIELDS:
            text = normalize_text(getattr(ker, field_name))
            if not text:
                continue
            field_matches = []
            for ctype, pattern in CONCORDANCE_PATTERNS:
                for m in pattern.finditer(text):
                    lo = max(0, m.start() - SNIPPET_RADIUS)
                    hi = min(len(text), m.end() + SNIPPET_RADIUS)
                    field_matches.append(
                        ConcordanceMatch(
                            ker_id=ker_id,
                            field=field_name,
                            concordance_type=ctype,
                            snippet=text[lo:hi],
                            offset=m.start(),
                        )
                    )
                    type_counts[ctype.value] += 1
                    kers_with_matches.add(ker_id)
            matches.extend(sorted(field_matches, key=lambda x: x.offset))
    summary = {
        "total_kers": len(store.kers),
        "kers_with_matches": len(kers_with_matches),
        "match_count": len(matches),
        "by_type": type_counts,
    }
    return matches, summary


# ---------------------------------------------------------------------------
# exports


def concordance_csv(matches: list[ConcordanceMatch], path: Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ker_id", "field", "type", "offset", "snippet"])
        for m in matches:
            writer.writerow([m.ker_id, m.field, m.concordance_type.value, m.offset, m.snippet])


def concordance_json(matches: list[ConcordanceMatch], summary: dict[str, Any], path: Path) -> None:
    doc = {
        "summary": summary,
        "matches": [
            {
                "ker_id": m.ker_id,
                "field": m.field,
                "type": m.concordance_type.value,
                "offset": m.offset,
                "snippet": m.snippet,
            }
            for m in matches
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _summary_rows(report: HarmonizationReport) -> list[list[Any]]:
    rows: list[list[Any]] = [
        ["total_kers", report.total_kers],
        ["kers_with_tables", report.kers_with_tables],
        ["kers_harmonizable", report.kers_harmonizable],
        [],
        ["ker_id", "table_count", "harmonizable", "rejections"],
    ]
    for outcome in report.outcomes:
        rows.append([
            outcome.ker_id,
            outcome.table_count,
            str(outcome.harmonizable).lower(),
            "; ".join(f"{f}:{r.value}" for f, r in outcome.rejections),
        ])
    return rows


def _ker_sheet_rows(outcome: KerOutcome) -> list[list[Any]]:
    rows: list[list[Any]] = []
    for table in outcome.accepted:
        columns = sorted(set(table.rows[0].keys()) if table.rows else set(table.column_map.values()))
        rows.append(["field", table.source_field])
        rows.append(columns)
        for row in table.rows:
            rows.append([row.get(c, "") for c in columns])
        rows.append([])
    return rows


def report_workbook(report: HarmonizationReport, path: Path) -> None:
    sheets: list[tuple[str, list[list[Any]]]] = [("summary", _summary_rows(report))]
    for outcome in report.outcomes:
        if outcome.harmonizable:
            sheets.append((f"ker_{outcome.ker_id}", _ker_sheet_rows(outcome)))
    write_workbook(Path(path), sheets)


def report_csv_bundle(report: HarmonizationReport, out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    summary_path = out_dir / "summary.csv"
    with summary_path.open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(_summary_rows(report))
    written.append(summary_path)
    for outcome in report.outcomes:
        if not outcome.harmonizable:
            continue
        ker_path = out_dir / f"ker_{outcome.ker_id}.csv"
        with ker_path.open("w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(_ker_sheet_rows(outcome))
        written.append(ker_path)
    return written
