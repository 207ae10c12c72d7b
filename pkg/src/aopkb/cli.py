"""Command-line entry point.

Every command is a thin veneer over the library modules; outputs are
byte-identical across runs for the same inputs (timestamps live only in
snapshot sidecar files). Exit codes: 0 success, 1 user error, 2 data error.
"""
from __future__ import annotations

import csv
import json
import sys
from pathlib import Path
from typing import Any, Optional

import click

from . import evidence as evidence_mod
from . import ingest as ingest_mod
from . import mapping as mapping_mod
from . import scoring as scoring_mod
from .model import ModelError
from .query import QueryError
from .service import ApiConfig, serve as serve_api
from .store import EntityStore, store_to_dict

_DATA_ERRORS = (
    ingest_mod.IngestError,
    ModelError,
    mapping_mod.MappingError,
    scoring_mod.ScoringError,
    QueryError,
    OSError,
    json.JSONDecodeError,
)


def _load(snapshot: str) -> EntityStore:
    return ingest_mod.snapshot_load(Path(snapshot))


def _write_json(path: Path, doc: Any) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, columns: list[str], rows: list[dict[str, Any]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


@click.group()
def cli() -> None:
    """AOP knowledgebase toolkit."""


@cli.command("ingest")
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path))
@click.option("--snapshot", required=True, type=click.Path(path_type=Path))
@click.option("--field-map", "field_map_path", type=click.Path(path_type=Path))
@click.option("--source", default="")
def ingest_cmd(input_path: Path, snapshot: Path, field_map_path: Optional[Path], source: str) -> None:
    """Parse a wiki XML export into a snapshot file."""
    field_map = ingest_mod.FieldMap.load(field_map_path) if field_map_path else None
    store = ingest_mod.parse_wiki_xml(input_path.read_bytes(), field_map, source=source)
    digest = ingest_mod.snapshot_save(store, snapshot)
    click.echo(f"snapshot {digest[:12]} written to {snapshot}")
    for warning in store.warnings:
        click.echo(f"  [{warning.severity.value}] {warning.entity_kind}: {warning.message}", err=True)


_EXPORT_KINDS = (
    "key_events", "kers", "aops", "observations", "assays", "evidence_records",
    "target_families", "event_groups", "harmonized_events", "harmonized_aops",
)


@cli.command("export")
@click.option("--snapshot", required=True, type=click.Path(path_type=Path))
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
def export_cmd(snapshot: Path, out_dir: Path, fmt: str) -> None:
    """Dump every entity kind from a snapshot as JSON or CSV."""
    store = _load(str(snapshot))
    doc = store_to_dict(store)
    out_dir.mkdir(parents=True, exist_ok=True)
    for kind in _EXPORT_KINDS:
        entities = [doc[kind][k] for k in sorted(doc[kind], key=_entity_sort_key)]
        if fmt == "json":
            _write_json(out_dir / f"{kind}.json", entities)
        else:
            columns = sorted({key for e in entities for key in e})
            rows = [
                {c: _csv_cell(e.get(c)) for c in columns} for e in entities
            ]
            _write_csv(out_dir / f"{kind}.csv", columns, rows)
    click.echo(f"exported {len(_EXPORT_KINDS)} entity kinds to {out_dir}")


def _entity_sort_key(key: str) -> Any:
    return (0, int(key)) if key.isdigit() else (1, key)


def _csv_cell(value: Any) -> Any:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return value


@cli.command("collect-event-integration-rankings")
@click.option("--snapshot", required=True, type=click.Path(path_type=Path))
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
@click.option("--weights", "weights_path", type=click.Path(path_type=Path))
def rankings_cmd(snapshot: Path, out_dir: Path, weights_path: Optional[Path]) -> None:
    """Rank every key event by Event Integration Score (CSV + JSON)."""
    store = _load(str(snapshot))
    weights = scoring_mod.ScoreWeights.load(weights_path) if weights_path else scoring_mod.DEFAULT_WEIGHTS
    rows = scoring_mod.rank_events(store, weights)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out_dir / "eis_rankings.csv",
        list(scoring_mod.RANKING_CSV_COLUMNS),
        scoring_mod.ranking_csv_rows(rows),
    )
    _write_json(out_dir / "eis_rankings.json", scoring_mod.ranking_json(rows))
    click.echo(f"ranked {len(rows)} events")


@cli.command("harmonize-ker-evidence")
@click.option("--snapshot", required=True, type=click.Path(path_type=Path))
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["workbook", "csv"]), default="workbook")
def harmonize_cmd(snapshot: Path, out_dir: Path, fmt: str) -> None:
    """Extract and harmonize evidence tables from KER narrative fields."""
    store = _load(str(snapshot))
    report = evidence_mod.harmonize_ker_evidence(store)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "workbook":
        evidence_mod.report_workbook(report, out_dir / "ker_evidence.xlsx")
    else:
        evidence_mod.report_csv_bundle(report, out_dir)
    click.echo(
        f"KERs examined: {report.total_kers}, "
        f"with tables: {report.kers_with_tables}, "
        f"harmonizable: {report.kers_harmonizable}"
    )


@cli.command("search-kers-for-concordance-text")
@click.option("--snapshot", required=True, type=click.Path(path_type=Path))
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
def concordance_cmd(snapshot: Path, out_dir: Path) -> None:
    """Find dose/temporal/incidence concordance phrases in KER text."""
    store = _load(str(snapshot))
    matches, summary = evidence_mod.search_concordance(store)
    out_dir.mkdir(parents=True, exist_ok=True)
    evidence_mod.concordance_csv(matches, out_dir / "concordance.csv")
    evidence_mod.concordance_json(matches, summary, out_dir / "concordance.json")
    click.echo(f"{len(matches)} matches across {summary['kers_with_matches']} KERs")


@cli.command("collect-harmonized-seizure-aops")
@click.option("--snapshot", required=True, type=click.Path(path_type=Path))
@click.option("--harmonization", required=True, type=click.Path(path_type=Path))
@click.option("--compounds", required=True, type=click.Path(path_type=Path))
@click.option("--families", required=True, type=click.Path(path_type=Path))
def seizure_cmd(snapshot: Path, harmonization: Path, compounds: Path, families: Path) -> None:
    """Load the seizure study worksheets into the snapshot."""
    store = _load(str(snapshot))
    result = ingest_mod.load_seizure_workbook(store, harmonization, compounds, families)
    result.apply(store)
    store.build_indexes()
    ingest_mod.snapshot_save(store, snapshot)
    click.echo(
        f"observations: {len(result.observations)}, "
        f"families: {len(result.target_families)}, "
        f"harmonized AOPs: {len(result.harmonized_aops)}, "
        f"unmatched titles: {len(result.unmatched_event_titles)}"
    )


@cli.command("load-merger-groups")
@click.option("--snapshot", required=True, type=click.Path(path_type=Path))
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path))
def merger_groups_cmd(snapshot: Path, input_path: Path) -> None:
    """Load candidate event-merger groups from a JSON file into the snapshot."""
    store = _load(str(snapshot))
    groups, errors = ingest_mod.load_merger_groups_file(input_path, store)
    if errors:
        for err in errors:
            click.echo(f"rejected: {err}", err=True)
    for group in groups:
        store.event_groups[group.group_id] = group
    ingest_mod.snapshot_save(store, snapshot)
    click.echo(f"loaded {len(groups)} groups ({len(errors)} rejected)")


@cli.command("propose-mappings")
@click.option("--snapshot", required=True, type=click.Path(path_type=Path))
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path))
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
@click.option("--threshold", type=int, default=mapping_mod.DEFAULT_THRESHOLD)
@click.option("--top-k", type=int, default=mapping_mod.DEFAULT_TOP_K)
def propose_cmd(snapshot: Path, input_path: Path, out_dir: Path, threshold: int, top_k: int) -> None:
    """Fuzzy-match candidate labels (one per line) against event titles."""
    if not 0 <= threshold <= 100:
        raise click.BadParameter(f"threshold out of range: {threshold}")
    store = _load(str(snapshot))
    labels = [line.strip() for line in input_path.read_text(encoding="utf-8").splitlines() if line.strip()]
    proposals, unmatched = mapping_mod.propose_mappings(labels, store, threshold, top_k)
    out_dir.mkdir(parents=True, exist_ok=True)
    mapping_mod.proposals_csv(proposals, out_dir / "proposals.csv")
    mapping_mod.proposals_json(proposals, unmatched, out_dir / "proposals.json")
    click.echo(f"{len(proposals)} proposals, {len(unmatched)} unmatched labels")


@cli.command("apply-ledger")
@click.option("--snapshot", required=True, type=click.Path(path_type=Path))
@click.option("--input", "proposals_path", required=True, type=click.Path(path_type=Path))
@click.option("--ledger", "ledger_path", required=True, type=click.Path(path_type=Path))
@click.option("--out-dir", required=True, type=click.Path(path_type=Path))
def apply_ledger_cmd(snapshot: Path, proposals_path: Path, ledger_path: Path, out_dir: Path) -> None:
    """Apply human review decisions to proposals; accepted mappings extend
    the target family index in the snapshot."""
    store = _load(str(snapshot))
    doc = json.loads(proposals_path.read_text(encoding="utf-8"))
    proposals = [
        mapping_mod.MappingProposal(
            candidate_label=p["candidate_label"],
            target_event_id=int(p["target_event_id"]),
            score=int(p["score"]),
        )
        for p in doc.get("proposals", [])
    ]
    ledger = mapping_mod.ReviewLedger.load_csv(ledger_path)
    outcome = mapping_mod.apply_review_ledger(proposals, ledger)
    mapping_mod.build_target_family_index(store, outcome.accepted)
    ingest_mod.snapshot_save(store, snapshot)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(
        out_dir / "review_outcome.json",
        {
            "accepted": [_proposal_doc(p) for p in outcome.accepted],
            "rejected": [_proposal_doc(p) for p in outcome.rejected],
            "pending": [_proposal_doc(p) for p in outcome.pending],
            "audit_trail": [
                {
                    "candidate_label": a.candidate_label,
                    "target_event_id": a.target_event_id,
                    "decision": a.decision,
                    "reviewer": a.reviewer,
                    "date": a.date,
                }
                for a in outcome.audit_trail
            ],
            "warnings": outcome.warnings,
        },
    )
    click.echo(
        f"accepted: {len(outcome.accepted)}, rejected: {len(outcome.rejected)}, "
        f"pending: {len(outcome.pending)}"
    )


def _proposal_doc(p: mapping_mod.MappingProposal) -> dict[str, Any]:
    return {
        "candidate_label": p.candidate_label,
        "target_event_id": p.target_event_id,
        "score": p.score,
        "status": p.status.value,
        "reviewer": p.reviewer,
    }


@cli.command("serve")
@click.option("--snapshot", required=True, type=click.Path(path_type=Path))
@click.option("--bind", default="127.0.0.1:8000")
@click.option("--weights", "weights_path", type=click.Path(path_type=Path))
@click.option("--page-size", "max_page_size", type=int, default=500)
def serve_cmd(snapshot: Path, bind: str, weights_path: Optional[Path], max_page_size: int) -> None:
    """Serve the read-only JSON API over the snapshot."""
    store = _load(str(snapshot))
    config = ApiConfig(
        bind_address=bind,
        snapshot_path=snapshot,
        weights_path=weights_path,
        max_page_size=max_page_size,
    )
    serve_api(store, config)


@cli.command("fetch")
@click.option("--url", required=True)
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def fetch_cmd(url: str, out_path: Path) -> None:
    """Download a wiki XML export (convenience; core commands stay hermetic)."""
    import httpx

    response = httpx.get(url, follow_redirects=True, timeout=60.0)
    response.raise_for_status()
    out_path.write_bytes(response.content)
    click.echo(f"fetched {len(response.content)} bytes to {out_path}")


def main(argv: Optional[list[str]] = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(exc.format_message(), err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except _DATA_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


def entrypoint() -> None:  # console_scripts hook
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
