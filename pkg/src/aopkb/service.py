"""Read-only JSON API over an entity store.

All routes are GET and live under /v1; every response body carries the
snapshot identifier so clients can detect store swaps.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import ingest, scoring
from .model import GroupKind
from .query import (
    DEFAULT_PAGE_SIZE,
    FilterParseError,
    NotFoundError,
    QueryError,
    decode_query,
    event_kers,
    filter_events,
    kers_with_tabulated_evidence,
    rollup_applicability,
    unlinked_event_pairs,
)
from .store import EntityStore, store_to_dict

OBSERVATIONS_PAGE_SIZE = 50


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ApiConfig:
    bind_address: str = "127.0.0.1:8000"
    snapshot_path: Optional[Path] = None
    weights_path: Optional[Path] = None
    cors_allowlist: tuple[str, ...] = ()
    max_page_size: int = 500

    def __post_init__(self) -> None:
        if self.max_page_size < max(DEFAULT_PAGE_SIZE, OBSERVATIONS_PAGE_SIZE):
            raise ConfigError(
                f"max_page_size {self.max_page_size} below default page sizes"
            )


def _error(status: int, code: str, message: str, detail: Any = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "detail": detail},
    )


def _page_meta(total: int, page: int, page_size: int) -> dict[str, int]:
    return {
        "total": total,
        "page": page,
        "page_size": page_size,
        "page_count": -(-total // page_size) if total else 0,
    }


def create_app(store: EntityStore, config: Optional[ApiConfig] = None) -> FastAPI:
    config = config or ApiConfig()
    app = FastAPI(title="aopkb", docs_url=None, redoc_url=None, openapi_url=None)
    if config.cors_allowlist:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_allowlist),
            allow_methods=["GET"],
        )
    app.state.store = store
    app.state.snapshot = ingest.content_hash(store)
    if config.weights_path:
        app.state.weights = scoring.ScoreWeights.load(config.weights_path)
    else:
        app.state.weights = scoring.DEFAULT_WEIGHTS

    def swap_store(new_store: EntityStore) -> None:
        # whole-store handoff; requests in flight keep their old reference
        app.state.snapshot = ingest.content_hash(new_store)
        app.state.store = new_store

    app.state.swap_store = swap_store
    doc = lambda: store_to_dict(app.state.store)  # noqa: E731

    def body(**payload: Any) -> dict[str, Any]:
        return {"snapshot": app.state.snapshot, **payload}

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError) -> JSONResponse:
        return _error(404, "not_found", str(exc))

    @app.exception_handler(FilterParseError)
    async def _bad_filter(request: Request, exc: FilterParseError) -> JSONResponse:
        return _error(400, "bad_filter", str(exc), detail={"text": exc.text})

    @app.exception_handler(QueryError)
    async def _bad_query(request: Request, exc: QueryError) -> JSONResponse:
        return _error(400, "bad_query", str(exc))

    @app.exception_handler(ValueError)
    async def _bad_value(request: Request, exc: ValueError) -> JSONResponse:
        return _error(400, "bad_request", str(exc))

    # -- events -----------------------------------------------------------

    @app.get("/v1/events")
    def list_events(request: Request) -> dict[str, Any]:
        query, unknown = decode_query(str(request.url.query))
        if query.page_size > config.max_page_size:
            raise QueryError(f"page_size above cap {config.max_page_size}")
        page = filter_events(app.state.store, query, app.state.weights)
        return body(
            rows=list(page.rows),
            ignored_params=unknown,
            **_page_meta(page.total_count, page.page, page.page_size),
        )

    @app.get("/v1/events/{event_id}")
    def get_event(event_id: int) -> dict[str, Any]:
        store = app.state.store
        if event_id not in store.key_events:
            raise NotFoundError(f"unknown event id {event_id}")
        row = scoring.score_event(store.key_events[event_id], store, app.state.weights)
        return body(
            event=doc()["key_events"][str(event_id)],
            completion=str(row.completion.percent),
            eis=row.eis.value,
            eis_components=dict(row.eis.components),
        )

    @app.get("/v1/events/{event_id}/kers")
    def get_event_kers(event_id: int) -> dict[str, Any]:
        entries = event_kers(app.state.store, event_id)
        return body(
            event_id=event_id,
            kers=[
                {
                    "ker_id": e.ker_id,
                    "direction": e.direction,
                    "other_event_id": e.other_event_id,
                    "aops": list(e.aops),
                }
                for e in entries
            ],
        )

    # -- kers -------------------------------------------------------------

    @app.get("/v1/kers")
    def list_kers() -> dict[str, Any]:
        return body(kers=list(doc()["kers"].values()))

    @app.get("/v1/kers/tabulated")
    def list_tabulated_kers() -> dict[str, Any]:
        return body(kers=kers_with_tabulated_evidence(app.state.store))

    @app.get("/v1/kers/{ker_id}")
    def get_ker(ker_id: int) -> dict[str, Any]:
        kers = doc()["kers"]
        if str(ker_id) not in kers:
            raise NotFoundError(f"unknown KER id {ker_id}")
        return body(ker=kers[str(ker_id)])

    # -- aops -------------------------------------------------------------

    @app.get("/v1/aops")
    def list_aops() -> dict[str, Any]:
        return body(aops=list(doc()["aops"].values()))

    @app.get("/v1/aops/{aop_id}")
    def get_aop(aop_id: int) -> dict[str, Any]:
        aops = doc()["aops"]
        if str(aop_id) not in aops:
            raise NotFoundError(f"unknown AOP id {aop_id}")
        return body(aop=aops[str(aop_id)])

    @app.get("/v1/aops/{aop_id}/rollup")
    def get_aop_rollup(aop_id: int) -> dict[str, Any]:
        return body(rollup=rollup_applicability(app.state.store, aop_id))

    # -- evidence layer ----------------------------------------------------

    @app.get("/v1/observations")
    def list_observations(page: int = 1, size: int = OBSERVATIONS_PAGE_SIZE) -> dict[str, Any]:
        if page < 1 or size < 1:
            raise QueryError("page and size must be positive")
        if size > config.max_page_size:
            raise QueryError(f"page_size above cap {config.max_page_size}")
        rows = list(doc()["observations"].values())
        start = (page - 1) * size
        return body(
            observations=rows[start : start + size],
            **_page_meta(len(rows), page, size),
        )

    @app.get("/v1/assays")
    def list_assays() -> dict[str, Any]:
        return body(assays=list(doc()["assays"].values()))

    @app.get("/v1/target-families")
    def list_target_families() -> dict[str, Any]:
        return body(target_families=list(doc()["target_families"].values()))

    @app.get("/v1/groups")
    def list_groups(kind: Optional[str] = None) -> dict[str, Any]:
        groups = doc()["event_groups"]
        if kind is not None:
            try:
                wanted = GroupKind(kind).value
            except ValueError:
                raise QueryError(f"unknown group kind {kind!r}")
            groups = {k: g for k, g in groups.items() if g["kind"] == wanted}
        return body(groups=[groups[k] for k in sorted(groups)])

    @app.get("/v1/harmonized/events")
    def list_harmonized_events() -> dict[str, Any]:
        return body(harmonized_events=list(doc()["harmonized_events"].values()))

    @app.get("/v1/harmonized/aops")
    def list_harmonized_aops() -> dict[str, Any]:
        return body(harmonized_aops=list(doc()["harmonized_aops"].values()))

    # -- searches and stats -------------------------------------------------

    @app.get("/v1/search/unlinked-pairs")
    def search_unlinked_pairs(scope: str = "WithinAop") -> dict[str, Any]:
        pairs = unlinked_event_pairs(app.state.store, scope)
        return body(
            scope=scope,
            pairs=[
                {"aop_id": p.aop_id, "event_id_a": p.event_id_a, "event_id_b": p.event_id_b}
                for p in pairs
            ],
        )

    @app.get("/v1/stats/completion")
    def stats_completion() -> dict[str, Any]:
        def panel(include_harmonized: bool) -> dict[str, Optional[str]]:
            averages = scoring.average_completion(
                app.state.store, include_harmonized=include_harmonized
            )
            return {k: None if v is None else str(v) for k, v in averages.items()}

        return body(
            without_harmonized=panel(False),
            with_harmonized=panel(True),
        )

    @app.get("/v1/rankings/eis")
    def rankings_eis() -> dict[str, Any]:
        rows = scoring.rank_events(app.state.store, app.state.weights)
        return body(rankings=scoring.ranking_json(rows))

    @app.get("/v1/meta/snapshot")
    def meta_snapshot() -> dict[str, Any]:
        store = app.state.store
        return body(
            source=store.source_meta.source,
            counts={
                "key_events": len(store.key_events),
                "kers": len(store.kers),
                "aops": len(store.aops),
                "observations": len(store.observations),
                "assays": len(store.assays),
                "evidence_records": len(store.evidence_records),
                "target_families": len(store.target_families),
                "event_groups": len(store.event_groups),
                "harmonized_events": len(store.harmonized_events),
                "harmonized_aops": len(store.harmonized_aops),
            },
        )

    return app


def serve(store: EntityStore, config: Optional[ApiConfig] = None) -> None:
    """Run the API with uvicorn; blocks until interrupted."""
    import uvicorn

    config = config or ApiConfig()
    host, _, port = config.bind_address.partition(":")
    uvicorn.run(create_app(store, config), host=host or "127.0.0.1", port=int(port or 8000))
