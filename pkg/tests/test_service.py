import pytest
from fastapi.testclient import TestClient

from aopkb import ingest
from aopkb.service import ApiConfig, ConfigError, create_app


@pytest.fixture()
def client(full_store):
    return TestClient(create_app(full_store))


ROUTES = [
    "/v1/events",
    "/v1/events/638",
    "/v1/events/638/kers",
    "/v1/kers",
    "/v1/kers/301",
    "/v1/kers/tabulated",
    "/v1/aops",
    "/v1/aops/99",
    "/v1/aops/99/rollup",
    "/v1/observations",
    "/v1/assays",
    "/v1/target-families",
    "/v1/groups",
    "/v1/harmonized/events",
    "/v1/harmonized/aops",
    "/v1/search/unlinked-pairs",
    "/v1/stats/completion",
    "/v1/rankings/eis",
    "/v1/meta/snapshot",
]


class TestRoutes:
    @pytest.mark.parametrize("url", ROUTES)
    def test_route_live_and_carries_snapshot(self, client, url):
        r = client.get(url)
        assert r.status_code == 200
        assert "snapshot" in r.json()

    def test_all_routes_are_get_only(self, full_store):
        app = create_app(full_store)
        methods = set()
        for route in app.routes:
            if getattr(route, "path", "").startswith("/v1"):
                methods |= set(route.methods or [])
        assert methods <= {"GET", "HEAD"}

    def test_identical_requests_identical_bodies(self, client):
        for url in ROUTES:
            assert client.get(url).content == client.get(url).content

    def test_snapshot_id_matches_store_hash(self, client, full_store):
        r = client.get("/v1/meta/snapshot")
        assert r.json()["snapshot"] == ingest.content_hash(full_store)


class TestEventsEndpoint:
    def test_default_page(self, client):
        body = client.get("/v1/events").json()
        assert body["page"] == 1
        assert body["page_size"] == 25
        assert body["total"] == 12
        assert body["page_count"] == 1
        assert len(body["rows"]) == 12

    def test_pagination_metadata(self, client):
        body = client.get("/v1/events?size=5").json()
        assert body["page_count"] == 3
        assert len(body["rows"]) == 5
        # page_count = ceil(total / page_size)
        assert body["page_count"] == -(-body["total"] // body["page_size"])

    def test_filter_query(self, client):
        body = client.get("/v1/events?eis=%3E%3D5").json()
        assert all(r["eis"] >= 5 for r in body["rows"])

    def test_unknown_id_is_typed_404(self, client):
        r = client.get("/v1/events/424242")
        assert r.status_code == 404
        body = r.json()
        assert set(body) == {"code", "message", "detail"}
        assert body["code"] == "not_found"
        assert "424242" in body["message"]

    def test_malformed_filter_is_typed_400(self, client):
        r = client.get("/v1/events?complete=%3E%3Dabc")
        assert r.status_code == 400
        body = r.json()
        assert body["code"] == "bad_filter"
        assert body["detail"]["text"] == ">=abc"

    def test_page_size_cap(self, full_store):
        client = TestClient(create_app(full_store, ApiConfig(max_page_size=50)))
        assert client.get("/v1/events?size=51").status_code == 400
        assert client.get("/v1/events?size=50").status_code == 200


class TestStatsAndRankings:
    def test_completion_two_row_table(self, client):
        body = client.get("/v1/stats/completion").json()
        assert set(body["without_harmonized"]) == {"events", "kers", "aops"}
        assert float(body["with_harmonized"]["events"]) < float(
            body["without_harmonized"]["events"]
        )

    def test_rankings(self, client):
        body = client.get("/v1/rankings/eis").json()
        values = [r["eis"] for r in body["rankings"]]
        assert values == sorted(values, reverse=True)
        assert "components" in body["rankings"][0]


class TestObservations:
    def test_default_page_size_fifty(self, client):
        body = client.get("/v1/observations").json()
        assert body["page_size"] == 50
        assert body["total"] == 233
        assert body["page_count"] == 5
        assert len(body["observations"]) == 50

    def test_pages_partition(self, client):
        seen = []
        for p in range(1, 6):
            body = client.get(f"/v1/observations?page={p}").json()
            seen.extend(o["id"] for o in body["observations"])
        assert len(seen) == 233
        assert len(set(seen)) == 233


class TestGroups:
    def test_kind_filter(self, client):
        body = client.get("/v1/groups?kind=GenomicsCandidate").json()
        assert len(body["groups"]) == 3
        assert all(g["kind"] == "GenomicsCandidate" for g in body["groups"])

    def test_unknown_kind(self, client):
        assert client.get("/v1/groups?kind=Nope").status_code == 400

    def test_all_groups(self, client):
        assert len(client.get("/v1/groups").json()["groups"]) == 5


class TestConfig:
    def test_cap_must_cover_defaults(self):
        with pytest.raises(ConfigError):
            ApiConfig(max_page_size=10)

    def test_store_swap_changes_snapshot(self, full_store, fixtures_dir):
        # full_store extends wiki_store in place, so parse a fresh one to swap in
        bare = ingest.parse_wiki_xml(
            (fixtures_dir / "aop_wiki_fixture.xml").read_bytes(), source="fixture"
        )
        app = create_app(full_store)
        client = TestClient(app)
        before = client.get("/v1/meta/snapshot").json()["snapshot"]
        app.state.swap_store(bare)
        after = client.get("/v1/meta/snapshot").json()["snapshot"]
        assert before != after
        assert after == ingest.content_hash(bare)
