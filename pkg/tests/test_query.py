import random

import pytest
from hypothesis import given, settings, strategies as st

from aopkb import query
from aopkb.model import Aop, EventRole, KeyEvent, KeyEventRelationship, LicenseStatus, Lobo
from aopkb.query import (
    DEFAULT_COLUMNS,
    DEFAULT_PAGE_SIZE,
    DEFAULT_SORT,
    EventQuery,
    FilterParseError,
    NotFoundError,
    QueryError,
    decode_query,
    encode_query,
    event_kers,
    filter_events,
    kers_with_tabulated_evidence,
    parse_id_list,
    parse_numeric_filter,
    rollup_applicability,
    unlinked_event_pairs,
)
from aopkb.store import EntityStore
from oracles import brute_force_unlinked_pairs


class TestNumericFilter:
    def test_gte(self):
        f = parse_numeric_filter(">=50")
        assert f.test(50) and f.test(73.2)
        assert not f.test(49.9)

    def test_bare_number_is_equality(self):
        f = parse_numeric_filter("5")
        assert f.test(5) and not f.test(6)

    def test_whitespace_tolerated(self):
        assert parse_numeric_filter("  <= 10 ").test(10)

    def test_error_carries_input(self):
        with pytest.raises(FilterParseError) as exc:
            parse_numeric_filter(">=abc")
        assert exc.value.text == ">=abc"

    @pytest.mark.parametrize("text,x,expected", [
        (">3", 3, False), (">3", 4, True),
        ("<3", 2, True), ("<3", 3, False),
        ("=7", 7, True),
    ])
    def test_operators(self, text, x, expected):
        assert parse_numeric_filter(text).test(x) is expected


class TestParseIdList:
    def test_parse(self):
        assert parse_id_list("1,2") == (1, 2)
        assert parse_id_list(" 12 ") == (12,)

    def test_bad(self):
        with pytest.raises(QueryError):
            parse_id_list("1,x")


class TestFilterEvents:
    def test_defaults_mirror_figure(self):
        assert DEFAULT_COLUMNS == ("lobo", "method", "complete", "eis", "aops", "endorsed")
        assert DEFAULT_SORT == ("id", "asc")
        assert DEFAULT_PAGE_SIZE == 25

    def test_id_filter(self, fig6_store):
        page = filter_events(fig6_store, EventQuery(id_filter=(3, 8)))
        assert [r["id"] for r in page.rows] == [3, 8]

    def test_title_substring(self, fig6_store):
        page = filter_events(fig6_store, EventQuery(title_substring="acetylcholine"))
        assert [r["id"] for r in page.rows] == [10]

    def test_lobo(self, fig6_store):
        page = filter_events(fig6_store, EventQuery(lobo=Lobo.MOLECULAR))
        assert [r["id"] for r in page.rows] == [9]

    def test_completion_and_method_conjunction(self, fig6_store):
        q = EventQuery(
            numeric_filters=(("complete", parse_numeric_filter(">=50")),),
            has_method_text=True,
        )
        page = filter_events(fig6_store, q)
        assert [r["id"] for r in page.rows] == [3, 10]

    def test_rows_carry_selected_columns_plus_identity(self, fig6_store):
        q = EventQuery(selected_columns=("lobo", "eis"))
        page = filter_events(fig6_store, q)
        assert set(page.rows[0]) == {"id", "title", "lobo", "eis"}

    def test_sort_desc_with_id_tiebreak(self, fig6_store):
        q = EventQuery(sort=("complete", "desc"))
        page = filter_events(fig6_store, q)
        assert [r["id"] for r in page.rows] == [3, 10, 8, 9]

    def test_unknown_sort_column_rejected(self):
        with pytest.raises(QueryError):
            EventQuery(sort=("nope", "asc"))

    def test_conjunction_equals_sequential_filtering(self, fig6_store):
        both = filter_events(
            fig6_store,
            EventQuery(numeric_filters=(
                ("aops", parse_numeric_filter(">=5")),
                ("eis", parse_numeric_filter(">=5")),
            )),
        )
        one = filter_events(
            fig6_store, EventQuery(numeric_filters=(("aops", parse_numeric_filter(">=5")),))
        )
        survivors = {r["id"] for r in one.rows}
        other = filter_events(
            fig6_store,
            EventQuery(
                id_filter=tuple(sorted(survivors)),
                numeric_filters=(("eis", parse_numeric_filter(">=5")),),
            ),
        )
        assert [r["id"] for r in both.rows] == [r["id"] for r in other.rows]


def _big_store(n_events: int) -> EntityStore:
    store = EntityStore()
    store.key_events = {i: KeyEvent(id=i, title=f"event {i}") for i in range(1, n_events + 1)}
    store.build_indexes()
    return store


class TestPagination:
    def test_1942_events_78_pages(self):
        store = _big_store(1942)
        page = filter_events(store, EventQuery(page_size=25))
        assert page.total_count == 1942
        assert page.page_count == 78

    def test_pages_partition_result(self):
        store = _big_store(103)
        seen = []
        first = filter_events(store, EventQuery(page_size=25))
        for p in range(1, first.page_count + 1):
            page = filter_events(store, EventQuery(page=p, page_size=25))
            seen.extend(r["id"] for r in page.rows)
        assert seen == sorted(store.key_events)
        assert len(seen) == len(set(seen))

    def test_empty_store_zero_pages(self):
        page = filter_events(EntityStore(), EventQuery())
        assert page.total_count == 0
        assert page.page_count == 0


class TestQueryStringRoundTrip:
    def test_defaults_encode_empty(self):
        assert encode_query(EventQuery()) == ""

    def test_known_keys(self):
        q = EventQuery(
            id_filter=(1, 2), lobo=Lobo.CELLULAR,
            numeric_filters=(("complete", parse_numeric_filter(">=50")),),
            sort=("eis", "desc"), page=3, page_size=10,
        )
        decoded, unknown = decode_query(encode_query(q))
        assert decoded == q
        assert unknown == []

    def test_unknown_keys_reported(self):
        _, unknown = decode_query("frob=1&page=2")
        assert unknown == ["frob"]

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_random_round_trip(self, data):
        kwargs = {}
        if data.draw(st.booleans()):
            kwargs["id_filter"] = tuple(
                data.draw(st.lists(st.integers(1, 9999), min_size=1, max_size=5))
            )
        if data.draw(st.booleans()):
            kwargs["title_substring"] = data.draw(
                st.text(st.characters(categories=("Ll", "Lu", "Nd")), min_size=1, max_size=10)
            )
        if data.draw(st.booleans()):
            kwargs["lobo"] = data.draw(st.sampled_from(list(Lobo)))
        if data.draw(st.booleans()):
            kwargs["has_method_text"] = data.draw(st.booleans())
        if data.draw(st.booleans()):
            field = data.draw(st.sampled_from(query.NUMERIC_FIELDS))
            op = data.draw(st.sampled_from([">=", "<=", ">", "<", "="]))
            value = data.draw(st.integers(-100, 100))
            kwargs["numeric_filters"] = ((field, parse_numeric_filter(f"{op}{value}")),)
        if data.draw(st.booleans()):
            kwargs["selected_columns"] = tuple(
                data.draw(st.lists(st.sampled_from(query.COLUMN_KEYS),
                                   min_size=1, max_size=4, unique=True))
            )
        if data.draw(st.booleans()):
            kwargs["sort"] = (
                data.draw(st.sampled_from(query.SORTABLE)),
                data.draw(st.sampled_from(["asc", "desc"])),
            )
        kwargs["page"] = data.draw(st.integers(1, 50))
        kwargs["page_size"] = data.draw(st.integers(1, 100))
        q = EventQuery(**kwargs)
        decoded, unknown = decode_query(encode_query(q))
        assert decoded == q
        assert unknown == []


class TestEventKers:
    def test_upstream_direction(self, wiki_store):
        entries = event_kers(wiki_store, 1001)
        assert len(entries) == 1
        assert entries[0].direction == "Upstream"
        assert entries[0].other_event_id == 1002

    def test_orphan_no_kers(self, wiki_store):
        assert event_kers(wiki_store, 1004) == []

    def test_unknown_event(self, wiki_store):
        with pytest.raises(NotFoundError):
            event_kers(wiki_store, 424242)

    def test_full_scan_agreement(self, wiki_store):
        for event_id in wiki_store.key_events:
            got = {e.ker_id for e in event_kers(wiki_store, event_id)}
            expected = {
                k.id for k in wiki_store.kers.values()
                if event_id in (k.upstream_event_id, k.downstream_event_id)
            }
            assert got == expected

    def test_ofa_tagging(self, wiki_store):
        entries = event_kers(wiki_store, 386)
        aops = [a for e in entries for a in e.aops]
        assert aops and all(a["open_for_adoption"] for a in aops)

    def test_endorsed_tagging(self, wiki_store):
        entries = event_kers(wiki_store, 1001)
        assert any(a["oecd_endorsed"] for e in entries for a in e.aops)


def _random_pair_store(rng: random.Random) -> EntityStore:
    store = EntityStore()
    n_events = rng.randint(2, 10)
    event_ids = rng.sample(range(1, 50), n_events)
    store.key_events = {i: KeyEvent(id=i, title=f"e{i}") for i in event_ids}
    ker_id = 1
    kers = {}
    for _ in range(rng.randint(0, n_events * 2)):
        a, b = rng.sample(event_ids, 2)
        kers[ker_id] = KeyEventRelationship(id=ker_id, upstream_event_id=a, downstream_event_id=b)
        ker_id += 1
    store.kers = kers
    members = rng.sample(event_ids, rng.randint(2, n_events))
    listed = rng.sample(sorted(kers), rng.randint(0, len(kers))) if kers else []
    from aopkb.model import Adjacency

    store.aops = {
        1: Aop(id=1, title="a",
               event_memberships=[(e, EventRole.KE) for e in members],
               ker_memberships=[(k, Adjacency.ADJACENT) for k in listed]),
    }
    store.build_indexes()
    return store


class TestUnlinkedPairs:
    def test_linked_pair_excluded(self, wiki_store):
        pairs = unlinked_event_pairs(wiki_store)
        keys = {(p.aop_id, p.event_id_a, p.event_id_b) for p in pairs}
        assert (99, 638, 5003) not in keys  # KER 301 in AOP 99
        assert (99, 1003, 5003) in keys     # co-members never paired by a KER

    def test_three_member_example(self):
        store = EntityStore()
        store.key_events = {i: KeyEvent(id=i, title=str(i)) for i in (1, 2, 3)}
        store.kers = {1: KeyEventRelationship(id=1, upstream_event_id=1, downstream_event_id=2)}
        from aopkb.model import Adjacency

        store.aops = {1: Aop(id=1, title="a",
                             event_memberships=[(i, EventRole.KE) for i in (1, 2, 3)],
                             ker_memberships=[(1, Adjacency.ADJACENT)])}
        store.build_indexes()
        pairs = unlinked_event_pairs(store)
        assert {(p.event_id_a, p.event_id_b) for p in pairs} == {(1, 3), (2, 3)}

    def test_global_is_subset_of_within(self, wiki_store):
        within = {(p.aop_id, p.event_id_a, p.event_id_b)
                  for p in unlinked_event_pairs(wiki_store, "WithinAop")}
        global_ = {(p.aop_id, p.event_id_a, p.event_id_b)
                   for p in unlinked_event_pairs(wiki_store, "Global")}
        assert global_ <= within

    def test_unknown_scope(self, wiki_store):
        with pytest.raises(QueryError):
            unlinked_event_pairs(wiki_store, "Sideways")

    def test_hundred_random_aops_vs_oracle(self):
        rng = random.Random(20260823)
        for _ in range(100):
            store = _random_pair_store(rng)
            for scope in ("WithinAop", "Global"):
                got = [(p.aop_id, p.event_id_a, p.event_id_b)
                       for p in unlinked_event_pairs(store, scope)]
                assert got == brute_force_unlinked_pairs(store, scope)


class TestTabulatedKers:
    def test_fixture_rows(self, evidence_store):
        rows = kers_with_tabulated_evidence(evidence_store)
        assert [r["ker_id"] for r in rows] == [401, 402, 403, 404]
        assert [r["harmonizable"] for r in rows] == [True, True, False, False]

    def test_no_tables_empty(self, wiki_store):
        assert kers_with_tabulated_evidence(wiki_store) == []


class TestRollup:
    def test_union_with_counts(self, wiki_store):
        rollup = rollup_applicability(wiki_store, 99)
        taxa = {t["curie"]: t["count"] for t in rollup["taxa"]}
        assert taxa == {"NCBITaxon:7955": 1}
        assert rollup["declared"]["taxa"][0]["curie"] == "NCBITaxon:7955"

    def test_two_kes_two_taxa(self, wiki_store):
        rollup = rollup_applicability(wiki_store, 101)
        taxa = {t["curie"]: t["count"] for t in rollup["taxa"]}
        assert taxa == {"NCBITaxon:10116": 1, "NCBITaxon:9606": 1}

    def test_silent_kes_empty_summary(self, wiki_store):
        rollup = rollup_applicability(wiki_store, 604)
        assert rollup["taxa"] == [] and rollup["sexes"] == []

    def test_unknown_aop(self, wiki_store):
        with pytest.raises(NotFoundError):
            rollup_applicability(wiki_store, 424242)
