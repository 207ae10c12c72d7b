import json
import random
import string

import pytest
from hypothesis import given, settings, strategies as st

from aopkb import mapping
from aopkb.mapping import (
    DEFAULT_THRESHOLD,
    LedgerEntry,
    MappingError,
    MappingProposal,
    ProposalStatus,
    ReviewLedger,
    apply_review_ledger,
    build_target_family_index,
    fuzzy_score,
    propose_mappings,
)
from oracles import fuzzy_oracle, levenshtein_matrix


class TestFuzzyScore:
    def test_identity(self):
        assert fuzzy_score("GABA-A Receptor", "GABA-A Receptor") == 100

    def test_disjoint(self):
        assert fuzzy_score("abc", "xyz") == 0

    def test_both_empty(self):
        assert fuzzy_score("", "") == 100
        assert fuzzy_score("!!!", "???") == 100  # both normalize to empty

    def test_histamine_case_documents_threshold(self):
        # the prefix-annotated title scores well below 85, which is why the
        # shipped default threshold is 50
        score = fuzzy_score("Histamine Receptor", "Antagonism, Histamine Receptor (H2)")
        assert score == fuzzy_oracle("Histamine Receptor", "Antagonism, Histamine Receptor (H2)")
        assert score < 85
        assert score >= DEFAULT_THRESHOLD

    def test_token_sort_helps_reordered_names(self):
        assert fuzzy_score("receptor histamine", "histamine receptor") == 100

    @given(st.text(max_size=40), st.text(max_size=40))
    @settings(max_examples=300, deadline=None)
    def test_symmetry_bounds_and_oracle_agreement(self, a, b):
        s = fuzzy_score(a, b)
        assert 0 <= s <= 100
        assert s == fuzzy_score(b, a)
        assert s == fuzzy_oracle(a, b)

    def test_thousand_random_pairs_vs_oracle(self):
        rng = random.Random(1234)
        alphabet = string.ascii_letters + string.digits + " ,-()"
        for _ in range(1000):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
            s = fuzzy_score(a, b)
            assert 0 <= s <= 100
            assert s == fuzzy_score(b, a)
            assert s == fuzzy_oracle(a, b)

    def test_internal_levenshtein_matches_matrix_oracle(self):
        rng = random.Random(7)
        for _ in range(200):
            a = "".join(rng.choice("abcde") for _ in range(rng.randint(0, 12)))
            b = "".join(rng.choice("abcde") for _ in range(rng.randint(0, 12)))
            assert mapping._levenshtein(a, b) == levenshtein_matrix(a, b)


class TestProposeMappings:
    def test_exact_title_scores_hundred(self, wiki_store):
        proposals, unmatched = propose_mappings(["Seizure"], wiki_store, threshold=85)
        assert not unmatched
        assert proposals[0].target_event_id == 5003
        assert proposals[0].score == 100

    def test_no_hit_reported_unmatched(self, wiki_store):
        proposals, unmatched = propose_mappings(["qqqqzzzz"], wiki_store)
        assert proposals == []
        assert unmatched == ["qqqqzzzz"]

    def test_matches_golden_oracle_run(self, wiki_store, fixtures_dir):
        golden = json.loads((fixtures_dir / "golden_proposals.json").read_text())
        labels = [
            line.strip()
            for line in (fixtures_dir / "seizure_candidates.txt").read_text().splitlines()
            if line.strip()
        ]
        proposals, unmatched = propose_mappings(
            labels, wiki_store, threshold=golden["threshold"], top_k=golden["top_k"]
        )
        got = [
            {"candidate_label": p.candidate_label, "target_event_id": p.target_event_id,
             "score": p.score, "status": p.status.value}
            for p in proposals
        ]
        assert got == golden["proposals"]
        assert unmatched == golden["unmatched"]

    def test_threshold_anti_monotone(self, wiki_store):
        rng = random.Random(42)
        titles = [e.title for e in wiki_store.key_events.values()]
        for _ in range(50):
            labels = rng.sample(titles, k=rng.randint(1, 5))
            labels = [l[: rng.randint(3, len(l))] for l in labels]
            lo, hi = sorted(rng.sample(range(0, 101), 2))
            at_lo, _ = propose_mappings(labels, wiki_store, threshold=lo, top_k=100)
            at_hi, _ = propose_mappings(labels, wiki_store, threshold=hi, top_k=100)
            lo_keys = {(p.candidate_label, p.target_event_id) for p in at_lo}
            hi_keys = {(p.candidate_label, p.target_event_id) for p in at_hi}
            assert hi_keys <= lo_keys

    def test_threshold_out_of_range(self, wiki_store):
        with pytest.raises(MappingError):
            propose_mappings(["x"], wiki_store, threshold=101)


class TestProposalInvariants:
    def test_score_bounds(self):
        with pytest.raises(MappingError):
            MappingProposal("x", 1, score=101)

    def test_accept_requires_reviewer(self):
        with pytest.raises(MappingError):
            MappingProposal("x", 1, score=50, status=ProposalStatus.ACCEPTED)
        MappingProposal("x", 1, score=50, status=ProposalStatus.ACCEPTED, reviewer="r")


def _proposals():
    return [
        MappingProposal("a", 1, 90),
        MappingProposal("b", 2, 80),
        MappingProposal("c", 3, 70),
    ]


class TestReviewLedger:
    def test_accept_reject_pending(self):
        ledger = ReviewLedger()
        ledger.add(LedgerEntry("a", 1, "accept", "rev"))
        ledger.add(LedgerEntry("b", 2, "reject", "rev"))
        outcome = apply_review_ledger(_proposals(), ledger)
        assert [p.candidate_label for p in outcome.accepted] == ["a"]
        assert [p.candidate_label for p in outcome.rejected] == ["b"]
        assert [p.candidate_label for p in outcome.pending] == ["c"]
        assert len(outcome.audit_trail) == 2
        assert all(a.reviewer == "rev" for a in outcome.audit_trail)

    def test_empty_ledger_all_pending(self):
        outcome = apply_review_ledger(_proposals(), ReviewLedger())
        assert outcome.accepted == [] and outcome.rejected == []
        assert len(outcome.pending) == 3

    def test_unknown_proposal_warns(self):
        ledger = ReviewLedger()
        ledger.add(LedgerEntry("ghost", 99, "accept", "rev"))
        outcome = apply_review_ledger(_proposals(), ledger)
        assert outcome.accepted == []
        assert len(outcome.warnings) == 1

    def test_conflicting_duplicate_key_hard_error(self):
        ledger = ReviewLedger()
        ledger.add(LedgerEntry("a", 1, "accept", "rev"))
        with pytest.raises(MappingError):
            ledger.add(LedgerEntry("a", 1, "reject", "rev2"))

    def test_idempotent(self):
        ledger = ReviewLedger()
        ledger.add(LedgerEntry("a", 1, "accept", "rev", date="2026-01-01"))
        first = apply_review_ledger(_proposals(), ledger)
        second = apply_review_ledger(_proposals(), ledger)
        assert first.accepted == second.accepted
        assert first.audit_trail == second.audit_trail

    def test_csv_round_trip(self, tmp_path):
        ledger = ReviewLedger()
        ledger.add(LedgerEntry("a", 1, "accept", "rev", date="2026-01-01", note="n"))
        path = tmp_path / "ledger.csv"
        ledger.save_csv(path)
        loaded = ReviewLedger.load_csv(path)
        assert loaded.entries == ledger.entries

    def test_load_rejects_missing_reviewer(self, tmp_path):
        path = tmp_path / "ledger.csv"
        path.write_text(
            "candidate_label,target_event_id,decision,reviewer\n"
            "a,1,accept,\n"
        )
        with pytest.raises(MappingError):
            ReviewLedger.load_csv(path)

    def test_fixture_ledger_loads(self, fixtures_dir):
        ledger = ReviewLedger.load_csv(fixtures_dir / "ledger.csv")
        assert len(ledger.entries) == 3


class TestTargetFamilyIndex:
    def test_fixture_family_counts(self, full_store):
        families = build_target_family_index(full_store)
        assert len(families) == 27
        by_name = {f.name: f for f in families}
        assert len(by_name["Adrenergic Receptor"].assay_ids) == 21
        assert len(by_name["Adrenergic Receptor"].event_ids) == 1
        assert by_name["Purinergic Receptor"].assay_ids == []
        assert by_name["Purinergic Receptor"].event_ids == []

    def test_accepted_mapping_extends_family(self, full_store):
        accepted = [
            MappingProposal("Histamine Receptor", 1002, 90,
                            status=ProposalStatus.ACCEPTED, reviewer="rev")
        ]
        families = build_target_family_index(full_store, accepted)
        hist = {f.name: f for f in families}["Histamine Receptor"]
        assert 1002 in hist.event_ids

    def test_unaccepted_proposal_rejected(self, full_store):
        with pytest.raises(MappingError):
            build_target_family_index(full_store, [MappingProposal("x", 1, 50)])
