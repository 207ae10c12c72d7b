from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aopkb import ingest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture()
def wiki_store():
    return ingest.parse_wiki_xml(
        (FIXTURES / "aop_wiki_fixture.xml").read_bytes(), source="fixture"
    )


@pytest.fixture()
def fig6_store():
    return ingest.parse_wiki_xml((FIXTURES / "fig6_fixture.xml").read_bytes())


@pytest.fixture()
def evidence_store():
    return ingest.parse_wiki_xml((FIXTURES / "evidence_fixture.xml").read_bytes())


@pytest.fixture()
def full_store(wiki_store):
    """Wiki fixture plus the seizure worksheets and merger groups."""
    sz = FIXTURES / "seizure"
    result = ingest.load_seizure_workbook(
        wiki_store, sz / "harmonization.csv", sz / "compounds.csv", sz / "families.csv"
    )
    result.apply(wiki_store)
    for path in ("lung_fibrosis_groups.json", "llm_groups.json"):
        groups, errors = ingest.load_merger_groups_file(FIXTURES / path, wiki_store)
        assert not errors
        for group in groups:
            wiki_store.event_groups[group.group_id] = group
    wiki_store.build_indexes()
    return wiki_store
