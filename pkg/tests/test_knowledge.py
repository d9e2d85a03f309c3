import pytest

from sarmission.errors import SarError
from sarmission.knowledge import KnowledgeBase, KnowledgeEntry, tokenize


@pytest.fixture(scope="module")
def kb():
    return KnowledgeBase.default()


def test_trail_query_returns_downhill_guidance(kb):
    results = kb.retrieve(["clue-location/trail"], "a backpack found on the trail", k=3)
    assert results
    assert "downhill path" in results[0].text


def test_water_query_returns_shoreline_dispatch_guidance(kb):
    results = kb.retrieve(["clue-location/water"], "a hat floating in the water", k=3)
    assert results
    assert "water and the shoreline" in results[0].text


def test_no_tag_overlap_returns_empty(kb):
    assert kb.retrieve(["made-up/nowhere"], "text that matches nothing tagged", k=5) == []


def test_keyword_overlap_alone_does_not_qualify(kb):
    # Words from a known entry, but no matching tag path.
    results = kb.retrieve(["made-up/nowhere"], "prioritize a directional trail search downhill", k=5)
    assert results == []


def test_retrieval_order_is_deterministic(kb):
    tags = ["clue-location/water", "profile/child"]
    first = [e.id for e in kb.retrieve(tags, "red hat near the shoreline", k=5)]
    second = [e.id for e in kb.retrieve(tags, "red hat near the shoreline", k=5)]
    assert first == second


def test_stage_filter_restricts_results(kb):
    all_stage = kb.retrieve(["clue-location/water"], "", k=10)
    stage5 = kb.retrieve(["clue-location/water"], "", k=10, stage=5)
    assert {e.id for e in stage5} <= {e.id for e in all_stage}
    assert all(5 in e.applicable_stages for e in stage5)


def test_entries_require_tags():
    with pytest.raises(SarError):
        KnowledgeEntry(id="x", text="no tags", tags=())


def test_duplicate_ids_rejected():
    entry = {"id": "a", "text": "t", "tags": ["x/y"]}
    with pytest.raises(SarError):
        KnowledgeBase.load([entry, dict(entry)])


def test_tokenize_drops_stopwords():
    assert tokenize("a red hat in the water") == ["red", "hat", "water"]
