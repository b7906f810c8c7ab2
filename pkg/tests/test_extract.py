from __future__ import annotations

import pytest

from kvcanon.backends import RuleBackend
from kvcanon.errors import BackendError
from kvcanon.extract import (
    ExtractorConfig,
    PagePrediction,
    extract_page,
    load_predictions,
    pair_from_obj,
    pair_to_obj,
    save_predictions,
)
from kvcanon.inventory import CanonicalKeyEntry, KeyInventory, top_fraction_keys


def _gold_pairs(page):
    return {
        a.canonical_key: (a.key_span, a.value_span)
        for a in page.annotations
        if a.canonical_key != "姓名"
    }


def test_clean_pages_extract_exactly(small_world):
    inv = small_world["inventory"]
    backend = small_world["backend"]
    for page in small_world["pages"][:25]:
        pairs = extract_page(page.text, inv, backend)
        gold = _gold_pairs(page)
        assert {p.canonical_key for p in pairs} == set(gold)
        for pair in pairs:
            key_span, value_span = gold[pair.canonical_key]
            assert pair.key_span == key_span
            assert pair.value_span == value_span
            assert page.text[slice(*pair.value_span)] == pair.value
            assert page.text[slice(*pair.key_span)] == pair.surface_key


def test_view_restriction_drops_pairs(small_world):
    inv = small_world["inventory"]
    backend = small_world["backend"]
    page = small_world["pages"][0]
    full = extract_page(page.text, inv, backend)
    view = top_fraction_keys(inv, 20)
    restricted = extract_page(page.text, view, backend)
    kept = {e.canonical for e in view.entries}
    assert {p.canonical_key for p in restricted} == {
        p.canonical_key for p in full if p.canonical_key in kept
    }


def test_query_independence_across_views(small_world):
    inv = small_world["inventory"]
    backend = small_world["backend"]
    page = small_world["pages"][3]
    v1 = top_fraction_keys(inv, 40)
    v2 = top_fraction_keys(inv, 90)
    keys1 = {e.canonical for e in v1.entries}
    pairs_v1 = extract_page(page.text, v1, backend)
    pairs_v2 = [p for p in extract_page(page.text, v2, backend) if p.canonical_key in keys1]
    assert sorted(pairs_v1, key=lambda p: p.canonical_key) == sorted(
        pairs_v2, key=lambda p: p.canonical_key
    )


def test_empty_page(small_world):
    assert extract_page("", small_world["inventory"], small_world["backend"]) == []


def test_chunk_invariance_budget_at_least_page(small_world):
    inv = small_world["inventory"]
    backend = small_world["backend"]
    for page in small_world["pages"][:10]:
        unchunked = extract_page(
            page.text, inv, backend, ExtractorConfig(budget=100_000, overlap=0)
        )
        for budget in (len(page.text) or 1, len(page.text) + 5, 2 * len(page.text) + 1):
            chunked = extract_page(
                page.text, inv, backend, ExtractorConfig(budget=budget, overlap=0)
            )
            assert chunked == unchunked


def test_value_spans_match_text_invariant(small_world):
    inv = small_world["inventory"]
    backend = small_world["backend"]
    for page in small_world["pages"][:20]:
        for pair in extract_page(page.text, inv, backend):
            if pair.value is not None:
                assert page.text[slice(*pair.value_span)] == pair.value
            else:
                assert pair.value_span is None


def test_backend_failure_names_key_and_chunk():
    class Exploding:
        def predict(self, query, chunk):
            raise RuntimeError("boom")

    inv = KeyInventory(version=1, entries=(CanonicalKeyEntry("主诉", frozenset(), 1),))
    with pytest.raises(BackendError, match="主诉"):
        extract_page("主诉：x", inv, Exploding())


def test_prediction_file_roundtrip(tmp_path, small_world):
    inv = small_world["inventory"]
    backend = small_world["backend"]
    records = [
        PagePrediction(page.page_id, pair)
        for page in small_world["pages"][:5]
        for pair in extract_page(page.text, inv, backend)
    ]
    path = tmp_path / "preds.jsonl"
    save_predictions(records, path)
    assert load_predictions(path) == records


def test_pair_obj_roundtrip_with_absent_value(small_world):
    inv = small_world["inventory"]
    backend = RuleBackend(inv)
    pairs = extract_page("k0001：", inv, backend)  # header, no value
    matches = [p for p in pairs if p.canonical_key == "k0001"]
    assert matches and matches[0].value is None
    obj = pair_to_obj("p1", matches[0])
    assert obj["value_span"] is None
    assert pair_from_obj(obj).pair == matches[0]
