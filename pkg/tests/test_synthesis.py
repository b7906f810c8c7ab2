from __future__ import annotations

import random

import pytest

from kvcanon.corpus import save_corpus, validate_page
from kvcanon.errors import ConfigError
from kvcanon.synthesis import (
    GeneratorConfig,
    generate_synthetic_corpus,
    zipf_weights,
)
from oracles import zipf_proportions


def test_single_key_single_slot_page():
    config = GeneratorConfig(
        n_keys=1,
        n_pages=1,
        mean_cluster_size=1.0,
        keys_per_page=(1, 1),
        include_pii=False,
        seed=4,
    )
    corpus = generate_synthetic_corpus(config)
    page = corpus.pages[0]
    assert page.text.startswith("k0001")
    assert len(page.annotations) == 1
    ann = page.annotations[0]
    assert ann.surface_key == "k0001"
    assert ann.canonical_key == "k0001"
    assert page.text[slice(*ann.key_span)] == "k0001"
    validate_page(page)


def test_invalid_configs_rejected():
    with pytest.raises(ConfigError):
        GeneratorConfig(n_keys=0)
    with pytest.raises(ConfigError):
        GeneratorConfig(zipf_exponent=0.0)
    with pytest.raises(ConfigError):
        GeneratorConfig(keys_per_page=(5, 2))


def test_zipf_weights_match_closed_form():
    weights = zipf_weights(5, 1.0)
    expected = [w / sum([1, 1 / 2, 1 / 3, 1 / 4, 1 / 5]) for w in [1, 1 / 2, 1 / 3, 1 / 4, 1 / 5]]
    assert weights == pytest.approx(expected)


def test_zipf_sampling_proportions_against_closed_form():
    # direct sampling with the generator's weights vs analytic proportions
    n, s, draws = 5, 1.0, 100_000
    rng = random.Random("zipf-check")
    weights = zipf_weights(n, s)
    counts = [0] * n
    for idx in rng.choices(range(n), weights=weights, k=draws):
        counts[idx] += 1
    expected = zipf_proportions(n, s)
    for rank in range(n):
        assert abs(counts[rank] / draws - expected[rank]) < 0.02


def test_corpus_key_usage_is_long_tailed():
    corpus = generate_synthetic_corpus(GeneratorConfig(n_keys=50, n_pages=400, seed=9))
    counts = {}
    for page in corpus.pages:
        for ann in page.annotations:
            if ann.canonical_key and ann.canonical_key.startswith("k"):
                counts[ann.canonical_key] = counts.get(ann.canonical_key, 0) + 1
    # rank-1 key clearly dominates the median key
    ordered = sorted(counts.values(), reverse=True)
    assert ordered[0] > 3 * ordered[len(ordered) // 2]


def test_deterministic_byte_identical(tmp_path):
    config = GeneratorConfig(n_keys=15, n_pages=30, seed=33)
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    save_corpus(generate_synthetic_corpus(config).pages, a)
    save_corpus(generate_synthetic_corpus(config).pages, b)
    assert a.read_bytes() == b.read_bytes()


def test_planted_inventory_consistency():
    corpus = generate_synthetic_corpus(GeneratorConfig(n_keys=30, n_pages=200, seed=5))
    inv = corpus.inventory
    assert len(inv.entries) == 30
    # every gold surface form resolves to its planted canonical
    for page in corpus.pages:
        for ann in page.annotations:
            if ann.canonical_key == "姓名":
                continue
            assert inv.canonicalize(ann.surface_key) == ann.canonical_key
    # frequencies count every surface occurrence of the entry
    gold_counts: dict[str, int] = {}
    for page in corpus.pages:
        for ann in page.annotations:
            if ann.canonical_key != "姓名":
                gold_counts[ann.canonical_key] = gold_counts.get(ann.canonical_key, 0) + 1
    for entry in inv.entries:
        assert entry.frequency == gold_counts.get(entry.canonical, 0)


def test_annotations_cover_exact_spans(small_world):
    for page in small_world["pages"]:
        for ann in page.annotations:
            assert page.text[slice(*ann.key_span)] == ann.surface_key
            vs, ve = ann.value_span
            assert 0 <= vs < ve <= len(page.text)
            assert "\n" not in page.text[vs:ve]
