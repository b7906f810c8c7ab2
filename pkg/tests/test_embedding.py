from __future__ import annotations

import json
import math

import numpy as np
import pytest

from kvcanon.embedding import (
    FileEmbeddingProvider,
    HashedBigramProvider,
    centroid,
    cosine,
)
from kvcanon.errors import ValidationError


def test_bigram_construction_for_ab():
    provider = HashedBigramProvider(dim=256)
    buckets = {provider.bucket(b) for b in ("^a", "ab", "b$")}
    vec = provider.embed("ab")
    nonzero = set(np.nonzero(vec.values)[0].tolist())
    assert len(buckets) == 3  # no collisions for this input
    assert nonzero == buckets
    assert vec.values[list(nonzero)[0]] == pytest.approx(1 / math.sqrt(3))


def test_embedding_deterministic_and_unit():
    provider = HashedBigramProvider()
    a = provider.embed("既往史")
    b = provider.embed("既往史")
    assert np.array_equal(a.values, b.values)
    assert np.linalg.norm(a.values) == pytest.approx(1.0, abs=1e-9)


def test_cosine_orders_related_above_unrelated():
    provider = HashedBigramProvider()
    related = cosine(provider.embed("既往史"), provider.embed("既往病史"))
    unrelated = cosine(provider.embed("既往史"), provider.embed("手术记录"))
    assert related > unrelated
    # independent bigram-overlap computation (collision-free inputs verified)
    def bigrams(s):
        padded = "^" + s + "$"
        return [padded[i : i + 2] for i in range(len(padded) - 1)]

    a, b = bigrams("既往史"), bigrams("既往病史")
    buckets = {provider.bucket(bg) for bg in set(a) | set(b)}
    assert len(buckets) == len(set(a) | set(b))
    overlap = sum(min(a.count(bg), b.count(bg)) for bg in set(a))
    expected = overlap / math.sqrt(len(a) * len(b))
    assert related == pytest.approx(expected)


def test_empty_key_rejected():
    with pytest.raises(ValidationError):
        HashedBigramProvider().embed("")


def test_centroid_unit_norm():
    provider = HashedBigramProvider()
    c = centroid([provider.embed(k) for k in ("既往史", "既往病史", "既往疾病")])
    assert np.linalg.norm(c.values) == pytest.approx(1.0, abs=1e-9)


def test_file_provider_roundtrip(tmp_path):
    path = tmp_path / "vecs.jsonl"
    rows = [
        {"key": "既往史", "vector": [3.0, 4.0]},
        {"key": "主诉", "vector": [0.0, 2.0]},
    ]
    path.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in rows), encoding="utf-8")
    provider = FileEmbeddingProvider(path)
    assert provider.dim == 2
    vec = provider.embed("既往史")
    assert vec.values == pytest.approx([0.6, 0.8])
    with pytest.raises(ValidationError, match="主诉错"):
        provider.embed("主诉错")
