from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kvcanon.backends import RuleBackend
from kvcanon.corpus import deidentify, split_by_report_hash
from kvcanon.synthesis import GeneratorConfig, generate_synthetic_corpus


@pytest.fixture(scope="session")
def small_world():
    """A compact clean synthetic corpus with its planted inventory and backend."""
    corpus = generate_synthetic_corpus(
        GeneratorConfig(n_keys=25, n_pages=80, seed=11, keys_per_page=(2, 6))
    )
    pages = [deidentify(p, corpus.pii_selectors.get(p.page_id, [])) for p in corpus.pages]
    split = split_by_report_hash(pages, seed=11)
    backend = RuleBackend(corpus.inventory)
    return {
        "pages": pages,
        "inventory": corpus.inventory,
        "split": split,
        "backend": backend,
        "raw": corpus,
    }
