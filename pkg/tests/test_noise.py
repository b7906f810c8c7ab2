from __future__ import annotations

import pytest

from fixtures import page_with_pairs
from kvcanon.corpus import Page, validate_page
from kvcanon.errors import ValidationError
from kvcanon.noise import ConfusionTable, NoiseConfig, inject_ocr_noise
from kvcanon.synthesis import GeneratorConfig, generate_synthetic_corpus


def test_zero_rates_identity():
    page = page_with_pairs("r1-p1", [("主诉", "头痛 三天", "主诉"), ("既往史", "高血压", "既往史")])
    out = inject_ocr_noise(page, NoiseConfig(), seed=123)
    assert out == page


def test_rates_validated():
    with pytest.raises(ValidationError):
        NoiseConfig(substitution=1.5)


def test_single_insertion_shifts_spans(monkeypatch):
    # force exactly one insertion before the first character: both annotation
    # spans shift right by one and still match their strings
    page = page_with_pairs("r1-p1", [("主诉", "头痛", "主诉")])

    class OneShot:
        def __init__(self, *_args):
            self.fired = False

        def random(self):
            if not self.fired:
                self.fired = True
                return 0.0
            return 1.0

        def choice(self, seq):
            return seq[0]

    import kvcanon.noise as noise_mod

    monkeypatch.setattr(noise_mod.random, "Random", OneShot)
    out = inject_ocr_noise(page, NoiseConfig(whitespace_insertion=0.5), seed=0)
    assert out.text == " " + page.text
    ann = out.annotations[0]
    assert ann.key_span == (1, 3)
    assert ann.value_span == (4, 6)
    assert out.text[slice(*ann.key_span)] == "主诉"


def test_determinism_per_seed():
    page = page_with_pairs("r1-p1", [("既往史", "高血压病史十年", "既往史")] * 1)
    config = NoiseConfig.uniform(0.2)
    a = inject_ocr_noise(page, config, seed=9)
    b = inject_ocr_noise(page, config, seed=9)
    c = inject_ocr_noise(page, config, seed=10)
    assert a == b
    assert a != c


def test_placeholder_never_edited():
    text = "姓名：**\n主诉：头痛"
    page = Page("r1", "r1-p1", text, ())
    for seed in range(40):
        out = inject_ocr_noise(page, NoiseConfig.uniform(0.5), seed=seed)
        assert "**" in out.text  # the placeholder is never split or mutated


def test_bulk_offset_soundness_five_percent():
    corpus = generate_synthetic_corpus(GeneratorConfig(n_keys=40, n_pages=300, seed=21))
    table = ConfusionTable.default()
    total = 0
    for page in corpus.pages:
        noisy = inject_ocr_noise(page, NoiseConfig.uniform(0.05), seed=77, table=table)
        assert len(noisy.annotations) == len(page.annotations)
        for ann in noisy.annotations:
            assert noisy.text[slice(*ann.key_span)] == ann.surface_key
            vs, ve = ann.value_span
            assert 0 <= vs < ve <= len(noisy.text)
            total += 1
        validate_page(noisy)
    assert total > 1000
