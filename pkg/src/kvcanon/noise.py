"""Alignment-preserving OCR noise: confusable-character substitution, whitespace
insertion/deletion, and spurious line breaks, with exact annotation-offset updates.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .corpus import DEID_PLACEHOLDER, Page, validate_page
from .errors import ValidationError


@dataclass(frozen=True)
class NoiseConfig:
    """Per-channel edit rates, each applied independently per character position."""

    substitution: float = 0.0
    whitespace_insertion: float = 0.0
    whitespace_deletion: float = 0.0
    linebreak_insertion: float = 0.0

    def __post_init__(self) -> None:
        for name in (
            "substitution",
            "whitespace_insertion",
            "whitespace_deletion",
            "linebreak_insertion",
        ):
            rate = getattr(self, name)
            if not (0.0 <= rate <= 1.0):
                raise ValidationError(f"noise rate {name}={rate} outside [0, 1]")

    @classmethod
    def uniform(cls, rate: float) -> "NoiseConfig":
        return cls(rate, rate, rate, rate)


class ConfusionTable:
    """Visually-similar character groups; substitution picks another group member."""

    def __init__(self, groups: list[list[str]]):
        self._choices: dict[str, list[str]] = {}
        for group in groups:
            for ch in group:
                if len(ch) != 1:
                    raise ValidationError(f"confusion entries must be single characters: {ch!r}")
                self._choices.setdefault(ch, []).extend(c for c in group if c != ch)

    @classmethod
    def default(cls) -> "ConfusionTable":
        data = json.loads(
            resources.files("kvcanon.data").joinpath("confusion_pairs.json").read_text("utf-8")
        )
        return cls(data["groups"])

    @classmethod
    def from_file(cls, path: str | Path) -> "ConfusionTable":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data["groups"])

    def confusable(self, ch: str) -> bool:
        return ch in self._choices

    def substitute(self, ch: str, rng: random.Random) -> str:
        return rng.choice(self._choices[ch])


def _protected_positions(text: str) -> set[int]:
    """Character indices inside de-identification placeholders (edits must not cross)."""
    protected: set[int] = set()
    start = 0
    while True:
        idx = text.find(DEID_PLACEHOLDER, start)
        if idx < 0:
            return protected
        protected.update(range(idx, idx + len(DEID_PLACEHOLDER)))
        start = idx + len(DEID_PLACEHOLDER)


def inject_ocr_noise(
    page: Page,
    rates: NoiseConfig,
    seed: int,
    table: ConfusionTable | None = None,
) -> Page:
    """Corrupt a page while keeping every annotation aligned.

    Insertions at a span boundary fall outside the span; edits strictly inside
    are absorbed, and each annotation's surface string is re-read from the
    mutated text so that text[key_span] == surface_key always holds. Edits
    never touch the characters of a "**" placeholder nor insert inside one.
    Deterministic for a fixed (page, rates, seed).
    """
    if table is None:
        table = ConfusionTable.default()
    # str seeds hash via sha512 inside Random, stable across processes/platforms
    rng = random.Random(f"{seed}:{page.page_id}")
    text = page.text
    protected = _protected_positions(text)

    out: list[str] = []
    start_of = [0] * (len(text) + 1)
    end_of = [0] * (len(text) + 1)
    for i, ch in enumerate(text):
        # insertion "before position i"; skipped strictly inside a placeholder
        inside_placeholder = i in protected and (i - 1) in protected
        if not inside_placeholder:
            if rates.whitespace_insertion and rng.random() < rates.whitespace_insertion:
                out.append(" ")
            if rates.linebreak_insertion and rng.random() < rates.linebreak_insertion:
                out.append("\n")
        start_of[i] = len(out)
        if i in protected:
            out.append(ch)
        elif ch.isspace() and rates.whitespace_deletion and rng.random() < rates.whitespace_deletion:
            pass  # deleted
        elif (
            rates.substitution
            and table.confusable(ch)
            and rng.random() < rates.substitution
        ):
            out.append(table.substitute(ch, rng))
        else:
            out.append(ch)
        end_of[i] = len(out)
    start_of[len(text)] = len(out)

    new_text = "".join(out)
    new_annotations = []
    for ann in page.annotations:
        ks, ke = ann.key_span
        vs, ve = ann.value_span
        new_key = (start_of[ks], end_of[ke - 1])
        new_val = (start_of[vs], end_of[ve - 1])
        if new_key[0] >= new_key[1] or new_val[0] >= new_val[1]:
            continue  # span fully consumed by whitespace deletion
        new_annotations.append(
            replace(
                ann,
                key_span=new_key,
                value_span=new_val,
                surface_key=new_text[new_key[0] : new_key[1]],
            )
        )
    noisy = Page(page.report_id, page.page_id, new_text, tuple(new_annotations))
    validate_page(noisy)
    return noisy
