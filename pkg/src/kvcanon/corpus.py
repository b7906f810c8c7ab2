"""Page corpus: domain types, JSONL I/O, hash splits, frequency profiling, de-identification.

Offsets throughout are Unicode scalar (character) indices into ``Page.text``,
never bytes and never UTF-16 units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusFormatError, ValidationError

DEID_PLACEHOLDER = "**"

_FNV64_OFFSET = 0xCBF29CE484222325
_FNV64_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a; platform-stable by construction."""
    h = _FNV64_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV64_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class KVAnnotation:
    """A gold (surface-key span, value span) pair with optional canonical key.

    Spans are [start, end) character offsets into the owning page's text. The
    gold value string is always read from the page text; only the surface key
    is stored redundantly (and must match the text exactly).
    """

    key_span: tuple[int, int]
    value_span: tuple[int, int]
    surface_key: str
    canonical_key: str | None = None


@dataclass(frozen=True)
class Page:
    """One OCR page: immutable after construction."""

    report_id: str
    page_id: str
    text: str
    annotations: tuple[KVAnnotation, ...] = ()

    def value_of(self, ann: KVAnnotation) -> str:
        s, e = ann.value_span
        return self.text[s:e]


@dataclass(frozen=True)
class CorpusSplit:
    """Report-level partition into train/validation/test."""

    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]

    def split_of(self, report_id: str) -> str:
        if report_id in set(self.train):
            return "train"
        if report_id in set(self.validation):
            return "validation"
        if report_id in set(self.test):
            return "test"
        raise KeyError(report_id)

    def pages_for(self, name: str, pages: Sequence[Page]) -> list[Page]:
        wanted = set(getattr(self, "validation" if name == "val" else name))
        return [p for p in pages if p.report_id in wanted]


def validate_page(page: Page) -> None:
    """Raise ValidationError unless every annotation satisfies the offset invariants."""
    n = len(page.text)
    for ann in page.annotations:
        for label, (s, e) in (("key_span", ann.key_span), ("value_span", ann.value_span)):
            if not (0 <= s < e <= n):
                raise ValidationError(
                    f"page {page.page_id!r}: {label} [{s},{e}) out of range for text of length {n}"
                )
        ks, ke = ann.key_span
        if page.text[ks:ke] != ann.surface_key:
            raise ValidationError(
                f"page {page.page_id!r}: key_span text {page.text[ks:ke]!r} "
                f"!= surface_key {ann.surface_key!r}"
            )


def _annotation_from_obj(obj: dict) -> KVAnnotation:
    return KVAnnotation(
        key_span=(int(obj["key_span"][0]), int(obj["key_span"][1])),
        value_span=(int(obj["value_span"][0]), int(obj["value_span"][1])),
        surface_key=str(obj["surface_key"]),
        canonical_key=obj.get("canonical_key"),
    )


def page_to_obj(page: Page) -> dict:
    return {
        "report_id": page.report_id,
        "page_id": page.page_id,
        "text": page.text,
        "annotations": [
            {
                "key_span": list(a.key_span),
                "value_span": list(a.value_span),
                "surface_key": a.surface_key,
                "canonical_key": a.canonical_key,
            }
            for a in page.annotations
        ],
    }


def page_from_obj(obj: dict) -> Page:
    page = Page(
        report_id=str(obj["report_id"]),
        page_id=str(obj["page_id"]),
        text=str(obj["text"]),
        annotations=tuple(_annotation_from_obj(a) for a in obj.get("annotations", [])),
    )
    validate_page(page)
    return page


def load_corpus(path: str | Path) -> list[Page]:
    """Load a JSONL corpus (one page object per line, UTF-8).

    Raises CorpusFormatError naming the line number on malformed JSON, and
    ValidationError naming the page on invariant violations.
    """
    pages: list[Page] = []
    with Path(path).open("r", encoding="utf-8") as fp:
        for line_no, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}: line {line_no}: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError(f"{path}: line {line_no}: expected a JSON object")
            try:
                pages.append(page_from_obj(obj))
            except (KeyError, TypeError, IndexError) as exc:
                raise CorpusFormatError(f"{path}: line {line_no}: missing/invalid field: {exc}") from exc
    return pages


def save_corpus(pages: Iterable[Page], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fp:
        for page in pages:
            fp.write(json.dumps(page_to_obj(page), ensure_ascii=False) + "\n")


def split_by_report_hash(
    pages: Sequence[Page], ratios: tuple[int, int, int] = (7, 1, 2), seed: int = 0
) -> CorpusSplit:
    """Partition report ids by a stable 64-bit FNV-1a hash of (report_id, seed).

    Pages of one report always share a split; the assignment depends only on
    (report_id, seed), so it is invariant to corpus order and to which other
    reports are present.
    """
    if any(r <= 0 for r in ratios):
        raise ValidationError(f"ratios must be positive, got {ratios}")
    total = sum(ratios)
    buckets: dict[str, list[str]] = {"train": [], "validation": [], "test": []}
    names = ("train", "validation", "test")
    for report_id in sorted({p.report_id for p in pages}):
        h = fnv1a64(report_id.encode("utf-8") + b"\x00" + str(seed).encode("ascii"))
        slot = h % total
        if slot < ratios[0]:
            name = names[0]
        elif slot < ratios[0] + ratios[1]:
            name = names[1]
        else:
            name = names[2]
        buckets[name].append(report_id)
    return CorpusSplit(
        train=tuple(buckets["train"]),
        validation=tuple(buckets["validation"]),
        test=tuple(buckets["test"]),
    )


@dataclass(frozen=True)
class ProfileRow:
    surface_key: str
    count: int
    cumulative_coverage: float


def key_frequency_profile(pages: Sequence[Page]) -> list[ProfileRow]:
    """Rank-frequency table of surface keys with a cumulative coverage curve.

    Sorted by descending count, ties lexicographic; cumulative coverage after
    rank r is (sum of top-r counts) / (total count).
    """
    counts: dict[str, int] = {}
    for page in pages:
        for ann in page.annotations:
            counts[ann.surface_key] = counts.get(ann.surface_key, 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    total = sum(counts.values())
    rows: list[ProfileRow] = []
    running = 0
    for key, count in ordered:
        running += count
        rows.append(ProfileRow(key, count, running / total))
    return rows


def _remap_offset(cuts: list[tuple[int, int, int]], pos: int) -> int:
    """Map an original offset through non-overlapping replacements.

    ``cuts`` holds (start, end, delta_before) per replaced region, where
    delta_before is the cumulative length change strictly before ``start``.
    Positions inside a replaced region map to None semantics handled by caller.
    """
    delta = 0
    for start, end, delta_before in cuts:
        if pos <= start:
            break
        if pos >= end:
            delta = delta_before + (len(DEID_PLACEHOLDER) - (end - start))
        else:
            return -1
    return pos + delta


def deidentify(page: Page, selectors: Sequence[tuple[int, int]]) -> Page:
    """Replace each selected span with the ``**`` placeholder.

    Annotation offsets are remapped; an annotation is dropped when either of
    its spans intersects a replaced region (notably: wholly inside). Selectors
    must not overlap; callers pre-merge.
    """
    if not selectors:
        return page
    sel = sorted((int(s), int(e)) for s, e in selectors)
    for (s1, e1), (s2, e2) in zip(sel, sel[1:]):
        if s2 < e1:
            raise ValidationError(f"overlapping selectors [{s1},{e1}) and [{s2},{e2})")
    for s, e in sel:
        if not (0 <= s < e <= len(page.text)):
            raise ValidationError(f"selector [{s},{e}) out of range on page {page.page_id!r}")

    pieces: list[str] = []
    cuts: list[tuple[int, int, int]] = []
    prev = 0
    delta = 0
    for s, e in sel:
        pieces.append(page.text[prev:s])
        pieces.append(DEID_PLACEHOLDER)
        cuts.append((s, e, delta))
        delta += len(DEID_PLACEHOLDER) - (e - s)
        prev = e
    pieces.append(page.text[prev:])
    new_text = "".join(pieces)

    def map_span(span: tuple[int, int]) -> tuple[int, int] | None:
        s, e = span
        for cs, ce, _ in cuts:
            if s < ce and e > cs:  # any intersection with a replaced region
                return None
        return (_remap_offset(cuts, s), _remap_offset(cuts, e))

    kept: list[KVAnnotation] = []
    for ann in page.annotations:
        new_key = map_span(ann.key_span)
        new_val = map_span(ann.value_span)
        if new_key is None or new_val is None:
            continue
        ks, ke = new_key
        kept.append(
            replace(ann, key_span=new_key, value_span=new_val, surface_key=new_text[ks:ke])
        )
    out = Page(page.report_id, page.page_id, new_text, tuple(kept))
    validate_page(out)
    return out
