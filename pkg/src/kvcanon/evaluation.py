"""Matching criteria (exact and boundary-tolerant), micro precision/recall/F1 at
value and pair level, and the inventory-fraction coverage sweep.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .corpus import CorpusSplit, Page
from .errors import ConfigError, ValidationError
from .extract import ExtractorConfig, LogitBackend, PagePrediction, extract_page
from .inventory import KeyInventory, coverage, refresh_frequencies, top_fraction_keys


@dataclass(frozen=True)
class MatchCriterion:
    mode: str  # "em" | "btm"
    delta: int = 3

    def __post_init__(self) -> None:
        if self.mode not in ("em", "btm"):
            raise ValidationError(f"unknown match mode {self.mode!r}")
        if self.delta < 0:
            raise ValidationError("delta must be >= 0")


def em_match(pred_value: str, gold_value: str) -> bool:
    """Strict string equivalence."""
    return pred_value == gold_value


def btm_match(
    pred_span: tuple[int, int], gold_span: tuple[int, int], delta: int = 3
) -> bool:
    """Both boundaries within ``delta`` characters on the same page's axis."""
    return abs(pred_span[0] - gold_span[0]) <= delta and abs(pred_span[1] - gold_span[1]) <= delta


@dataclass(frozen=True)
class EvalReport:
    level: str  # "value" | "pair"
    mode: str
    delta: int
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    coverage: float | None = None

    def to_obj(self) -> dict:
        return {
            "level": self.level,
            "mode": self.mode,
            "delta": self.delta,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            **({"coverage": self.coverage} if self.coverage is not None else {}),
            "conventions": {"precision_when_no_predictions": 0.0},
        }


@dataclass(frozen=True)
class _GoldPair:
    surface_key: str
    key_span: tuple[int, int]
    value: str
    value_span: tuple[int, int]


def _prf(level: str, criterion: MatchCriterion, tp: int, fp: int, fn: int) -> EvalReport:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(level, criterion.mode, criterion.delta, tp, fp, fn, precision, recall, f1)


def _grouped(
    predictions: Sequence[PagePrediction], pages: Sequence[Page]
) -> tuple[dict[tuple[str, str], PagePrediction], dict[tuple[str, str], list[_GoldPair]], int]:
    """Index predictions and gold pairs by (page_id, canonical key).

    Gold pairs without a canonical key can never be matched by key-conditioned
    predictions and are returned as a standing false-negative count.
    """
    preds: dict[tuple[str, str], PagePrediction] = {}
    for record in predictions:
        if record.pair.value is None:
            continue  # header found without a value: not a value prediction
        slot = (record.page_id, record.pair.canonical_key)
        if slot in preds:
            raise ValidationError(
                f"duplicate prediction for page {slot[0]!r} key {slot[1]!r}"
            )
        preds[slot] = record
    gold: dict[tuple[str, str], list[_GoldPair]] = {}
    unresolvable = 0
    for page in pages:
        for ann in page.annotations:
            item = _GoldPair(
                surface_key=ann.surface_key,
                key_span=ann.key_span,
                value=page.value_of(ann),
                value_span=ann.value_span,
            )
            if ann.canonical_key is None:
                unresolvable += 1
                continue
            gold.setdefault((page.page_id, ann.canonical_key), []).append(item)
    return preds, gold, unresolvable


def _count_matches(
    preds: dict[tuple[str, str], PagePrediction],
    gold: dict[tuple[str, str], list[_GoldPair]],
    unresolvable: int,
    matcher: Callable[[PagePrediction, _GoldPair], bool],
) -> tuple[int, int, int]:
    tp = 0
    fp = 0
    fn = unresolvable
    for slot, gold_items in gold.items():
        pred = preds.get(slot)
        if pred is None:
            fn += len(gold_items)
            continue
        if any(matcher(pred, g) for g in gold_items):
            tp += 1
            fn += len(gold_items) - 1
        else:
            fp += 1
            fn += len(gold_items)
    fp += sum(1 for slot in preds if slot not in gold)
    return tp, fp, fn


def value_prf(
    predictions: Sequence[PagePrediction],
    pages: Sequence[Page],
    criterion: MatchCriterion,
) -> EvalReport:
    """Micro P/R/F1 of values conditioned on canonical keys.

    One prediction per (page, key) is matched against the gold value under the
    criterion; gold pairs for keys that were never queried count as false
    negatives. With no predictions, precision reports 0 by convention.
    """
    preds, gold, unresolvable = _grouped(predictions, pages)
    if criterion.mode == "em":
        matcher = lambda p, g: em_match(p.pair.value or "", g.value)  # noqa: E731
    else:
        matcher = lambda p, g: btm_match(p.pair.value_span or (-99, -99), g.value_span, criterion.delta)  # noqa: E731
    tp, fp, fn = _count_matches(preds, gold, unresolvable, matcher)
    return _prf("value", criterion, tp, fp, fn)


def pair_prf(
    predictions: Sequence[PagePrediction],
    pages: Sequence[Page],
    criterion: MatchCriterion,
) -> EvalReport:
    """Micro P/R/F1 over (surface key, value) pairs: both must match.

    EM compares the key and value strings; BTM compares both spans at the
    same tolerance.
    """
    preds, gold, unresolvable = _grouped(predictions, pages)
    if criterion.mode == "em":
        matcher = lambda p, g: (  # noqa: E731
            p.pair.surface_key == g.surface_key and em_match(p.pair.value or "", g.value)
        )
    else:
        matcher = lambda p, g: (  # noqa: E731
            btm_match(p.pair.key_span, g.key_span, criterion.delta)
            and btm_match(p.pair.value_span or (-99, -99), g.value_span, criterion.delta)
        )
    tp, fp, fn = _count_matches(preds, gold, unresolvable, matcher)
    return _prf("pair", criterion, tp, fp, fn)


@dataclass(frozen=True)
class SweepRow:
    fraction: float
    coverage: float
    em: EvalReport
    btm: EvalReport

    def to_obj(self) -> dict:
        return {
            "fraction": self.fraction,
            "coverage": self.coverage,
            "em": self.em.to_obj(),
            "btm": self.btm.to_obj(),
        }


def coverage_sweep(
    pages: Sequence[Page],
    split: CorpusSplit,
    inv: KeyInventory,
    backend: LogitBackend,
    fractions: Sequence[float],
    config: ExtractorConfig | None = None,
    delta: int = 3,
) -> list[SweepRow]:
    """Pair-level EM/BTM metrics on the test split under top-fraction inventory views.

    Entry frequencies are recounted on the train split before ranking (so key
    selection never sees test data); coverage is occurrence-weighted over the
    test split.
    """
    if not fractions:
        raise ConfigError("fractions must be non-empty")
    ranked_inv = refresh_frequencies(inv, split.pages_for("train", pages))
    test_pages = split.pages_for("test", pages)
    rows: list[SweepRow] = []
    for fraction in fractions:
        view = top_fraction_keys(ranked_inv, fraction)
        predictions = [
            PagePrediction(page.page_id, pair)
            for page in test_pages
            for pair in extract_page(page.text, view, backend, config)
        ]
        rows.append(
            SweepRow(
                fraction=fraction,
                coverage=coverage(view, test_pages, "occurrence"),
                em=pair_prf(predictions, test_pages, MatchCriterion("em")),
                btm=pair_prf(predictions, test_pages, MatchCriterion("btm", delta)),
            )
        )
    return rows


SWEEP_CSV_COLUMNS = ["fraction", "coverage", "em_p", "em_r", "em_f1", "btm_p", "btm_r", "btm_f1"]


def sweep_to_csv(rows: Sequence[SweepRow], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    repr(float(row.fraction)),
                    repr(row.coverage),
                    repr(row.em.precision),
                    repr(row.em.recall),
                    repr(row.em.f1),
                    repr(row.btm.precision),
                    repr(row.btm.recall),
                    repr(row.btm.f1),
                ]
            )


def sweep_to_plot_data(rows: Sequence[SweepRow], path: str | Path) -> None:
    payload = {
        "columns": SWEEP_CSV_COLUMNS,
        "rows": [
            [
                float(row.fraction),
                row.coverage,
                row.em.precision,
                row.em.recall,
                row.em.f1,
                row.btm.precision,
                row.btm.recall,
                row.btm.f1,
            ]
            for row in rows
        ],
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8")
