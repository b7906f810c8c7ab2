"""Page extraction: run key and value queries for every canonical key in a view
over all chunks, decode, post-process, and merge into extracted pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .backends import ChunkLogits
from .decoder import SpanCandidate, decode_spans, merge_chunk_candidates, postprocess_span
from .errors import BackendError, CorpusFormatError
from .inventory import KeyInventory
from .querying import Chunk, ExtractionQuery, build_key_query, build_value_query, chunk_page


class LogitBackend(Protocol):
    def predict(self, query: ExtractionQuery, chunk: Chunk) -> ChunkLogits: ...


@dataclass(frozen=True)
class ExtractorConfig:
    budget: int = 448
    overlap: int = 64
    n_top: int = 20
    mass: float = 0.9
    cap: int = 64
    short_cap: int = 16
    null_offset: float = 0.0
    max_aliases: int = 5


@dataclass(frozen=True)
class ExtractedPair:
    """One extracted (surface key, value) for a canonical key, page coordinates.

    A pair is only emitted when the key query located a surface form; the
    value may still be absent (header present, no parseable content).
    """

    canonical_key: str
    surface_key: str
    key_span: tuple[int, int]
    value_span: tuple[int, int] | None
    value: str | None
    score: float


def _run_query(
    query: ExtractionQuery,
    chunks: Sequence[Chunk],
    backend: LogitBackend,
    config: ExtractorConfig,
    short_field: bool,
) -> tuple[int, int, float] | None:
    results: list[tuple[int, SpanCandidate | None]] = []
    for chunk in chunks:
        try:
            logits = backend.predict(query, chunk)
        except Exception as exc:
            raise BackendError(
                f"backend failed for key {query.canonical_key!r} "
                f"({query.kind} query) on chunk at offset {chunk.origin}: {exc}"
            ) from exc
        cand = decode_spans(
            logits,
            n_top=config.n_top,
            mass=config.mass,
            cap=config.cap,
            short_cap=config.short_cap,
            short_field=short_field,
            null_offset=config.null_offset,
        )
        if cand is not None:
            cleaned = postprocess_span(chunk.text, (cand.start, cand.end))
            cand = (
                SpanCandidate(cleaned[0], cleaned[1], cand.score) if cleaned is not None else None
            )
        results.append((chunk.origin, cand))
    return merge_chunk_candidates(results)


def extract_page(
    text: str,
    view: KeyInventory,
    backend: LogitBackend,
    config: ExtractorConfig | None = None,
) -> list[ExtractedPair]:
    """Extract one pair per canonical key in ``view`` from a page.

    Queries are independent per key, so restricting the view only removes
    pairs; runtime is linear in |view| x page length. A pair is emitted iff
    the key query found a surface form on the page.
    """
    config = config or ExtractorConfig()
    chunks = chunk_page(text, config.budget, config.overlap)
    pairs: list[ExtractedPair] = []
    for entry in view.entries:
        key_query = build_key_query(view, entry.canonical, config.max_aliases)
        key_hit = _run_query(key_query, chunks, backend, config, short_field=False)
        if key_hit is None:
            continue
        value_query = build_value_query(view, entry.canonical, config.max_aliases)
        value_hit = _run_query(value_query, chunks, backend, config, short_field=entry.short_field)
        ks, ke, key_score = key_hit
        if value_hit is not None:
            vs, ve, value_score = value_hit
            pairs.append(
                ExtractedPair(
                    canonical_key=entry.canonical,
                    surface_key=text[ks:ke],
                    key_span=(ks, ke),
                    value_span=(vs, ve),
                    value=text[vs:ve],
                    score=value_score,
                )
            )
        else:
            pairs.append(
                ExtractedPair(
                    canonical_key=entry.canonical,
                    surface_key=text[ks:ke],
                    key_span=(ks, ke),
                    value_span=None,
                    value=None,
                    score=key_score,
                )
            )
    return pairs


# -- prediction files --------------------------------------------------------


@dataclass(frozen=True)
class PagePrediction:
    page_id: str
    pair: ExtractedPair


def pair_to_obj(page_id: str, pair: ExtractedPair) -> dict:
    return {
        "page_id": page_id,
        "canonical_key": pair.canonical_key,
        "surface_key": pair.surface_key,
        "key_span": list(pair.key_span),
        "value_span": list(pair.value_span) if pair.value_span else None,
        "value": pair.value,
        "score": pair.score,
    }


def pair_from_obj(obj: dict) -> PagePrediction:
    value_span = obj.get("value_span")
    return PagePrediction(
        page_id=str(obj["page_id"]),
        pair=ExtractedPair(
            canonical_key=str(obj["canonical_key"]),
            surface_key=str(obj["surface_key"]),
            key_span=(int(obj["key_span"][0]), int(obj["key_span"][1])),
            value_span=(int(value_span[0]), int(value_span[1])) if value_span else None,
            value=obj.get("value"),
            score=float(obj.get("score", 0.0)),
        ),
    )


def save_predictions(records: Sequence[PagePrediction], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fp:
        for record in records:
            fp.write(json.dumps(pair_to_obj(record.page_id, record.pair), ensure_ascii=False) + "\n")


def load_predictions(path: str | Path) -> list[PagePrediction]:
    records: list[PagePrediction] = []
    with Path(path).open("r", encoding="utf-8") as fp:
        for line_no, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                records.append(pair_from_obj(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, IndexError) as exc:
                raise CorpusFormatError(f"{path}: line {line_no}: {exc}") from exc
    return records
