"""Span decoding over backend logits: admissible-end selection, top-N candidate
scoring against the null score, boundary post-processing, and cross-chunk merging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import decode_best_span
from .backends import ChunkLogits
from .errors import ValidationError

TRAILING_PUNCT = set("，。；、：:;,.")


@dataclass(frozen=True)
class SpanCandidate:
    """Chunk-local span: inclusive start, exclusive end, summed logit score."""

    start: int
    end: int
    score: float


def dynamic_admissible_ends(
    start: int,
    end_logits: Sequence[float] | np.ndarray,
    mass: float = 0.9,
    cap: int = 64,
    short_cap: int = 16,
    short_field: bool = False,
) -> set[int]:
    """End positions covering the top ``mass`` of probability for a given start.

    The end softmax is restricted to positions >= start and renormalized; the
    admissible set is the smallest descending-probability prefix whose
    cumulative mass reaches ``mass``, intersected with {e : e - start <= cap}
    (cap 16 instead of 64 for short fields). Reference implementation; the
    decode kernels fuse the same rule.
    """
    logits = np.asarray(end_logits, dtype=np.float64)
    length = logits.shape[0]
    if not (0 <= start < length):
        raise ValidationError(f"start {start} outside chunk of length {length}")
    effective_cap = short_cap if short_field else cap
    tail = logits[start:]
    shifted = np.exp(tail - tail.max())
    probs = shifted / shifted.sum()
    order = sorted(range(len(tail)), key=lambda i: (-tail[i], i))
    admissible: set[int] = set()
    cum = 0.0
    for i in order:
        if not cum < mass:
            break
        cum += float(probs[i])
        if i <= effective_cap:
            admissible.add(start + i)
    return admissible


def decode_spans(
    logits: ChunkLogits,
    *,
    n_top: int = 20,
    mass: float = 0.9,
    cap: int = 64,
    short_cap: int = 16,
    short_field: bool = False,
    null_offset: float = 0.0,
) -> SpanCandidate | None:
    """Best span among top-N start x top-N end candidates, or None for no-answer.

    Candidates require start <= end(inclusive) plus end admissibility; the
    score is start_logit + end_logit, ties to the earliest start then the
    shorter span. No-answer wins when null_score + null_offset exceeds the
    best candidate score (or nothing is admissible).
    """
    starts = np.ascontiguousarray(logits.start_logits, dtype=np.float64)
    ends = np.ascontiguousarray(logits.end_logits, dtype=np.float64)
    if starts.shape != ends.shape or starts.ndim != 1:
        raise ValidationError("start/end logit vectors must be 1-D and equal length")
    if starts.shape[0] and not (
        np.isfinite(starts).all() and np.isfinite(ends).all() and math.isfinite(logits.null_score)
    ):
        raise ValidationError("logits must be finite")
    s, e_incl, score, has_answer = decode_best_span(
        starts,
        ends,
        float(logits.null_score),
        int(n_top),
        float(mass),
        int(short_cap if short_field else cap),
        float(null_offset),
    )
    if not has_answer:
        return None
    return SpanCandidate(start=int(s), end=int(e_incl) + 1, score=float(score))


_HAN_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
)


def _char_class(ch: str) -> str:
    if ch.isspace():
        return "space"
    if "a" <= ch <= "z" or "A" <= ch <= "Z":
        return "latin"
    if "0" <= ch <= "9":
        return "digit"
    code = ord(ch)
    for lo, hi in _HAN_RANGES:
        if lo <= code <= hi:
            return "han"
    return "other"


def _token_range(text: str, pos: int) -> tuple[int, int]:
    """Bounds of the token containing ``pos``.

    Latin, digit and whitespace runs form one token; Han characters and
    punctuation are single-character tokens.
    """
    cls = _char_class(text[pos])
    if cls in ("han", "other"):
        return (pos, pos + 1)
    lo = pos
    while lo > 0 and _char_class(text[lo - 1]) == cls:
        lo -= 1
    hi = pos + 1
    while hi < len(text) and _char_class(text[hi]) == cls:
        hi += 1
    return (lo, hi)


def postprocess_span(text: str, span: tuple[int, int]) -> tuple[int, int] | None:
    """Clean span boundaries: trim whitespace, drop trailing punctuation, snap
    partial tokens inward. Iterates to a fixpoint (idempotent); empty result
    signals no-answer as None.
    """
    s, e = span
    if not (0 <= s <= e <= len(text)):
        raise ValidationError(f"span [{s},{e}) out of range for text of length {len(text)}")
    while True:
        prev = (s, e)
        while s < e and text[s].isspace():
            s += 1
        while e > s and text[e - 1].isspace():
            e -= 1
        while e > s and text[e - 1] in TRAILING_PUNCT:
            e -= 1
        if s < e:
            tok_start, tok_end = _token_range(text, s)
            if tok_start != s:
                s = min(tok_end, e)
            if s < e:
                tok_start, tok_end = _token_range(text, e - 1)
                if tok_end != e:
                    e = max(tok_start, s)
        if (s, e) == prev:
            break
    return None if s >= e else (s, e)


def merge_chunk_candidates(
    results: Sequence[tuple[int, SpanCandidate | None]],
) -> tuple[int, int, float] | None:
    """Select the best candidate across chunks in global page coordinates.

    ``results`` pairs each chunk origin with its (post-processed) candidate.
    Highest score wins; ties to the earliest global start, then the shorter
    span, which also deduplicates identical spans seen from overlapping chunks.
    """
    best: tuple[tuple[float, int, int], tuple[int, int, float]] | None = None
    for origin, cand in results:
        if cand is None:
            continue
        gs, ge = origin + cand.start, origin + cand.end
        key = (-cand.score, gs, ge - gs)
        if best is None or key < best[0]:
            best = (key, (gs, ge, cand.score))
    return None if best is None else best[1]
