"""Logit backends: the deterministic rule-based reference and an external
line-delimited JSON process backend.

A backend maps (query, chunk) to per-position start/end logits plus a null
score; everything downstream (decoding, merging, metrics) is backend-agnostic,
so a trained model can be slotted in through the external protocol.
"""

from __future__ import annotations

import json
import subprocess
import threading
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BackendError
from .inventory import KeyInventory
from .querying import Chunk, ExtractionQuery

VALUE_DELIMS = "：:＝="

HIT_LOGIT = 10.0
MISS_LOGIT = -10.0
NULL_WHEN_PRESENT = -10.0
NULL_WHEN_ABSENT = 5.0


@dataclass(frozen=True)
class ChunkLogits:
    """Per-chunk start/end logit vectors (length = chunk length) and null score."""

    start_logits: np.ndarray
    end_logits: np.ndarray
    null_score: float


class RuleBackend:
    """Deterministic reference backend built on exact surface-form matching.

    It emits peaked logits (+10 at the intended boundary, -10 elsewhere) so
    the decoder recovers exactly the rule's answer: the earliest, longest
    occurrence of any known form of the queried key; for value queries, the
    text after an optional delimiter up to the next known key, line break, or
    chunk end. The inventory given here is the backend's knowledge and may be
    wider than the view a caller chooses to query.
    """

    def __init__(self, inventory: KeyInventory, max_cached_chunks: int = 8192):
        self._inventory = inventory
        self._forms_by_canonical: dict[str, list[str]] = {
            e.canonical: [e.canonical, *sorted(e.aliases)] for e in inventory.entries
        }
        self._all_forms = sorted(inventory.known_forms())
        self._max_cached_chunks = max_cached_chunks
        self._terminator_cache: dict[str, list[int]] = {}
        self._lock = threading.Lock()

    @property
    def inventory(self) -> KeyInventory:
        return self._inventory

    def _known_form_positions(self, text: str) -> list[int]:
        with self._lock:
            hit = self._terminator_cache.get(text)
        if hit is not None:
            return hit
        positions: set[int] = set()
        for form in self._all_forms:
            start = 0
            while True:
                idx = text.find(form, start)
                if idx < 0:
                    break
                positions.add(idx)
                start = idx + 1
        ordered = sorted(positions)
        with self._lock:
            if len(self._terminator_cache) >= self._max_cached_chunks:
                self._terminator_cache.clear()
            self._terminator_cache[text] = ordered
        return ordered

    def _find_key(self, text: str, canonical: str) -> tuple[int, int] | None:
        """Earliest occurrence of any form of the key; longest form on position ties."""
        forms = self._forms_by_canonical.get(canonical)
        if not forms:
            return None
        best: tuple[int, int] | None = None
        for form in forms:
            idx = text.find(form)
            if idx < 0:
                continue
            if best is None or idx < best[0] or (idx == best[0] and len(form) > best[1] - best[0]):
                best = (idx, idx + len(form))
        return best

    def _value_span(self, text: str, key_end: int) -> tuple[int, int] | None:
        pos = key_end
        if pos < len(text) and text[pos] in VALUE_DELIMS:
            pos += 1
        elif pos < len(text) and text[pos] == " ":
            pos += 1
        while pos < len(text) and text[pos] == " ":
            pos += 1
        end = text.find("\n", pos)
        if end < 0:
            end = len(text)
        positions = self._known_form_positions(text)
        idx = bisect_left(positions, pos)
        if idx < len(positions) and positions[idx] < end:
            end = positions[idx]
        if pos >= end:
            return None
        return (pos, end)

    def predict(self, query: ExtractionQuery, chunk: Chunk) -> ChunkLogits:
        length = len(chunk.text)
        start = np.full(length, MISS_LOGIT)
        end = np.full(length, MISS_LOGIT)
        key_span = self._find_key(chunk.text, query.canonical_key)
        target: tuple[int, int] | None = None
        if key_span is not None:
            target = key_span if query.kind == "key" else self._value_span(chunk.text, key_span[1])
        if target is None:
            return ChunkLogits(start, end, NULL_WHEN_ABSENT)
        start[target[0]] = HIT_LOGIT
        end[target[1] - 1] = HIT_LOGIT
        return ChunkLogits(start, end, NULL_WHEN_PRESENT)


class ExternalProcessBackend:
    """Line-delimited JSON protocol over a child process's standard streams.

    Request: {"query": "...", "chunk": "..."}; response: {"start_logits": [...],
    "end_logits": [...], "null_score": x}, one response per request, in order.
    Calls are serialized (single-flight) around the pipe pair.
    """

    def __init__(self, command: Sequence[str]):
        self._command = list(command)
        self._lock = threading.Lock()
        try:
            self._proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise BackendError(f"failed to start backend {self._command}: {exc}") from exc

    def predict(self, query: ExtractionQuery, chunk: Chunk) -> ChunkLogits:
        request = json.dumps(
            {"query": query.rendered_text, "chunk": chunk.text}, ensure_ascii=False
        )
        with self._lock:
            if self._proc.poll() is not None:
                raise BackendError("backend process has exited")
            assert self._proc.stdin is not None and self._proc.stdout is not None
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        if not line:
            raise BackendError("backend closed its output stream")
        try:
            obj = json.loads(line)
            start = np.asarray(obj["start_logits"], dtype=np.float64)
            end = np.asarray(obj["end_logits"], dtype=np.float64)
            null_score = float(obj["null_score"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed backend response: {exc}") from exc
        if start.shape[0] != len(chunk.text) or end.shape[0] != len(chunk.text):
            raise BackendError(
                f"backend returned {start.shape[0]}/{end.shape[0]} logits "
                f"for a chunk of length {len(chunk.text)}"
            )
        return ChunkLogits(start, end, null_score)

    def close(self) -> None:
        with self._lock:
            if self._proc.poll() is None:
                assert self._proc.stdin is not None
                self._proc.stdin.close()
                try:
                    self._proc.wait(timeout=5)
                except subprocess.TimeoutExpired:
                    self._proc.kill()
                    self._proc.wait()

    def __enter__(self) -> "ExternalProcessBackend":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()
